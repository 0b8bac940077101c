//! Characteristic ODE of the contact Hamiltonian, fixed points with their
//! linearization, unstable-manifold wave fronts, and assembly of the two
//! stationary solutions for c > 0.
//!
//! The characteristic system in extended phase space (x, p, u) is
//!
//! ```text
//!     x' = H_p,   p' = -H_x - H_u p,   u' = p H_p - H + c
//! ```
//!
//! so the augmented energy H - c obeys (H - c)' = -H_u (H - c): the shell
//! H = c is invariant and attracts nothing off itself — trajectories meant to
//! live on it are seeded on it explicitly.

use crate::model::{ContactModel, Lambda, PeriodicGrid};
use std::f64::consts::TAU;

/// Default offset along the unstable eigenvector when shooting a manifold.
pub const DEFAULT_EPS: f64 = 1e-6;
/// Default integration step for tracing.
pub const DEFAULT_H: f64 = 1e-3;
/// Hard cap on traced flow time per branch.
const TRACE_T_CAP: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactState {
    pub x: f64,
    pub p: f64,
    pub u: f64,
}

impl ContactState {
    pub fn new(x: f64, p: f64, u: f64) -> ContactState {
        ContactState { x, p, u }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite() && self.u.is_finite()
    }
}

#[derive(Debug)]
pub enum CharacteristicsError {
    /// Integration left the finite range; carries the flow time reached.
    Blowup { t: f64 },
    /// Linearization eigenvalues are not a real pair with opposite signs.
    NotHyperbolic { trace: f64, discriminant: f64 },
    /// The probed state does not annihilate the vector field.
    NotAFixedPoint { speed: f64 },
    EpsOutOfRange(f64),
    ImmediateTurning,
    /// Branch neither turned nor left the period within the time cap.
    TraceStalled,
    /// Traced fronts do not cover the circle.
    FrontTooShort,
    MissingFixedPoints,
    BadSpan { t0: f64, t1: f64 },
}

impl std::fmt::Display for CharacteristicsError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use CharacteristicsError::*;
        match self {
            Blowup { t } => write!(f, "trajectory blew up at t = {t}"),
            NotHyperbolic { trace, discriminant } => {
                write!(f, "fixed point not hyperbolic (trace {trace}, discriminant {discriminant})")
            }
            NotAFixedPoint { speed } => write!(f, "state is not a fixed point (speed {speed})"),
            EpsOutOfRange(e) => write!(f, "eps {e} outside [1e-8, 1e-4]"),
            ImmediateTurning => write!(f, "branch turned immediately; eps degenerate"),
            TraceStalled => write!(f, "branch neither turned nor escaped within the time cap"),
            FrontTooShort => write!(f, "wave fronts too short to cover the period"),
            MissingFixedPoints => write!(f, "expected fixed points not found"),
            BadSpan { t0, t1 } => write!(f, "bad time span [{t0}, {t1}]"),
        }
    }
}

impl std::error::Error for CharacteristicsError {}

/// Right-hand side (x', p', u') of the characteristic system.
pub fn ode_rhs(s: ContactState, m: &ContactModel) -> ContactState {
    let hp = m.h_p(s.x, s.p);
    ContactState {
        x: hp,
        p: -m.h_x(s.x, s.p) - m.lam_prime(s.x) * s.u - m.lam(s.x) * s.p,
        u: s.p * hp - (m.h(s.x, s.p) + m.lam(s.x) * s.u) + m.c,
    }
}

fn nudged(s: ContactState, k: ContactState, h: f64) -> ContactState {
    ContactState { x: s.x + h * k.x, p: s.p + h * k.p, u: s.u + h * k.u }
}

fn rk4_step(s: ContactState, h: f64, m: &ContactModel) -> ContactState {
    let k1 = ode_rhs(s, m);
    let k2 = ode_rhs(nudged(s, k1, 0.5 * h), m);
    let k3 = ode_rhs(nudged(s, k2, 0.5 * h), m);
    let k4 = ode_rhs(nudged(s, k3, h), m);
    ContactState {
        x: s.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        p: s.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
        u: s.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
    }
}

/// Fixed-step classical RK4 over [t0, t1]; the final step is shortened to
/// land on t1. Returns the sampled trajectory including the initial state.
pub fn rk4_integrate(
    s0: ContactState,
    t_span: (f64, f64),
    h: f64,
    m: &ContactModel,
) -> Result<Vec<(f64, ContactState)>, CharacteristicsError> {
    let (t0, t1) = t_span;
    if h.is_nan() || h <= 0.0 || !t0.is_finite() || !t1.is_finite() || t1 < t0 {
        return Err(CharacteristicsError::BadSpan { t0, t1 });
    }
    let span = t1 - t0;
    let ratio = span / h;
    let steps = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let mut out = Vec::with_capacity(steps + 1);
    out.push((t0, s0));
    let mut s = s0;
    for k in 0..steps {
        let t_next = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h };
        let dt = t_next - (t0 + k as f64 * h);
        s = rk4_step(s, dt.min(h), m);
        if !s.is_finite() {
            return Err(CharacteristicsError::Blowup { t: t_next });
        }
        out.push((t_next, s));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct FixedPointInfo {
    pub state: ContactState,
    /// Restricted (x, p) linearization on the shell.
    pub jacobian: [[f64; 2]; 2],
    /// (unstable, stable), i.e. positive first.
    pub eigenvalues: (f64, f64),
    /// Unit vector, oriented toward increasing x.
    pub unstable_eigvec: [f64; 2],
}

/// On-shell (x, p) vector field with u eliminated through H = c; its
/// equilibria and linearization match the full system's restricted to the
/// shell.
fn restricted_field(m: &ContactModel, x: f64, p: f64) -> (f64, f64) {
    let u = (m.c - m.h(x, p)) / m.lam(x);
    (m.h_p(x, p), -m.h_x(x, p) - m.lam_prime(x) * u - m.lam(x) * p)
}

/// Completes a fixed-point seed with its restricted jacobian, eigenvalues,
/// and the unit unstable eigenvector. The quadratic-in-p family with
/// lambda = sin gets the closed-form jacobian; other couplings use central
/// finite differences with step 1e-6.
pub fn linearize(state: ContactState, m: &ContactModel) -> Result<FixedPointInfo, CharacteristicsError> {
    let v = ode_rhs(state, m);
    let speed = v.x.abs().max(v.p.abs()).max(v.u.abs());
    if speed > 1e-9 {
        return Err(CharacteristicsError::NotAFixedPoint { speed });
    }
    let jac = match m.lambda {
        Lambda::Sin => {
            // lambda'' / lambda = -1 at both zeros of cos, so the x-slope of
            // p' reduces to c - h(x, 0); the p-slope is -lambda(x)
            let k = m.c - m.h(state.x, 0.0);
            [[0.0, m.h_p(state.x, 1.0) - m.h_p(state.x, 0.0)], [k, -m.lam(state.x)]]
        }
        Lambda::One => {
            let e = 1e-6;
            let (x, p) = (state.x, state.p);
            let d = |f: fn(&ContactModel, f64, f64) -> (f64, f64), i: usize| {
                let a = if i == 0 { (f(m, x + e, p), f(m, x - e, p)) } else { (f(m, x, p + e), f(m, x, p - e)) };
                (((a.0).0 - (a.1).0) / (2.0 * e), ((a.0).1 - (a.1).1) / (2.0 * e))
            };
            let (dx0, dx1) = d(restricted_field, 0);
            let (dp0, dp1) = d(restricted_field, 1);
            [[dx0, dp0], [dx1, dp1]]
        }
    };
    let tr = jac[0][0] + jac[1][1];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc <= 0.0 {
        return Err(CharacteristicsError::NotHyperbolic { trace: tr, discriminant: disc });
    }
    let sq = disc.sqrt();
    let mu_u = 0.5 * (tr + sq);
    let mu_s = 0.5 * (tr - sq);
    if !(mu_s < 0.0 && mu_u > 0.0) {
        return Err(CharacteristicsError::NotHyperbolic { trace: tr, discriminant: disc });
    }
    let mut v = if jac[0][1].abs() > jac[1][0].abs() {
        [jac[0][1], mu_u - jac[0][0]]
    } else {
        [mu_u - jac[1][1], jac[1][0]]
    };
    let norm = v[0].hypot(v[1]);
    v = [v[0] / norm, v[1] / norm];
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        v = [-v[0], -v[1]];
    }
    Ok(FixedPointInfo { state, jacobian: jac, eigenvalues: (mu_u, mu_s), unstable_eigvec: v })
}

/// Fixed points of the characteristic flow, one representative per period,
/// sorted by x. The sin-coupled family has the closed-form pair at the
/// critical points of lambda; other couplings are searched by Newton on
/// lambda' from a coarse seed sweep (isolated zeros only).
pub fn find_fixed_points(m: &ContactModel) -> Vec<FixedPointInfo> {
    let mut states: Vec<ContactState> = Vec::new();
    match m.lambda {
        Lambda::Sin if m.h_shift == 0.0 => {
            states.push(ContactState::new(-std::f64::consts::FRAC_PI_2, 0.0, -m.c));
            states.push(ContactState::new(std::f64::consts::FRAC_PI_2, 0.0, m.c));
        }
        _ => {
            for k in 0..32 {
                let mut x = TAU * k as f64 / 32.0;
                let mut ok = false;
                for _ in 0..60 {
                    let dp = m.lam_prime(x);
                    let dpp = match m.lambda {
                        Lambda::Sin => -x.sin(),
                        Lambda::One => 0.0,
                    };
                    if dpp == 0.0 {
                        break;
                    }
                    let next = x - dp / dpp;
                    if (next - x).abs() < 1e-13 {
                        x = next;
                        ok = true;
                        break;
                    }
                    x = next;
                }
                if !ok || m.lam_prime(x).abs() > 1e-10 {
                    eprintln!("find_fixed_points: seed {k} did not converge, skipped");
                    continue;
                }
                // principal representative in (-pi, pi]
                let xr = x - TAU * (x / TAU).round();
                let lam = m.lam(xr);
                if lam.abs() < 1e-12 {
                    continue;
                }
                let u = (m.c - m.h(xr, 0.0)) / lam;
                if !states.iter().any(|s| (s.x - xr).abs() < 1e-8) {
                    states.push(ContactState::new(xr, 0.0, u));
                }
            }
            states.sort_by(|a, b| a.x.total_cmp(&b.x));
        }
    }
    states.into_iter().filter_map(|s| linearize(s, m).ok()).collect()
}

#[derive(Clone, Debug)]
pub struct WaveFront {
    /// (x, u) samples with strictly increasing x; the source sits interior.
    pub samples: Vec<(f64, f64)>,
    pub source: FixedPointInfo,
    /// Smaller of the two traced half-widths around the source.
    pub sigma: f64,
}

impl WaveFront {
    pub fn x_min(&self) -> f64 {
        self.samples.first().map(|s| s.0).unwrap_or(f64::NAN)
    }

    pub fn x_max(&self) -> f64 {
        self.samples.last().map(|s| s.0).unwrap_or(f64::NAN)
    }

    /// Linear interpolation; None outside the traced window.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let s = &self.samples;
        if s.is_empty() || x < s[0].0 || x > s[s.len() - 1].0 {
            return None;
        }
        let idx = s.partition_point(|&(sx, _)| sx <= x);
        if idx == 0 {
            return Some(s[0].1);
        }
        if idx == s.len() {
            return Some(s[s.len() - 1].1);
        }
        let (x0, u0) = s[idx - 1];
        let (x1, u1) = s[idx];
        Some(u0 + (x - x0) / (x1 - x0) * (u1 - u0))
    }
}

/// Shoots both unstable branches from `fp` with offset `eps` along the
/// unstable eigenvector (u re-projected onto the shell), records the (x, u)
/// graph until the momentum turns or the branch leaves one full period, and
/// merges the branches with the source in the interior.
///
/// Tracing happens at the principal representative of the source; samples
/// are translated back afterward. Retracing at a 2 pi k shifted source hence
/// agrees with shifting to machine precision instead of amplifying the
/// float reduction noise of the shifted coefficients along the flow.
pub fn trace_wavefront(
    fp: &FixedPointInfo,
    m: &ContactModel,
    eps: f64,
    h: f64,
) -> Result<WaveFront, CharacteristicsError> {
    if !(1e-8..=1e-4).contains(&eps) {
        return Err(CharacteristicsError::EpsOutOfRange(eps));
    }
    let turns = (fp.state.x / TAU).round();
    let shift = TAU * turns;
    let x0 = fp.state.x - shift;
    let v = fp.unstable_eigvec;
    let max_steps = (TRACE_T_CAP / h).ceil() as usize;

    let branch = |dir: f64| -> Result<Vec<(f64, f64)>, CharacteristicsError> {
        let bx = x0 + dir * eps * v[0];
        let bp = dir * eps * v[1];
        let bu = (m.c - m.h(bx, bp)) / m.lam(bx);
        let mut s = ContactState::new(bx, bp, bu);
        if s.p == 0.0 {
            return Err(CharacteristicsError::ImmediateTurning);
        }
        let p_sign = s.p.signum();
        let mut samples = vec![(s.x, s.u)];
        let mut grew = false;
        for k in 0..max_steps {
            let s2 = rk4_step(s, h, m);
            if !s2.is_finite() {
                return Err(CharacteristicsError::Blowup { t: (k + 1) as f64 * h });
            }
            if s2.p.signum() != p_sign && (s2.x - x0).abs() > 1e-3 {
                // linear back-interpolation of the p = 0 crossing
                let frac = s.p / (s.p - s2.p);
                samples.push((s.x + frac * (s2.x - s.x), s.u + frac * (s2.u - s.u)));
                if samples.len() < 3 {
                    return Err(CharacteristicsError::ImmediateTurning);
                }
                return Ok(samples);
            }
            s = s2;
            samples.push((s.x, s.u));
            if (s.x - x0).abs() > TAU {
                return Ok(samples);
            }
            grew = grew || s.p.abs() > 1e-3;
            if grew && s.p.abs() < 1e-10 {
                // momentum grew macroscopic and died back off without a sign
                // change: the branch has landed on another fixed point
                return Ok(samples);
            }
        }
        if samples.len() >= 3 {
            Ok(samples)
        } else {
            Err(CharacteristicsError::TraceStalled)
        }
    };

    let right = branch(1.0)?;
    let left = branch(-1.0)?;
    let mut samples = Vec::with_capacity(left.len() + right.len() + 1);
    samples.extend(left.iter().rev());
    samples.push((x0, fp.state.u));
    samples.extend(right.iter());
    // drop float-duplicate x near the source so the graph is strictly monotone
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    for (x, u) in samples {
        let xs = x + shift;
        if merged.last().is_none_or(|&(px, _)| xs > px) {
            merged.push((xs, u));
        }
    }
    let sigma = (merged.last().unwrap().0 - fp.state.x).min(fp.state.x - merged[0].0);
    Ok(WaveFront { samples: merged, source: *fp, sigma })
}

/// Builds the two stationary solutions at level c > 0 on the grid: u1 is the
/// min over 2 pi translates of the upper front, u0 additionally admits the
/// lower front's translates. Undefined translates are skipped; nodes covered
/// by no translate at all make the assembly fail.
pub fn assemble_solutions(
    m: &ContactModel,
    grid: &PeriodicGrid,
) -> Result<(Vec<f64>, Vec<f64>), CharacteristicsError> {
    let fps = find_fixed_points(m);
    let upper = fps
        .iter()
        .find(|f| f.state.u > 0.0)
        .ok_or(CharacteristicsError::MissingFixedPoints)?;
    let lower = fps
        .iter()
        .find(|f| f.state.u < 0.0)
        .ok_or(CharacteristicsError::MissingFixedPoints)?;
    let front1 = trace_wavefront(upper, m, DEFAULT_EPS, DEFAULT_H)?;
    let front0 = trace_wavefront(lower, m, DEFAULT_EPS, DEFAULT_H)?;
    let mut u0 = vec![0.0; grid.n];
    let mut u1 = vec![0.0; grid.n];
    for i in 0..grid.n {
        let x = grid.xs[i];
        let mut best1 = f64::INFINITY;
        let mut best0 = f64::INFINITY;
        for k in [-1.0, 0.0, 1.0] {
            let q = x - TAU * k;
            if let Some(v) = front1.eval(q) {
                best1 = best1.min(v);
            }
            if let Some(v) = front0.eval(q) {
                best0 = best0.min(v);
            }
        }
        if !best1.is_finite() {
            return Err(CharacteristicsError::FrontTooShort);
        }
        u1[i] = best1;
        u0[i] = best1.min(best0);
    }
    Ok((u0, u1))
}
