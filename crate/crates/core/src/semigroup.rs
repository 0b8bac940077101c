//! Implicit one-step evolution operators on the periodic grid, the long-time
//! fixed-point solver, single-source action functions, and residual
//! diagnostics.
//!
//! The backward operator advances `f` by one implicit step of size `delta`:
//!
//! ```text
//!     (T_d f)(x) = min_y [ f(y) + d*(l((x-y)/d) + c) ] / (1 + d*lambda(x))
//! ```
//!
//! and the forward operator mirrors it (max, negated running cost, divided by
//! `1 - d*lambda(x)`). The minimum is taken exactly on every linear piece of
//! the interpolant of `f` inside a window of `window` nodes per side; the
//! kinetic part is quadratic, so each per-piece optimum is closed-form.

use crate::model::{interpolate, sup_dist, sup_norm, ContactModel, PeriodicGrid};

/// Placeholder magnitude for "not yet reached" nodes of single-source seeds.
pub const SENTINEL: f64 = 1e9;
/// Sup-norm level of the divergence signal.
const BLOWUP_NORM: f64 = 1e6;
/// Consecutive growth steps required before divergence is declared.
const BLOWUP_CONFIRM: usize = 100;
/// Best-rate level below which the plateau stop is allowed to fire.
const PLATEAU_RATE: f64 = 1e-4;
/// Flow time without best-rate improvement before the plateau stop fires.
const PLATEAU_PATIENCE_TIME: f64 = 0.5;
/// One-sided slope jump separating kink nodes from smooth nodes.
const KINK_JUMP: f64 = 0.05;
/// `check_subsolution` tolerates one-step decreases up to this multiple of delta^2.
const SUBSOLUTION_SLACK: f64 = 10.0;
/// Probe-step decrease per unit time below which the solver treats the seed
/// as a subsolution and pins the iteration monotone.
const ENFORCE_ARM_SLACK: f64 = 0.1;

#[derive(Debug)]
pub enum SemigroupError {
    /// The implicit scalar solve needs delta * sup|lambda| < 1.
    DeltaTooLarge { delta: f64, lambda0: f64 },
    EmptyWindow,
    /// Requested evolution time shorter than one step.
    HorizonTooShort { t: f64, delta: f64 },
    NegativeTime(f64),
}

impl std::fmt::Display for SemigroupError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SemigroupError::DeltaTooLarge { delta, lambda0 } => {
                write!(f, "delta {delta} too large: need delta * lambda0 < 1 (lambda0 = {lambda0})")
            }
            SemigroupError::EmptyWindow => write!(f, "minimization window is empty"),
            SemigroupError::HorizonTooShort { t, delta } => {
                write!(f, "time {t} shorter than one step delta = {delta}")
            }
            SemigroupError::NegativeTime(t) => write!(f, "negative evolution time {t}"),
        }
    }
}

impl std::error::Error for SemigroupError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Backward,
    Forward,
}

#[derive(Clone, Copy, Debug)]
pub struct StepParams {
    pub delta: f64,
    /// Max node offset searched per side in the one-step minimization.
    pub window: usize,
    /// Sup-norm change per unit time below which the iteration has converged.
    pub tol: f64,
    /// Iteration horizon in flow time.
    pub t_max: f64,
}

impl StepParams {
    /// Window sized so `window * dx >= v_max * delta`; default tol 1e-8 and
    /// horizon 50.
    pub fn for_model(m: &ContactModel, grid: &PeriodicGrid, delta: f64) -> StepParams {
        let window = ((m.v_max() * delta / grid.dx).ceil() as usize).max(1);
        StepParams { delta, window, tol: 1e-8, t_max: 50.0 }
    }

    fn validate(&self, m: &ContactModel) -> Result<(), SemigroupError> {
        if self.delta * m.lambda0 >= 1.0 {
            return Err(SemigroupError::DeltaTooLarge { delta: self.delta, lambda0: m.lambda0 });
        }
        if self.window == 0 {
            return Err(SemigroupError::EmptyWindow);
        }
        Ok(())
    }
}

/// Caches per-node lambda values so long runs avoid re-evaluating sin.
struct StepCtx {
    n: usize,
    dx: f64,
    window: isize,
    c: f64,
    h_shift: f64,
    lam: Vec<f64>,
}

impl StepCtx {
    fn new(m: &ContactModel, grid: &PeriodicGrid, window: usize) -> StepCtx {
        StepCtx {
            n: grid.n,
            dx: grid.dx,
            window: window as isize,
            c: m.c,
            h_shift: m.h_shift,
            lam: grid.xs.iter().map(|&x| m.lam(x)).collect(),
        }
    }

    /// One step of size `dt` (may be shorter than the nominal delta). Writes
    /// the result into `out`. Candidate values saturate at +-SENTINEL.
    fn step(&self, dir: Direction, dt: f64, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        let inv_dx = 1.0 / self.dx;
        let quart = 0.25 / dt;
        let run = dt * (self.c - self.h_shift);
        match dir {
            Direction::Backward => {
                out.fill(f64::INFINITY);
                for j in -self.window..self.window {
                    // displacement d = x - y in [j dx, (j+1) dx]; the piece of the
                    // interpolant uses nodes i-j ("a") and i-j-1 ("b")
                    let lo = j as f64 * self.dx;
                    let mut ia = (-j).rem_euclid(n as isize) as usize;
                    let mut ib = (-j - 1).rem_euclid(n as isize) as usize;
                    for o in out.iter_mut() {
                        let fa = f[ia];
                        let s = (f[ib] - fa) * inv_dx;
                        let d = (-2.0 * dt * s).clamp(lo, lo + self.dx);
                        let cand = (fa + (d - lo) * s + d * d * quart + run)
                            .clamp(-SENTINEL, SENTINEL);
                        if cand < *o {
                            *o = cand;
                        }
                        ia += 1;
                        if ia == n {
                            ia = 0;
                        }
                        ib += 1;
                        if ib == n {
                            ib = 0;
                        }
                    }
                }
                for (o, &l) in out.iter_mut().zip(&self.lam) {
                    *o = (*o / (1.0 + dt * l)).clamp(-SENTINEL, SENTINEL);
                }
            }
            Direction::Forward => {
                out.fill(f64::NEG_INFINITY);
                for j in -self.window..self.window {
                    // displacement d = y - x in [j dx, (j+1) dx]; nodes i+j, i+j+1
                    let lo = j as f64 * self.dx;
                    let mut ia = j.rem_euclid(n as isize) as usize;
                    let mut ib = (j + 1).rem_euclid(n as isize) as usize;
                    for o in out.iter_mut() {
                        let fa = f[ia];
                        let s = (f[ib] - fa) * inv_dx;
                        let d = (2.0 * dt * s).clamp(lo, lo + self.dx);
                        let cand = (fa + (d - lo) * s - d * d * quart - run)
                            .clamp(-SENTINEL, SENTINEL);
                        if cand > *o {
                            *o = cand;
                        }
                        ia += 1;
                        if ia == n {
                            ia = 0;
                        }
                        ib += 1;
                        if ib == n {
                            ib = 0;
                        }
                    }
                }
                for (o, &l) in out.iter_mut().zip(&self.lam) {
                    *o = (*o / (1.0 - dt * l)).clamp(-SENTINEL, SENTINEL);
                }
            }
        }
    }
}

pub fn backward_step(
    f: &[f64],
    m: &ContactModel,
    grid: &PeriodicGrid,
    sp: &StepParams,
) -> Result<Vec<f64>, SemigroupError> {
    one_step(f, m, grid, sp, Direction::Backward)
}

pub fn forward_step(
    f: &[f64],
    m: &ContactModel,
    grid: &PeriodicGrid,
    sp: &StepParams,
) -> Result<Vec<f64>, SemigroupError> {
    one_step(f, m, grid, sp, Direction::Forward)
}

fn one_step(
    f: &[f64],
    m: &ContactModel,
    grid: &PeriodicGrid,
    sp: &StepParams,
    dir: Direction,
) -> Result<Vec<f64>, SemigroupError> {
    sp.validate(m)?;
    let ctx = StepCtx::new(m, grid, sp.window);
    let mut out = vec![0.0; grid.n];
    ctx.step(dir, sp.delta, f, &mut out);
    Ok(out)
}

/// Steps needed to land on `t`, and whether `t` counts as an exact multiple
/// of delta (within float ratio noise). Exact multiples take full-size steps
/// only, so compositions on step multiples agree bit for bit.
fn step_count(t: f64, delta: f64) -> (usize, bool) {
    let ratio = t / delta;
    if (ratio - ratio.round()).abs() < 1e-9 {
        (ratio.round() as usize, true)
    } else {
        (ratio.ceil() as usize, false)
    }
}

/// Composes single steps; the final step is shortened to land exactly at `t`.
pub fn evolve(
    f: &[f64],
    t: f64,
    m: &ContactModel,
    grid: &PeriodicGrid,
    sp: &StepParams,
    dir: Direction,
) -> Result<Vec<f64>, SemigroupError> {
    if t < 0.0 {
        return Err(SemigroupError::NegativeTime(t));
    }
    sp.validate(m)?;
    let (steps, exact_multiple) = step_count(t, sp.delta);
    let mut cur = f.to_vec();
    if steps == 0 {
        return Ok(cur);
    }
    let ctx = StepCtx::new(m, grid, sp.window);
    let mut next = vec![0.0; grid.n];
    for k in 0..steps {
        let dt = if k + 1 == steps && !exact_multiple {
            t - k as f64 * sp.delta
        } else {
            sp.delta
        };
        ctx.step(dir, dt, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Change rate dropped below tol: an (approximate) discrete fixed point.
    Converged,
    /// Rate bottomed out below the plateau level and stopped improving; the
    /// best iterate is returned (metastable states near a merged pair of
    /// solutions never reach tol).
    Plateau,
    HorizonReached,
    Diverged,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub status: SolveStatus,
    /// Converged status and the equation residual passed the gate.
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm change per unit time at the reported iterate.
    pub final_residual: f64,
    /// Max smooth-node equation residual of the reported iterate.
    pub pde_residual: f64,
    /// Step/node events moving against the flow beyond the subsolution slack
    /// (counted only while monotone pinning is armed).
    pub monotone_violations: usize,
    /// Sup-norm was still strictly increasing over the last 100 steps.
    pub growing: bool,
}

/// Monotone pinning policy for [`solve_fixed_point_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotone {
    /// Arm iff a probe step moves no node against the flow by more than
    /// 0.1*delta; armed runs clip iterates monotone. This stabilizes seeds
    /// that are subsolutions up to discretization error without touching
    /// genuinely non-monotone flows.
    Auto,
    /// Never clip (used by boundedness probes, where pinning could mask a
    /// slow blow-down).
    Off,
}

pub fn solve_fixed_point(
    f0: &[f64],
    m: &ContactModel,
    grid: &PeriodicGrid,
    sp: &StepParams,
    dir: Direction,
) -> Result<SolveReport, SemigroupError> {
    solve_fixed_point_with(f0, m, grid, sp, dir, Monotone::Auto)
}

pub fn solve_fixed_point_with(
    f0: &[f64],
    m: &ContactModel,
    grid: &PeriodicGrid,
    sp: &StepParams,
    dir: Direction,
    policy: Monotone,
) -> Result<SolveReport, SemigroupError> {
    sp.validate(m)?;
    let ctx = StepCtx::new(m, grid, sp.window);
    let n = grid.n;
    let delta = sp.delta;
    let mut f = f0.to_vec();
    let mut g = vec![0.0; n];

    let enforce = match policy {
        Monotone::Off => false,
        Monotone::Auto => {
            ctx.step(dir, delta, &f, &mut g);
            let slack = ENFORCE_ARM_SLACK * delta;
            match dir {
                Direction::Backward => f.iter().zip(&g).all(|(a, b)| *b >= *a - slack),
                Direction::Forward => f.iter().zip(&g).all(|(a, b)| *b <= *a + slack),
            }
        }
    };

    let (max_steps, _) = step_count(sp.t_max, delta);
    let patience = (PLATEAU_PATIENCE_TIME / delta).ceil() as usize;
    let viol_slack = SUBSOLUTION_SLACK * delta * delta;
    let mut best = f.clone();
    let mut best_rate = f64::INFINITY;
    let mut since_best = 0usize;
    let mut growth = 0usize;
    let mut prev_norm = sup_norm(&f);
    let mut violations = 0usize;
    let mut status = SolveStatus::HorizonReached;
    let mut rate = f64::INFINITY;
    let mut iterations = 0usize;

    while iterations < max_steps {
        iterations += 1;
        ctx.step(dir, delta, &f, &mut g);
        if enforce {
            match dir {
                Direction::Backward => {
                    for (gi, fi) in g.iter_mut().zip(&f) {
                        if *gi < *fi {
                            if *fi - *gi > viol_slack {
                                violations += 1;
                            }
                            *gi = *fi;
                        }
                    }
                }
                Direction::Forward => {
                    for (gi, fi) in g.iter_mut().zip(&f) {
                        if *gi > *fi {
                            if *gi - *fi > viol_slack {
                                violations += 1;
                            }
                            *gi = *fi;
                        }
                    }
                }
            }
        }
        rate = sup_dist(&f, &g) / delta;
        std::mem::swap(&mut f, &mut g);
        let norm = sup_norm(&f);
        if norm > prev_norm {
            growth += 1;
        } else {
            growth = 0;
        }
        prev_norm = norm;
        if norm > BLOWUP_NORM && growth >= BLOWUP_CONFIRM {
            status = SolveStatus::Diverged;
            break;
        }
        if rate <= sp.tol {
            status = SolveStatus::Converged;
            break;
        }
        if rate < best_rate {
            best_rate = rate;
            best.copy_from_slice(&f);
            since_best = 0;
        } else {
            since_best += 1;
        }
        if best_rate <= PLATEAU_RATE && since_best >= patience {
            status = SolveStatus::Plateau;
            break;
        }
    }

    let (solution, final_residual) = match status {
        SolveStatus::Converged | SolveStatus::Diverged => (f, rate),
        SolveStatus::Plateau | SolveStatus::HorizonReached => (best, best_rate),
    };
    let report = residual_report(&solution, m, grid);
    let pde_residual = report.max_smooth_residual;
    // min-type (backward) limits admit concave corners only; the forward
    // iteration produces max-type limits with the opposite convention
    let bad_kinks = match dir {
        Direction::Backward => report.convex_kinks(),
        Direction::Forward => report.concave_kinks(),
    };
    let converged = status == SolveStatus::Converged
        && pde_residual <= residual_gate(m, grid, delta)
        && bad_kinks == 0;
    Ok(SolveReport {
        solution,
        status,
        converged,
        iterations,
        final_residual,
        pde_residual,
        monotone_violations: violations,
        growing: growth >= BLOWUP_CONFIRM,
    })
}

/// Index of the grid node nearest to `x` (periodic).
pub fn nearest_node(grid: &PeriodicGrid, x: f64) -> usize {
    ((x / grid.dx).round() as isize).rem_euclid(grid.n as isize) as usize
}

/// Grid profile of the action function with source value `u0` at the node
/// nearest `x0`: every other node is seeded with the sentinel (+ for
/// backward, - for forward) and the seed is evolved for time `t`.
pub fn action_profile(
    x0: f64,
    u0: f64,
    t: f64,
    m: &ContactModel,
    grid: &PeriodicGrid,
    sp: &StepParams,
    dir: Direction,
) -> Result<Vec<f64>, SemigroupError> {
    if t < sp.delta {
        return Err(SemigroupError::HorizonTooShort { t, delta: sp.delta });
    }
    let fill = match dir {
        Direction::Backward => SENTINEL,
        Direction::Forward => -SENTINEL,
    };
    let mut seed = vec![fill; grid.n];
    seed[nearest_node(grid, x0)] = u0;
    evolve(&seed, t, m, grid, sp, dir)
}

/// Interpolated action value at `x`; see [`action_profile`].
#[allow(clippy::too_many_arguments)]
pub fn action_function(
    x0: f64,
    u0: f64,
    x: f64,
    t: f64,
    m: &ContactModel,
    grid: &PeriodicGrid,
    sp: &StepParams,
    dir: Direction,
) -> Result<f64, SemigroupError> {
    let profile = action_profile(x0, u0, t, m, grid, sp, dir)?;
    Ok(interpolate(grid, &profile, x))
}

#[derive(Clone, Copy, Debug)]
pub struct KinkInfo {
    pub index: usize,
    pub x: f64,
    /// Right slope minus left slope; positive jumps are convex corners,
    /// which min-type weak solutions must not have.
    pub slope_jump: f64,
}

#[derive(Clone, Debug)]
pub struct ResidualReport {
    /// Max |h(x, u') + lambda(x) u - c| over smooth nodes, centered slopes.
    pub max_smooth_residual: f64,
    /// Node position attaining the max.
    pub argmax_x: f64,
    pub smooth_nodes: usize,
    pub kinks: Vec<KinkInfo>,
}

impl ResidualReport {
    pub fn convex_kinks(&self) -> usize {
        self.kinks.iter().filter(|k| k.slope_jump > 0.0).count()
    }

    pub fn concave_kinks(&self) -> usize {
        self.kinks.len() - self.convex_kinks()
    }
}

/// Classifies nodes as smooth or kink by the one-sided slope jump and
/// evaluates the stationary-equation residual on the smooth ones (kinks and
/// their immediate neighbors are excluded; centered differences straddle
/// them meaninglessly).
pub fn residual_report(f: &[f64], m: &ContactModel, grid: &PeriodicGrid) -> ResidualReport {
    let n = grid.n;
    let inv_dx = 1.0 / grid.dx;
    let mut kink = vec![false; n];
    let mut flagged = Vec::new();
    for i in 0..n {
        let prev = f[(i + n - 1) % n];
        let next = f[(i + 1) % n];
        let jump = (next - f[i]) * inv_dx - (f[i] - prev) * inv_dx;
        if jump.abs() > KINK_JUMP {
            kink[i] = true;
            flagged.push(KinkInfo { index: i, x: grid.xs[i], slope_jump: jump });
        }
    }
    // a corner falling mid-cell flags both straddling nodes; merge adjacent
    // same-sign flags (periodically) into the strongest representative
    let mut kinks: Vec<KinkInfo> = Vec::with_capacity(flagged.len());
    for k in flagged {
        match kinks.last_mut() {
            Some(last)
                if k.index == last.index + 1
                    && k.slope_jump.signum() == last.slope_jump.signum() =>
            {
                if k.slope_jump.abs() > last.slope_jump.abs() {
                    *last = k;
                }
            }
            _ => kinks.push(k),
        }
    }
    if kinks.len() > 1 {
        let first = kinks[0];
        let last = *kinks.last().unwrap();
        if first.index == 0
            && last.index == n - 1
            && first.slope_jump.signum() == last.slope_jump.signum()
        {
            if first.slope_jump.abs() > last.slope_jump.abs() {
                kinks.pop();
            } else {
                kinks.remove(0);
            }
        }
    }
    let mut max_res = 0.0;
    let mut argmax_x = grid.xs[0];
    let mut smooth_nodes = 0;
    for i in 0..n {
        if kink[i] || kink[(i + 1) % n] || kink[(i + n - 1) % n] {
            continue;
        }
        smooth_nodes += 1;
        let slope = (f[(i + 1) % n] - f[(i + n - 1) % n]) * 0.5 * inv_dx;
        let res = (m.hamiltonian_value(grid.xs[i], slope, f[i]) - m.c).abs();
        if res > max_res {
            max_res = res;
            argmax_x = grid.xs[i];
        }
    }
    ResidualReport { max_smooth_residual: max_res, argmax_x, smooth_nodes, kinks }
}

/// Acceptance level for the smooth-node residual of a discrete fixed point.
/// The floor covers the O(delta) + O(1/n) scheme error with the measured
/// constants rounded up.
pub fn residual_gate(m: &ContactModel, grid: &PeriodicGrid, delta: f64) -> f64 {
    let scheme = (1.0 + m.c.abs()) * (6.0 * delta + 8.0 / grid.n as f64);
    scheme.max(5e-3)
}

/// True iff one backward step does not decrease `f` anywhere beyond the
/// O(delta^2) slack — the discrete subsolution test.
pub fn check_subsolution(
    f: &[f64],
    m: &ContactModel,
    grid: &PeriodicGrid,
    sp: &StepParams,
) -> Result<bool, SemigroupError> {
    let g = backward_step(f, m, grid, sp)?;
    let slack = SUBSOLUTION_SLACK * sp.delta * sp.delta;
    Ok(f.iter().zip(&g).all(|(fi, gi)| *gi >= *fi - slack))
}
