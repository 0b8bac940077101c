//! Critical-level estimation by bisection on long-time boundedness of the
//! backward orbit started from the zero function.
//!
//! Above the critical level the orbit converges to a solution; below it there
//! is no subsolution and the orbit blows down, which the solver reports as a
//! divergence signal. Bisecting on that signal brackets the critical level.

use crate::model::{ContactModel, PeriodicGrid};
use crate::semigroup::{
    solve_fixed_point_with, Direction, Monotone, SemigroupError, SolveStatus, StepParams,
};

#[derive(Debug)]
pub enum CriticalError {
    InvalidBracket { c_lo: f64, c_hi: f64 },
    /// The orbit at the upper bracket end diverges; no level in the bracket
    /// admits a solution.
    UpperEndDiverges { c_hi: f64 },
    HorizonTooShort(f64),
    Semigroup(SemigroupError),
}

impl std::fmt::Display for CriticalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CriticalError::InvalidBracket { c_lo, c_hi } => {
                write!(f, "invalid bracket [{c_lo}, {c_hi}]")
            }
            CriticalError::UpperEndDiverges { c_hi } => {
                write!(f, "orbit diverges at the upper bracket end c = {c_hi}")
            }
            CriticalError::HorizonTooShort(h) => write!(f, "horizon {h} below minimum 10"),
            CriticalError::Semigroup(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CriticalError {}

impl From<SemigroupError> for CriticalError {
    fn from(e: SemigroupError) -> Self {
        CriticalError::Semigroup(e)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CriticalEstimate {
    pub c_hat: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    pub tol: f64,
    /// Set when the orbit stays bounded however far the bracket is widened
    /// downward; no finite critical level exists.
    pub unbounded_below: bool,
    pub probes: usize,
    pub horizon: f64,
}

/// Bracket suggested by the a-priori bounds -e0 <= c(H) <= sup_x h(x, 0),
/// padded by one on each side.
pub fn default_bracket(m: &ContactModel) -> (f64, f64) {
    (-m.e0 - 1.0, m.h(0.0, 0.0) + 1.0)
}

/// Evolves the zero seed backward at level `m.c` up to `horizon`; true iff
/// the divergence signal did not fire. Monotone pinning is off: on a
/// blow-down it could freeze the orbit near the seed and mask divergence.
/// An ambiguous endpoint (still growing, threshold not crossed) retries once
/// at twice the horizon.
pub fn bounded_orbit(
    m: &ContactModel,
    horizon: f64,
    grid: &PeriodicGrid,
    sp: &StepParams,
) -> Result<bool, CriticalError> {
    if horizon < 10.0 {
        return Err(CriticalError::HorizonTooShort(horizon));
    }
    let zero = vec![0.0; grid.n];
    for h in [horizon, 2.0 * horizon] {
        let probe_sp = StepParams { t_max: h, ..*sp };
        let rep =
            solve_fixed_point_with(&zero, m, grid, &probe_sp, Direction::Backward, Monotone::Off)?;
        if rep.status == SolveStatus::Diverged {
            return Ok(false);
        }
        if rep.status != SolveStatus::HorizonReached || !rep.growing {
            return Ok(true);
        }
    }
    Ok(true)
}

/// Bisects [`bounded_orbit`] over [c_lo, c_hi]. If the orbit is bounded at
/// the lower end the bracket is widened downward up to three times; still
/// bounded after that means no finite critical level (`unbounded_below`).
pub fn estimate_critical_value(
    m: &ContactModel,
    c_lo: f64,
    c_hi: f64,
    tol: f64,
    grid: &PeriodicGrid,
    sp: &StepParams,
) -> Result<CriticalEstimate, CriticalError> {
    if c_lo.is_nan() || c_hi.is_nan() || c_lo >= c_hi || !tol.is_finite() || tol <= 0.0 {
        return Err(CriticalError::InvalidBracket { c_lo, c_hi });
    }
    let horizon = sp.t_max;
    let mut probes = 0usize;
    let mut probe = |c: f64| -> Result<bool, CriticalError> {
        probes += 1;
        let mc = m.with_level(c);
        let pc = StepParams { t_max: horizon, tol: sp.tol, ..StepParams::for_model(&mc, grid, sp.delta) };
        bounded_orbit(&mc, horizon, grid, &pc)
    };

    if !probe(c_hi)? {
        return Err(CriticalError::UpperEndDiverges { c_hi });
    }
    let (mut lo, mut hi) = (c_lo, c_hi);
    if probe(lo)? {
        let width = c_hi - c_lo;
        let mut still_bounded = true;
        for k in 0..3 {
            lo -= width * (1 << k) as f64;
            if !probe(lo)? {
                still_bounded = false;
                break;
            }
        }
        if still_bounded {
            return Ok(CriticalEstimate {
                c_hat: f64::NEG_INFINITY,
                c_lo: lo,
                c_hi: hi,
                tol,
                unbounded_below: true,
                probes,
                horizon,
            });
        }
    }
    while hi - lo > 2.0 * tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalEstimate {
        c_hat: 0.5 * (lo + hi),
        c_lo: lo,
        c_hi: hi,
        tol,
        unbounded_below: false,
        probes,
        horizon,
    })
}
