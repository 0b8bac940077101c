//! Closed-form stationary solutions at the critical level c = 0, built from
//! quadrature of phi' = sqrt(-sin x * phi) on [pi, 2 pi].
//!
//! Every solution at the critical level vanishes on [0, pi] and, on each
//! interval [a, b] of a disjoint family inside [pi, 2 pi], equals the smaller
//! of the two one-sided profiles grown from the endpoints:
//!
//! ```text
//!     u_ab(x) = min( (1/2 int_a^x sqrt(-sin))^2 , (1/2 int_x^b sqrt(-sin))^2 )
//! ```
//!
//! Both pieces satisfy (u')^2 + sin(x) u = 0 where positive, and the min
//! glues them with a concave kink, which is the admissible kind.

use crate::model::PeriodicGrid;
use std::f64::consts::{PI, TAU};

const QUAD_TOL: f64 = 1e-10;
const DOMAIN_SLOP: f64 = 1e-9;

#[derive(Debug, PartialEq)]
pub enum ReferenceError {
    /// Argument outside [pi, 2 pi].
    OutOfDomain(f64),
    /// Interval violates pi <= a < b <= 2 pi.
    BadInterval { a: f64, b: f64 },
    /// Intervals overlap after sorting.
    Overlapping { b_prev: f64, a_next: f64 },
    /// Interval shorter than two grid cells.
    IntervalTooNarrow { a: f64, b: f64, need: f64 },
}

impl std::fmt::Display for ReferenceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use ReferenceError::*;
        match self {
            OutOfDomain(x) => write!(f, "argument {x} outside [pi, 2 pi]"),
            BadInterval { a, b } => write!(f, "bad interval [{a}, {b}]: need pi <= a < b <= 2 pi"),
            Overlapping { b_prev, a_next } => {
                write!(f, "intervals overlap: previous ends at {b_prev}, next starts at {a_next}")
            }
            IntervalTooNarrow { a, b, need } => {
                write!(f, "interval [{a}, {b}] narrower than {need}")
            }
        }
    }
}

impl std::error::Error for ReferenceError {}

fn sqrt_neg_sin(t: f64) -> f64 {
    // clamp float noise at the zeros of sin so the root stays real
    (-t.sin()).max(0.0).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Integral of sqrt(-sin) over [lo, hi] inside [pi, 2 pi]. The substitution
/// t = lo + s^2 from the left and t = hi - s^2 from the right removes the
/// square-root singularities the integrand has at the interval ends when
/// they touch pi or 2 pi, so plain adaptive Simpson converges fast.
fn sqrt_sin_integral(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mid = 0.5 * (lo + hi);
    let left = adaptive_simpson(
        |s| 2.0 * s * sqrt_neg_sin(lo + s * s),
        0.0,
        (mid - lo).sqrt(),
        0.5 * QUAD_TOL,
    );
    let right = adaptive_simpson(
        |s| 2.0 * s * sqrt_neg_sin(hi - s * s),
        0.0,
        (hi - mid).sqrt(),
        0.5 * QUAD_TOL,
    );
    left + right
}

fn check_domain(x: f64) -> Result<f64, ReferenceError> {
    if !(PI - DOMAIN_SLOP..=TAU + DOMAIN_SLOP).contains(&x) {
        return Err(ReferenceError::OutOfDomain(x));
    }
    Ok(x.clamp(PI, TAU))
}

/// The one-sided profile grown from pi: (1/2 int_pi^x sqrt(-sin))^2.
pub fn phi_critical(x: f64) -> Result<f64, ReferenceError> {
    let x = check_domain(x)?;
    let half = 0.5 * sqrt_sin_integral(PI, x);
    Ok(half * half)
}

/// Bump supported on [a, b] in [pi, 2 pi]: zero outside, the smaller of the
/// two one-sided squared half-integrals inside.
pub fn u_ab(a: f64, b: f64, x: f64) -> Result<f64, ReferenceError> {
    if !(PI - DOMAIN_SLOP <= a && a < b && b <= TAU + DOMAIN_SLOP) {
        return Err(ReferenceError::BadInterval { a, b });
    }
    let (a, b) = (a.clamp(PI, TAU), b.clamp(PI, TAU));
    if x <= a || x >= b {
        return Ok(0.0);
    }
    let from_a = 0.5 * sqrt_sin_integral(a, x);
    let from_b = 0.5 * sqrt_sin_integral(x, b);
    Ok((from_a * from_a).min(from_b * from_b))
}

/// Sorted family of pairwise disjoint closed intervals inside [pi, 2 pi].
#[derive(Clone, Debug)]
pub struct IntervalFamily {
    intervals: Vec<(f64, f64)>,
}

impl IntervalFamily {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<IntervalFamily, ReferenceError> {
        for &(a, b) in &intervals {
            if !(PI - DOMAIN_SLOP <= a && a < b && b <= TAU + DOMAIN_SLOP) {
                return Err(ReferenceError::BadInterval { a, b });
            }
        }
        intervals.sort_by(|p, q| p.0.total_cmp(&q.0));
        for w in intervals.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(ReferenceError::Overlapping { b_prev: w[0].1, a_next: w[1].0 });
            }
        }
        Ok(IntervalFamily { intervals })
    }

    pub fn full() -> IntervalFamily {
        IntervalFamily { intervals: vec![(PI, TAU)] }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Samples the critical-level solution determined by the family on the grid:
/// zero on [0, pi] and outside every interval, the endpoint bump inside each.
/// Intervals narrower than two grid cells are not resolvable and rejected.
pub fn build_critical_solution(
    family: &IntervalFamily,
    grid: &PeriodicGrid,
) -> Result<Vec<f64>, ReferenceError> {
    let need = 2.0 * grid.dx;
    for &(a, b) in &family.intervals {
        if b - a < need {
            return Err(ReferenceError::IntervalTooNarrow { a, b, need });
        }
    }
    let mut out = vec![0.0; grid.n];
    for (i, &x) in grid.xs.iter().enumerate() {
        for &(a, b) in &family.intervals {
            if x > a && x < b {
                out[i] = u_ab(a, b, x)?;
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_grid;

    // int_0^{pi/2} sqrt(sin) = int_pi^{3 pi/2} sqrt(-sin)
    const HALF_INTEGRAL: f64 = 1.1981402347355922;

    #[test]
    fn profile_starts_at_zero_and_hits_known_midpoint_value() {
        assert_eq!(phi_critical(PI).unwrap(), 0.0);
        let mid = phi_critical(1.5 * PI).unwrap();
        assert!((mid - 0.358886).abs() <= 1e-5);
        let expected = (0.5 * HALF_INTEGRAL) * (0.5 * HALF_INTEGRAL);
        assert!((mid - expected).abs() <= 1e-9, "midpoint {mid} vs {expected}");
        assert!(phi_critical(3.0).is_err());
        assert!(phi_critical(7.0).is_err());
    }

    #[test]
    fn profile_satisfies_its_defining_ode() {
        let e = 1e-6;
        for k in 1..10 {
            let x = PI + (PI - 0.2) * k as f64 / 10.0 + 0.1;
            let fd = (phi_critical(x + e).unwrap() - phi_critical(x - e).unwrap()) / (2.0 * e);
            let rhs = (-x.sin() * phi_critical(x).unwrap()).sqrt();
            assert!((fd - rhs).abs() <= 1e-5, "x = {x}: {fd} vs {rhs}");
        }
    }

    #[test]
    fn bump_vanishes_at_ends_and_peaks_at_the_symmetric_midpoint() {
        assert_eq!(u_ab(PI, TAU, PI).unwrap(), 0.0);
        assert_eq!(u_ab(PI, TAU, TAU).unwrap(), 0.0);
        assert_eq!(u_ab(PI, TAU, 0.3).unwrap(), 0.0);
        let peak = u_ab(PI, TAU, 1.5 * PI).unwrap();
        assert!((peak - 0.358886).abs() <= 1e-5, "peak {peak}");
        // reflection symmetry about 3 pi / 2
        for k in 1..8 {
            let d = 0.4 * k as f64 / 8.0;
            let l = u_ab(PI, TAU, 1.5 * PI - d).unwrap();
            let r = u_ab(PI, TAU, 1.5 * PI + d).unwrap();
            assert!((l - r).abs() <= 1e-9);
        }
        // interior interval: still zero at its own endpoints, positive inside
        let v = u_ab(3.5, 5.5, 4.5).unwrap();
        assert!(v > 0.0);
        assert_eq!(u_ab(3.5, 5.5, 3.5).unwrap(), 0.0);
        assert!(u_ab(2.0, 5.0, 3.0).is_err());
        assert!(u_ab(4.0, 3.9, 3.95).is_err());
    }

    #[test]
    fn family_validation() {
        assert!(IntervalFamily::new(vec![]).unwrap().is_empty());
        let fam = IntervalFamily::new(vec![(4.8, 5.6), (3.3, 4.1)]).unwrap();
        assert_eq!(fam.intervals()[0], (3.3, 4.1));
        assert!(matches!(
            IntervalFamily::new(vec![(3.3, 4.5), (4.4, 5.0)]),
            Err(ReferenceError::Overlapping { .. })
        ));
        assert!(matches!(
            IntervalFamily::new(vec![(1.0, 4.0)]),
            Err(ReferenceError::BadInterval { .. })
        ));
    }

    #[test]
    fn sampled_solution_structure() {
        let grid = make_grid(64).unwrap();
        let zero = build_critical_solution(&IntervalFamily::new(vec![]).unwrap(), &grid).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let u = build_critical_solution(&IntervalFamily::full(), &grid).unwrap();
        for (i, &x) in grid.xs.iter().enumerate() {
            if x <= PI {
                assert_eq!(u[i], 0.0, "node {i} at {x} should vanish");
            }
        }
        let peak = u[grid.n * 3 / 4];
        assert!((peak - 0.3588850).abs() <= 1e-5);
        assert!(u.iter().all(|&v| (0.0..=0.36).contains(&v)));
        let narrow = IntervalFamily::new(vec![(4.0, 4.0 + 1.5 * grid.dx)]).unwrap();
        assert!(matches!(
            build_critical_solution(&narrow, &grid),
            Err(ReferenceError::IntervalTooNarrow { .. })
        ));
    }
}
