//! Hamiltonian/Lagrangian pair, periodic grid, and grid-function helpers.
//!
//! The equation solved throughout is
//!
//! ```text
//!     h(x, u'(x)) + lambda(x) u(x) = c        on the circle [0, 2pi)
//! ```
//!
//! with kinetic part `h(x,p) = p^2 + h_shift` and coupling `lambda` either
//! `sin x` or the constant 1. The convex dual of `h` in `p` (the Lagrangian)
//! has the closed form `l(v) = v^2/4 - h_shift`.

use std::f64::consts::{PI, TAU};

#[derive(Debug)]
pub enum ModelError {
    GridTooSmall(usize),
    LegendreBracket,
}

impl std::fmt::Display for ModelError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelError::GridTooSmall(n) => write!(f, "grid size {n} below minimum 16"),
            ModelError::LegendreBracket => write!(f, "numeric Legendre transform failed to bracket"),
        }
    }
}

impl std::error::Error for ModelError {}

/// Uniform periodic grid on [0, 2pi).
#[derive(Clone, Debug)]
pub struct PeriodicGrid {
    pub n: usize,
    pub dx: f64,
    pub xs: Vec<f64>,
}

pub fn make_grid(n: usize) -> Result<PeriodicGrid, ModelError> {
    if n < 16 {
        return Err(ModelError::GridTooSmall(n));
    }
    let dx = TAU / n as f64;
    let xs = (0..n).map(|i| i as f64 * dx).collect();
    Ok(PeriodicGrid { n, dx, xs })
}

/// Piecewise-linear periodic interpolation; exact at nodes.
pub fn interpolate(grid: &PeriodicGrid, f: &[f64], x: f64) -> f64 {
    let n = grid.n;
    let s = (x / grid.dx).rem_euclid(n as f64);
    let i = (s.floor() as usize) % n;
    let frac = s - s.floor();
    if frac == 0.0 {
        f[i]
    } else {
        f[i] + frac * (f[(i + 1) % n] - f[i])
    }
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sup_dist(f: &[f64], g: &[f64]) -> f64 {
    f.iter()
        .zip(g)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Largest one-sided slope magnitude of the nodal function.
pub fn lipschitz(grid: &PeriodicGrid, f: &[f64]) -> f64 {
    let n = grid.n;
    (0..n).fold(0.0, |m: f64, i| {
        m.max((f[(i + 1) % n] - f[i]).abs() / grid.dx)
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lambda {
    /// lambda(x) = sin x (the toy model coupling; changes sign).
    Sin,
    /// lambda ≡ 1 (strictly increasing in u everywhere; c(H) = -inf).
    One,
}

/// The contact Hamiltonian H(x,p,u) = h(x,p) + lambda(x) u at level `c`,
/// restricted to the quadratic family h(x,p) = p^2 + h_shift.
#[derive(Clone, Copy, Debug)]
pub struct ContactModel {
    pub h_shift: f64,
    pub lambda: Lambda,
    /// Right-hand constant of the stationary equation.
    pub c: f64,
    /// sup |lambda|.
    pub lambda0: f64,
    /// Lower-bound constant with h >= -e0.
    pub e0: f64,
}

impl ContactModel {
    pub fn toy(c: f64) -> Self {
        ContactModel { h_shift: 0.0, lambda: Lambda::Sin, c, lambda0: 1.0, e0: 0.0 }
    }

    /// Toy model with kinetic part shifted to p^2 + a (critical value shifts by a).
    pub fn toy_shifted(a: f64, c: f64) -> Self {
        ContactModel { h_shift: a, lambda: Lambda::Sin, c, lambda0: 1.0, e0: -a }
    }

    /// Variant with lambda ≡ 1; no critical value exists (unbounded below).
    pub fn lambda_one(c: f64) -> Self {
        ContactModel { h_shift: 0.0, lambda: Lambda::One, c, lambda0: 1.0, e0: 0.0 }
    }

    pub fn with_level(&self, c: f64) -> Self {
        ContactModel { c, ..*self }
    }

    pub fn h(&self, _x: f64, p: f64) -> f64 {
        p * p + self.h_shift
    }

    pub fn h_p(&self, _x: f64, p: f64) -> f64 {
        2.0 * p
    }

    pub fn h_x(&self, _x: f64, _p: f64) -> f64 {
        0.0
    }

    pub fn lam(&self, x: f64) -> f64 {
        match self.lambda {
            Lambda::Sin => x.sin(),
            Lambda::One => 1.0,
        }
    }

    pub fn lam_prime(&self, x: f64) -> f64 {
        match self.lambda {
            Lambda::Sin => x.cos(),
            Lambda::One => 0.0,
        }
    }

    pub fn hamiltonian_value(&self, x: f64, p: f64, u: f64) -> f64 {
        self.h(x, p) + self.lam(x) * u
    }

    /// Convex dual l(x,v) = sup_p [pv - h(x,p)]; closed form for the quadratic family.
    pub fn l(&self, _x: f64, v: f64) -> f64 {
        v * v / 4.0 - self.h_shift
    }

    /// Maximizer of p |-> pv - h(x,p).
    pub fn l_argmax(&self, _x: f64, v: f64) -> f64 {
        v / 2.0
    }

    /// Full Lagrangian integrand L^c(x,v,u) = l(x,v) + c - lambda(x) u.
    pub fn lagrangian_value(&self, x: f64, v: f64, u: f64) -> f64 {
        self.l(x, v) + self.c - self.lam(x) * u
    }

    /// Golden-section Legendre transform; cross-check for the closed form.
    /// Brackets p in [-P, P] with P = |v|/2 + 1 (the quadratic sup sits at v/2).
    pub fn l_numeric(&self, x: f64, v: f64) -> Result<f64, ModelError> {
        let cap = v.abs() / 2.0 + 1.0;
        let (mut a, mut b) = (-cap, cap);
        let g = |p: f64| p * v - self.h(x, p);
        let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let (mut p1, mut p2) = (b - inv_phi * (b - a), a + inv_phi * (b - a));
        let (mut g1, mut g2) = (g(p1), g(p2));
        for _ in 0..200 {
            if g1 < g2 {
                a = p1;
                p1 = p2;
                g1 = g2;
                p2 = a + inv_phi * (b - a);
                g2 = g(p2);
            } else {
                b = p2;
                p2 = p1;
                g2 = g1;
                p1 = b - inv_phi * (b - a);
                g1 = g(p1);
            }
            if b - a < 1e-13 {
                break;
            }
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(ModelError::LegendreBracket);
        }
        Ok(g(0.5 * (a + b)))
    }

    /// Superlinearity constant C*(K) with pv - h >= K|v| - C*(K); exact for quadratics.
    pub fn cstar(&self, k: f64) -> f64 {
        k * k / 4.0 - self.h_shift
    }

    /// A-priori upper bound B0 on backward iterates of any subsolution
    /// (staying-curve estimate; generous envelope).
    pub fn b0(&self) -> f64 {
        self.lambda0.exp() * (2.0 * self.c.max(0.0) + self.e0.max(0.0) + PI * PI + 1.0)
    }

    /// A-priori Lipschitz bound for solutions at this level: |u'| <= sqrt(c + lambda0 B0 - min h).
    pub fn lip_bound(&self) -> f64 {
        (self.c.max(0.0) + self.lambda0 * self.b0() - self.h_shift.min(0.0)).sqrt()
    }

    /// W^{1,inf} envelope: converged solutions satisfy |u| + Lip(u) <= w_bound.
    pub fn w_bound(&self) -> f64 {
        self.b0() + self.lip_bound()
    }

    /// Velocity cap for the one-step minimization window.
    pub fn v_max(&self) -> f64 {
        2.0 * self.lip_bound()
    }
}
