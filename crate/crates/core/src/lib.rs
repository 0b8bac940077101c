//! Stationary solutions of the contact Hamilton-Jacobi equation
//!
//! ```text
//!     h(x, u'(x)) + lambda(x) u(x) = c        on the circle R / 2 pi Z
//! ```
//!
//! with quadratic kinetic part h(x, p) = p^2 + h_shift and coupling
//! lambda(x) = sin x (or the constant coupling lambda = 1 as a contrast
//! case). Solutions are computed by two independent routes and can be
//! cross-checked against closed-form references:
//!
//! * [`semigroup`] — an implicit Lax-Oleinik scheme on a periodic grid.
//!   Iterating the backward (resp. forward) one-step operator from a seed
//!   converges to the largest (resp. smallest) stationary solution the seed
//!   sees; composing the two isolates the extremal pair.
//! * [`characteristics`] — the contact characteristic flow in (x, p, u).
//!   Unstable manifolds of the flow's fixed points are traced directly and
//!   assembled into the same stationary solutions by a min over translates.
//! * [`critical`] — bisection for the critical level c(H), the threshold
//!   below which the backward iteration escapes to -infinity.
//! * [`reference`] — closed-form solutions at the critical level via
//!   quadrature, used as ground truth in tests.
//! * [`model`] — the grid, the Hamiltonian/Lagrangian pair, and the a
//!   priori envelope constants the scheme relies on.

pub mod characteristics;
pub mod critical;
pub mod model;
pub mod reference;
pub mod semigroup;
