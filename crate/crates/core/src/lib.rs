//! Numerical core for homogenization of max-min Hamilton–Jacobi equations in
//! random environments with finite range of dependence.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It is organised
//! around four modules:
//!
//! * [`env`]: seeded lattice-bump random fields with a certified dependence
//!   range, plus shifted and strip-patched views of them.
//! * [`game`]: Hamiltonians of the form
//!   `H(x,p) = max_b min_a { -l(x,a,b) - <f(a,b),p> }` over finite action sets,
//!   their structural constants, the momentum shift, and the localization of a
//!   generic Lipschitz Hamiltonian into that form.
//! * [`pde`]: semi-Lagrangian (dynamic programming) and local Lax–Friedrichs
//!   solvers on shrinking domains, and checks of the deterministic PDE facts.
//! * [`homog`]: Monte-Carlo tables of `U(t) = E[u(t,0)]`, effective
//!   Hamiltonian extraction, and the concentration, subadditivity, strip and
//!   rate experiments.
#![no_std]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod env;
mod error;
pub mod game;
pub mod hash;
pub mod homog;
pub mod math;
pub mod pde;

pub use error::{Error, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// A point or vector in R^d, `d <= 2`; unused trailing coordinates are zero.
pub type Vec2 = [f64; MAX_DIM];

pub(crate) fn to_vec2(x: &[f64]) -> Vec2 {
    let mut out = [0.0; MAX_DIM];
    for (o, v) in out.iter_mut().zip(x) {
        *o = *v;
    }
    out
}
