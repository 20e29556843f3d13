//! Solver, verifier and convergence harness for the one-dimensional
//! stationary first-order mean-field game in current formulation:
//!
//! ```text
//! (u_x + p)^2 / 2 + ε V(x) = g(m) + H̄,    m (u_x + p) = j,    ∫ m = 1
//! ```
//! on the unit torus, with `u(0) = 0`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod model;
pub mod coupling_analysis;
pub mod numerics;
pub mod solver;
pub mod verifier;
pub mod convergence;
pub mod cli;
