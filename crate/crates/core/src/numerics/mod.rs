//! Root finding and periodic quadrature primitives.

mod quadrature;
mod roots;

pub use quadrature::{combine, cumulative_integral, integrate_periodic, integrate_piecewise, Break};
pub use roots::{expand_bracket, find_root_monotone, Direction, Growth, MAX_EXPANSIONS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("nonmonotone detected near {at}")]
    NonMonotone { at: f64 },
    #[error("non-finite function value at {at}")]
    NonFinite { at: f64 },
    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("break point {0} outside [0, 1)")]
    BreakOutOfRange(f64),
    #[error("sample length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("grid of {0} nodes is too small")]
    GridTooSmall(usize),
}

/// Uniform grid `x_k = k / n`, `k = 0..n`.
pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / n as f64).collect()
}
