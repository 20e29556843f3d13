//! The auxiliary function `h(m) = j²/(2m²) - g(m)` and its inverses.
//!
//! With the flux identity `u_x + p = j/m`, the Hamilton-Jacobi equation
//! reduces pointwise to `h(m(x)) = H̄ - εV(x)`. For increasing `g` the map
//! `h` is a decreasing bijection of `(0, ∞)`. For decreasing `g` and `j ≠ 0`
//! it is convex with a unique minimizer `m*`, and every level above `h(m*)`
//! has one preimage on each side of it.

use thiserror::Error;

use crate::model::{log_space, Coupling, Monotonicity, Potential};
use crate::numerics::{self, expand_bracket, find_root_monotone, Direction, Growth, NumericsError};

/// Relative distance to `h(m*)` at which both branches return `m*`.
pub const JUNCTION_TOL: f64 = 1e-12;
/// Required rise of `h` above its minimum on both sides (coercivity check).
const COERCIVITY_RISE: f64 = 10.0;
/// Relative bisection tolerance on `m` for branch inversion.
const INVERT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("convexity violated: h''({at}) = {value} < 0")]
    ConvexityViolated { at: f64, value: f64 },
    #[error("no interior minimum of h: {0}")]
    NoInteriorMinimum(String),
    #[error("below minimum: level {y} is under h(m*) = {h_min}")]
    BelowMinimum { y: f64, h_min: f64 },
    #[error("{0}")]
    NotApplicable(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `h(m) = j²/(2m²) - g(m)`.
pub fn eval_h(m: f64, j: f64, coupling: &Coupling) -> Result<f64, AnalysisError> {
    if !(m > 0.0) {
        return Err(AnalysisError::NonPositiveDensity(m));
    }
    Ok(h_unchecked(m, j, coupling))
}

#[inline]
pub(crate) fn h_unchecked(m: f64, j: f64, coupling: &Coupling) -> f64 {
    j * j / (2.0 * m * m) - coupling.g(m)
}

/// `h'(m) = -j²/m³ - g'(m)`.
pub fn h_prime(m: f64, j: f64, coupling: &Coupling) -> f64 {
    -j * j / (m * m * m) - coupling.g_prime(m)
}

/// `h''(m) = 3j²/m⁴ - g''(m)`.
pub fn h_second(m: f64, j: f64, coupling: &Coupling) -> f64 {
    3.0 * j * j / (m * m * m * m) - coupling.g_second(m)
}

/// Which preimage of a level `y` under `h` to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `m ≤ m*`, where `h` decreases.
    Lower,
    /// `m ≥ m*`, where `h` increases.
    Upper,
    /// Increasing `g`: `h` is a global decreasing bijection.
    Global,
}

/// `h` for fixed `(j, g)` together with its minimizer when one exists.
#[derive(Debug, Clone)]
pub struct BranchFunction {
    pub j: f64,
    pub coupling: Coupling,
    /// Present for decreasing `g` with `j ≠ 0`.
    pub m_star: Option<f64>,
    pub h_at_star: Option<f64>,
}

impl BranchFunction {
    /// Analyses `h`. For decreasing `g` and `j ≠ 0` this locates `m*` and
    /// checks convexity and coercivity by sampling.
    pub fn new(j: f64, coupling: &Coupling) -> Result<Self, AnalysisError> {
        let (m_star, h_at_star) = match coupling.monotonicity() {
            Monotonicity::StrictlyDecreasing if j != 0.0 => {
                let m = minimizer_m_star(j, coupling)?;
                (Some(m), Some(h_unchecked(m, j, coupling)))
            }
            _ => (None, None),
        };
        Ok(Self { j, coupling: coupling.clone(), m_star, h_at_star })
    }

    /// Same as [`BranchFunction::new`] but with the minimizer replaced by
    /// `m_star`, used when the minimizer is known exactly.
    pub fn with_m_star(j: f64, coupling: &Coupling, m_star: f64) -> Self {
        Self {
            j,
            coupling: coupling.clone(),
            m_star: Some(m_star),
            h_at_star: Some(h_unchecked(m_star, j, coupling)),
        }
    }

    pub fn h(&self, m: f64) -> f64 {
        h_unchecked(m, self.j, &self.coupling)
    }

    pub fn h_prime(&self, m: f64) -> f64 {
        h_prime(m, self.j, &self.coupling)
    }

    /// Solves `h(m) = y` on the requested branch.
    pub fn invert(&self, y: f64, branch: Branch) -> Result<f64, AnalysisError> {
        match branch {
            Branch::Global => self.invert_global(y),
            Branch::Lower | Branch::Upper => {
                let (m_star, h_min) = match (self.m_star, self.h_at_star) {
                    (Some(m), Some(h)) => (m, h),
                    _ => {
                        return Err(AnalysisError::NotApplicable(
                            "branch inversion needs a decreasing coupling and j != 0".into(),
                        ))
                    }
                };
                let gap = y - h_min;
                if gap.abs() <= JUNCTION_TOL * h_min.abs().max(1.0) {
                    return Ok(m_star);
                }
                if gap < 0.0 {
                    return Err(AnalysisError::BelowMinimum { y, h_min });
                }
                let f = |m: f64| self.h(m) - y;
                let (lo, hi, dir) = if branch == Branch::Lower {
                    let (lo, hi) = expand_bracket(f, 0.5 * m_star, m_star, Direction::Decreasing, Growth::Geometric)?;
                    (lo, hi, Direction::Decreasing)
                } else {
                    let (lo, hi) = expand_bracket(f, m_star, 2.0 * m_star, Direction::Increasing, Growth::Geometric)?;
                    (lo, hi, Direction::Increasing)
                };
                Ok(find_root_monotone(f, (lo, hi), dir, INVERT_TOL * hi)?)
            }
        }
    }

    fn invert_global(&self, y: f64) -> Result<f64, AnalysisError> {
        if self.coupling.monotonicity() != Monotonicity::StrictlyIncreasing {
            return Err(AnalysisError::NotApplicable(
                "global inversion needs an increasing coupling".into(),
            ));
        }
        let f = |m: f64| self.h(m) - y;
        let (lo, hi) = expand_bracket(f, 0.5, 2.0, Direction::Decreasing, Growth::Geometric)?;
        Ok(find_root_monotone(f, (lo, hi), Direction::Decreasing, INVERT_TOL * hi)?)
    }
}

/// The unique zero of `h'` for decreasing `g` and `j ≠ 0`.
///
/// Convexity is checked by sampling `h''` on `[m*/10³, 10³ m*]`, coercivity by
/// requiring `h` to rise `10` above `h(m*)` on both sides within 60 doublings.
pub fn minimizer_m_star(j: f64, coupling: &Coupling) -> Result<f64, AnalysisError> {
    if j == 0.0 {
        return Err(AnalysisError::NotApplicable("m* is only defined for j != 0".into()));
    }
    if coupling.monotonicity() != Monotonicity::StrictlyDecreasing {
        return Err(AnalysisError::NotApplicable("m* is only defined for decreasing g".into()));
    }
    let hp = |m: f64| h_prime(m, j, coupling);
    let (lo, hi) = expand_bracket(hp, 0.5, 2.0, Direction::Increasing, Growth::Geometric)
        .map_err(|e| AnalysisError::NoInteriorMinimum(e.to_string()))?;
    let m_star = find_root_monotone(hp, (lo, hi), Direction::Increasing, 1e-15 * hi)?;

    for m in log_space(1e-3 * m_star, 1e3 * m_star, 400) {
        let value = h_second(m, j, coupling);
        if value < 0.0 {
            return Err(AnalysisError::ConvexityViolated { at: m, value });
        }
    }
    let target = h_unchecked(m_star, j, coupling) + COERCIVITY_RISE;
    let rises = |step: f64| {
        let mut m = m_star;
        (0..numerics::MAX_EXPANSIONS).any(|_| {
            m *= step;
            h_unchecked(m, j, coupling) >= target
        })
    };
    if !rises(0.5) || !rises(2.0) {
        return Err(AnalysisError::NoInteriorMinimum(format!(
            "h does not rise {COERCIVITY_RISE} above h(m*) on both sides of m* = {m_star}"
        )));
    }
    Ok(m_star)
}

/// Solves `h(m) = y` on a branch; see [`BranchFunction::invert`].
pub fn invert_h_branch(y: f64, branch: Branch, j: f64, coupling: &Coupling) -> Result<f64, AnalysisError> {
    BranchFunction::new(j, coupling)?.invert(y, branch)
}

/// `H̄_cr` and the masses `α∓` of the two branch densities at that level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalQuantities {
    pub m_star: f64,
    pub h_bar_cr: f64,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
}

/// `H̄_cr = ε max V + h(m*)` and `α∓ = ∫ m∓(H̄_cr - εV)`, integrated on an
/// `n_grid` uniform grid.
pub fn critical_quantities(
    j: f64,
    coupling: &Coupling,
    potential: &Potential,
    epsilon: f64,
    n_grid: usize,
) -> Result<CriticalQuantities, AnalysisError> {
    critical_quantities_for(&BranchFunction::new(j, coupling)?, potential, epsilon, n_grid)
}

pub(crate) fn critical_quantities_for(
    bf: &BranchFunction,
    potential: &Potential,
    epsilon: f64,
    n_grid: usize,
) -> Result<CriticalQuantities, AnalysisError> {
    let (m_star, h_min) = match (bf.m_star, bf.h_at_star) {
        (Some(m), Some(h)) => (m, h),
        _ => {
            return Err(AnalysisError::NotApplicable(
                "critical quantities need a decreasing coupling and j != 0".into(),
            ))
        }
    };
    let h_bar_cr = epsilon * potential.v_max() + h_min;
    let v = potential.samples(n_grid);
    let mut lower = Vec::with_capacity(n_grid);
    let mut upper = Vec::with_capacity(n_grid);
    for vk in &v {
        let y = h_bar_cr - epsilon * vk;
        lower.push(bf.invert(y, Branch::Lower)?);
        upper.push(bf.invert(y, Branch::Upper)?);
    }
    Ok(CriticalQuantities {
        m_star,
        h_bar_cr,
        alpha_minus: numerics::integrate_periodic(&lower),
        alpha_plus: numerics::integrate_periodic(&upper),
    })
}

/// `j_cr = √(-g'(1))`, the current with `m*(j_cr) = 1`.
pub fn critical_current(coupling: &Coupling) -> Result<f64, AnalysisError> {
    let d = coupling.g_prime(1.0);
    if !(d < 0.0) {
        return Err(AnalysisError::NotApplicable(format!(
            "critical current needs g'(1) < 0, got {d}"
        )));
    }
    Ok((-d).sqrt())
}
