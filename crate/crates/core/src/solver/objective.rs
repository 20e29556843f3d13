//! The mass map `H̄ ↦ ∫ m_{H̄} - 1` for each root-found regime, and the
//! bracket its root is searched on.

use crate::coupling_analysis::{Branch, BranchFunction};
use crate::model::{limit_h_bar, Coupling, ProblemSpec, Regime};
use crate::numerics::{integrate_periodic, Direction, MAX_EXPANSIONS};

use super::SolverError;

/// How `m(x)` is recovered from the level `H̄ - εV(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityRule {
    /// `m = h⁻¹(H̄ - εV)`, `h` a global decreasing bijection (regime A).
    Global,
    /// `m = [g⁻¹(εV - H̄)]⁺` (regime B).
    Truncated,
    /// `m = m⁻(H̄ - εV)` (regime C).
    Lower,
    /// `m = m⁺(H̄ - εV)` (regime D).
    Upper,
    /// `m = g⁻¹(εV - H̄)`, `g` decreasing (regime F).
    DecreasingInverse,
}

impl DensityRule {
    pub fn for_regime(regime: Regime) -> Option<Self> {
        match regime {
            Regime::IncreasingCurrent => Some(Self::Global),
            Regime::IncreasingNoCurrent => Some(Self::Truncated),
            Regime::DecreasingLowerBranch => Some(Self::Lower),
            Regime::DecreasingUpperBranch => Some(Self::Upper),
            Regime::DecreasingNoCurrent => Some(Self::DecreasingInverse),
            Regime::DecreasingCritical => None,
        }
    }

    /// Monotonicity of the mass map in `H̄`.
    pub fn direction(self) -> Direction {
        match self {
            Self::Global | Self::Truncated | Self::Lower => Direction::Decreasing,
            Self::Upper | Self::DecreasingInverse => Direction::Increasing,
        }
    }
}

/// Mass map of a canonical (`j ≥ 0`) problem.
pub(crate) struct MassMap<'a> {
    pub rule: DensityRule,
    pub coupling: &'a Coupling,
    pub branch: Option<&'a BranchFunction>,
    pub epsilon: f64,
    pub v: Vec<f64>,
}

impl<'a> MassMap<'a> {
    pub fn new(spec: &'a ProblemSpec, rule: DensityRule, branch: Option<&'a BranchFunction>) -> Self {
        Self {
            rule,
            coupling: &spec.coupling,
            branch,
            epsilon: spec.epsilon,
            v: spec.potential.samples(spec.n_grid),
        }
    }

    /// Density at one node for the level `H̄`.
    pub fn density_at(&self, h_bar: f64, vk: f64) -> Result<f64, SolverError> {
        let y = h_bar - self.epsilon * vk;
        let m = match self.rule {
            DensityRule::Global => self.branch_fn()?.invert(y, Branch::Global)?,
            DensityRule::Lower => self.branch_fn()?.invert(y, Branch::Lower)?,
            DensityRule::Upper => self.branch_fn()?.invert(y, Branch::Upper)?,
            DensityRule::Truncated => self.coupling.g_inverse_truncated(-y),
            DensityRule::DecreasingInverse => self.coupling.g_inverse(-y).ok_or_else(|| {
                SolverError::HypothesesViolated(format!("{} is outside the range of g", -y))
            })?,
        };
        if m.is_finite() {
            Ok(m)
        } else {
            Err(SolverError::HypothesesViolated(format!("density undefined at level {y}")))
        }
    }

    fn branch_fn(&self) -> Result<&BranchFunction, SolverError> {
        self.branch
            .ok_or_else(|| SolverError::WrongRegime("branch inversion without an analysed h".into()))
    }

    pub fn densities(&self, h_bar: f64) -> Result<Vec<f64>, SolverError> {
        self.v.iter().map(|&vk| self.density_at(h_bar, vk)).collect()
    }

    /// `∫ m_{H̄} - 1`; NaN if some node has no density, which the root finder
    /// reports as a non-finite value.
    pub fn eval(&self, h_bar: f64) -> f64 {
        match self.densities(h_bar) {
            Ok(m) => integrate_periodic(&m) - 1.0,
            Err(_) => f64::NAN,
        }
    }
}

/// The level a density `m = 1` node must sit at, as a bracket for `H̄`.
///
/// Since `∫ m = 1`, some `x₀` has `m(x₀) = 1`, i.e. `H̄ = H̄₀ + εV(x₀)` with
/// `H̄₀ = j²/2 - g(1)`. The root therefore lies in `H̄₀ + ε[min V, max V]`;
/// the ends are padded slightly and expanded outward if rounding or
/// truncation hides the sign change. `floor` clamps the lower end.
pub(crate) fn bracket(
    spec: &ProblemSpec,
    map: &MassMap<'_>,
    floor: Option<f64>,
) -> Result<(f64, f64), SolverError> {
    let h0 = limit_h_bar(spec.j, &spec.coupling);
    let eps = spec.epsilon;
    let osc = spec.potential.oscillation();
    let pad = 1e-3 * eps * osc + 1e-9 * (1.0 + h0.abs());
    let mut lo = h0 + eps * spec.potential.v_min() - pad;
    let mut hi = h0 + eps * spec.potential.v_max() + pad;
    if let Some(f) = floor {
        lo = lo.max(f);
    }
    let s = match map.rule.direction() {
        Direction::Increasing => 1.0,
        Direction::Decreasing => -1.0,
    };
    let check = |h: f64| -> Result<f64, SolverError> {
        let v = map.eval(h);
        if v.is_finite() {
            Ok(s * v)
        } else {
            Err(SolverError::HypothesesViolated(format!("mass map undefined at H = {h}")))
        }
    };
    let mut g_lo = check(lo)?;
    let mut g_hi = check(hi)?;
    for _ in 0..MAX_EXPANSIONS {
        if g_lo <= 0.0 && g_hi >= 0.0 {
            return Ok((lo, hi));
        }
        let width = hi - lo;
        if g_lo > 0.0 {
            if floor == Some(lo) {
                return Err(SolverError::NoBracket { lo, hi });
            }
            lo -= 2.0 * width;
            if let Some(f) = floor {
                lo = lo.max(f);
            }
            g_lo = check(lo)?;
        } else {
            hi += 2.0 * width;
            g_hi = check(hi)?;
        }
    }
    Err(SolverError::NoBracket { lo, hi })
}
