//! Domain types shared by the solver, the verifier and the convergence
//! harness.

mod config;
mod coupling;
mod potential;

pub use config::{parse_config, ConfigError, ProblemConfig};
pub use coupling::{Coupling, CouplingFamily, CustomCoupling, Monotonicity, ScalarFn};
pub use potential::{Potential, PotentialFamily};

pub(crate) use coupling::log_space;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TOL_ROOT: f64 = 1e-13;
pub const DEFAULT_TOL_RESIDUAL: f64 = 1e-9;
pub const MIN_GRID: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("negative epsilon: {0}")]
    NegativeEpsilon(f64),
    #[error("grid must have at least {MIN_GRID} nodes, got {0}")]
    GridTooSmall(usize),
    #[error("{0}")]
    InvalidParameter(String),
    #[error("coupling is not monotone: g'({at}) = {derivative}")]
    NonMonotoneCoupling { at: f64, derivative: f64 },
    #[error("coupling inverse is inconsistent at m = {at} (got {got})")]
    BadInverse { at: f64, got: f64 },
    #[error("potential is not periodic: |V(0) - V(1)| = {gap}")]
    NotPeriodic { gap: f64 },
}

/// A validated instance of the stationary system in current formulation.
///
/// `j` and `potential` are stored as given. A negative current is solved via
/// the reflection `x ↦ -x`, recorded in `reflected`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub coupling: Coupling,
    pub potential: Potential,
    pub j: f64,
    pub epsilon: f64,
    pub n_grid: usize,
    pub tol_root: f64,
    pub tol_residual: f64,
    pub reflected: bool,
}

/// Builds and validates a problem with default tolerances.
pub fn make_problem(
    coupling: Coupling,
    potential: Potential,
    j: f64,
    epsilon: f64,
    n_grid: usize,
) -> Result<ProblemSpec, ModelError> {
    ProblemSpec::new(coupling, potential, j, epsilon, n_grid)
}

impl ProblemSpec {
    pub fn new(
        coupling: Coupling,
        potential: Potential,
        j: f64,
        epsilon: f64,
        n_grid: usize,
    ) -> Result<Self, ModelError> {
        let spec = Self {
            coupling,
            potential,
            j,
            epsilon,
            n_grid,
            tol_root: DEFAULT_TOL_ROOT,
            tol_residual: DEFAULT_TOL_RESIDUAL,
            reflected: j < 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_tolerances(mut self, tol_root: f64, tol_residual: f64) -> Result<Self, ModelError> {
        self.tol_root = tol_root;
        self.tol_residual = tol_residual;
        self.validate()?;
        Ok(self)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self, ModelError> {
        let mut s = self.clone();
        s.epsilon = epsilon;
        s.validate()?;
        Ok(s)
    }

    pub fn with_grid(&self, n_grid: usize) -> Result<Self, ModelError> {
        let mut s = self.clone();
        s.n_grid = n_grid;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.epsilon < 0.0 {
            return Err(ModelError::NegativeEpsilon(self.epsilon));
        }
        if !self.epsilon.is_finite() {
            return Err(ModelError::InvalidParameter(format!("epsilon must be finite, got {}", self.epsilon)));
        }
        if !self.j.is_finite() {
            return Err(ModelError::InvalidParameter(format!("j must be finite, got {}", self.j)));
        }
        if self.n_grid < MIN_GRID {
            return Err(ModelError::GridTooSmall(self.n_grid));
        }
        if !(self.tol_root > 0.0) || !(self.tol_residual > 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "tolerances must be positive (tol_root={}, tol_residual={})",
                self.tol_root, self.tol_residual
            )));
        }
        if let CouplingFamily::Custom(_) = self.coupling.family() {
            self.coupling.validate()?;
        }
        self.potential.validate()?;
        Ok(())
    }

    /// The mirrored problem `(j, V(x)) → (-j, V(-x))` with `reflected` cleared.
    pub fn canonical(&self) -> Self {
        if !self.reflected {
            return self.clone();
        }
        Self {
            potential: self.potential.reflected(),
            j: -self.j,
            reflected: false,
            ..self.clone()
        }
    }

    /// Uniform grid nodes.
    pub fn grid(&self) -> Vec<f64> {
        crate::numerics::grid(self.n_grid)
    }

    /// Effective Hamiltonian of the potential-free system, `j²/2 - g(1)`.
    pub fn h_bar_limit(&self) -> f64 {
        limit_h_bar(self.j, &self.coupling)
    }
}

/// `j²/2 - g(1)`, the effective Hamiltonian at `ε = 0`.
pub fn limit_h_bar(j: f64, coupling: &Coupling) -> f64 {
    j * j / 2.0 - coupling.g(1.0)
}

/// Which constructive case produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Increasing `g`, `j ≠ 0`.
    #[serde(rename = "A_inc_jnz")]
    IncreasingCurrent,
    /// Increasing `g`, `j = 0`.
    #[serde(rename = "B_inc_j0")]
    IncreasingNoCurrent,
    /// Decreasing `g`, `m*(j) > 1`: lower branch.
    #[serde(rename = "C_dec_mstar_gt1")]
    DecreasingLowerBranch,
    /// Decreasing `g`, `m*(j) < 1`: upper branch.
    #[serde(rename = "D_dec_mstar_lt1")]
    DecreasingUpperBranch,
    /// Decreasing `g`, `m*(j) = 1`: piecewise with a switch point.
    #[serde(rename = "E_dec_mstar_eq1")]
    DecreasingCritical,
    /// Decreasing `g`, `j = 0`.
    #[serde(rename = "F_dec_j0")]
    DecreasingNoCurrent,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::IncreasingCurrent => "A_inc_jnz",
            Regime::IncreasingNoCurrent => "B_inc_j0",
            Regime::DecreasingLowerBranch => "C_dec_mstar_gt1",
            Regime::DecreasingUpperBranch => "D_dec_mstar_lt1",
            Regime::DecreasingCritical => "E_dec_mstar_eq1",
            Regime::DecreasingNoCurrent => "F_dec_j0",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Switch point of a piecewise density with its one-sided limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Switch {
    pub d: f64,
    pub m_left: f64,
    pub m_right: f64,
}

/// A sampled solution `(u, m, H̄, p)` on the uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionTriple {
    pub u: Vec<f64>,
    pub m: Vec<f64>,
    pub h_bar: f64,
    pub p: f64,
    pub regime: Regime,
    pub switch: Option<Switch>,
}

impl SolutionTriple {
    /// The potential-free solution `(0, 1, j²/2 - g(1))` with `p = j`.
    pub fn unperturbed(spec: &ProblemSpec, regime: Regime) -> Self {
        Self {
            u: vec![0.0; spec.n_grid],
            m: vec![1.0; spec.n_grid],
            h_bar: spec.h_bar_limit(),
            p: spec.j,
            regime,
            switch: None,
        }
    }

    pub fn n_grid(&self) -> usize {
        self.m.len()
    }

    /// Maps a solution through `x ↦ -x`, flipping the sign of `p`.
    pub fn reflected(&self) -> Self {
        let n = self.m.len();
        let flip = |v: &[f64]| (0..n).map(|k| v[(n - k) % n]).collect::<Vec<_>>();
        let switch = self.switch.map(|s| Switch {
            d: if s.d == 0.0 { 0.0 } else { 1.0 - s.d },
            m_left: s.m_right,
            m_right: s.m_left,
        });
        Self {
            u: flip(&self.u),
            m: flip(&self.m),
            h_bar: self.h_bar,
            p: -self.p,
            regime: self.regime,
            switch,
        }
    }

    pub fn d_switch(&self) -> Option<f64> {
        self.switch.map(|s| s.d)
    }
}
