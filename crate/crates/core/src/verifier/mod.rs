//! Certification of a sampled triple as a regular solution, from discrete
//! residuals only:
//!
//! * (i) the Hamilton-Jacobi equation holds at every node;
//! * (ii) every jump of `u_x` goes down (`u_x(x⁻) ≥ u_x(x⁺)`);
//! * (iii) `m ≥ 0` and `∫ m = 1`;
//! * (iv) the flux is constant: `u + p x = ∫₀ˣ j/m` and `p = ∫ j/m`.
//!
//! Nothing here depends on how the triple was constructed.

mod scan;

pub use scan::{brute_scan_h_bar, ScanObjective, ScanResult, SCAN_POINTS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ProblemSpec, SolutionTriple};
use crate::numerics::{self, Break};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("grid mismatch: spec has {expected} nodes, solution has {found}")]
    GridMismatch { expected: usize, found: usize },
    #[error("switch point {0} outside [0, 1)")]
    BadSwitch(f64),
    #[error("{0}")]
    NotApplicable(String),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub pass: bool,
    pub max_residual: f64,
}

/// A discontinuity of `u_x` between two neighbouring nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Node just after the jump.
    pub node: usize,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_i: CheckResult,
    pub check_ii: CheckResult,
    pub check_iii: CheckResult,
    pub check_iv: CheckResult,
    pub jumps: Vec<Jump>,
    pub pass: bool,
    pub failing: Vec<String>,
}

/// Runs checks (i) to (iv) with tolerance `spec.tol_residual`.
pub fn verify_regular(spec: &ProblemSpec, sol: &SolutionTriple) -> Result<VerificationReport, VerifyError> {
    let n = spec.n_grid;
    for len in [sol.m.len(), sol.u.len()] {
        if len != n {
            return Err(VerifyError::GridMismatch { expected: n, found: len });
        }
    }
    if let Some(s) = &sol.switch {
        if !(0.0..1.0).contains(&s.d) {
            return Err(VerifyError::BadSwitch(s.d));
        }
    }
    let tol = spec.tol_residual;
    let j = spec.j;
    let v = spec.potential.samples(n);

    // Velocity u_x + p = j/m from the flux identity (zero without current).
    let velocity: Vec<f64> = sol.m.iter().map(|&m| if j == 0.0 { 0.0 } else { j / m }).collect();
    let u_x: Vec<f64> = velocity.iter().map(|w| w - sol.p).collect();

    // (i)
    let mut hj = 0.0f64;
    for k in 0..n {
        let w = velocity[k];
        let r = w * w / 2.0 + spec.epsilon * v[k] - spec.coupling.g(sol.m[k]) - sol.h_bar;
        hj = hj.max(if r.is_finite() { r.abs() } else { f64::INFINITY });
    }
    let check_i = CheckResult { pass: hj <= tol, max_residual: hj };

    // (ii)
    let jumps = jump_detect(&u_x, default_jump_threshold(&u_x));
    let upward = jumps.iter().map(|jp| jp.right - jp.left).fold(0.0f64, f64::max);
    let check_ii = CheckResult { pass: jumps.iter().all(|jp| jp.left >= jp.right), max_residual: upward };

    // (iii)
    let negative = sol.m.iter().map(|&m| (-m).max(0.0)).fold(0.0f64, f64::max);
    let mass = match &sol.switch {
        None => numerics::integrate_periodic(&sol.m),
        Some(s) => numerics::integrate_piecewise(
            &sol.m,
            &sol.m,
            &Break { d: s.d, left: s.m_left, right: s.m_right },
        )
        .unwrap_or(f64::NAN),
    };
    let mass_err = (mass - 1.0).abs();
    let all_finite = sol.m.iter().all(|m| m.is_finite());
    let check_iii = CheckResult {
        pass: all_finite && negative == 0.0 && mass_err <= tol,
        max_residual: if mass_err.is_nan() { f64::INFINITY } else { mass_err.max(negative) },
    };

    // (iv)
    let flux_res = integrated_flux_residual(spec, sol, &velocity);
    let check_iv = CheckResult { pass: flux_res <= tol * sol.p.abs().max(1.0), max_residual: flux_res };

    let mut failing = Vec::new();
    for (name, c) in [("check_i", &check_i), ("check_ii", &check_ii), ("check_iii", &check_iii), ("check_iv", &check_iv)] {
        if !c.pass {
            failing.push(name.to_string());
        }
    }
    Ok(VerificationReport {
        check_i,
        check_ii,
        check_iii,
        check_iv,
        jumps,
        pass: failing.is_empty(),
        failing,
    })
}

/// `max_k |u_k + p x_k - ∫₀^{x_k} j/m|` together with `|p - ∫ j/m|`.
fn integrated_flux_residual(spec: &ProblemSpec, sol: &SolutionTriple, velocity: &[f64]) -> f64 {
    let n = velocity.len();
    let brk = sol.switch.as_ref().map(|s| {
        let w = |m: f64| if spec.j == 0.0 { 0.0 } else { spec.j / m };
        Break { d: s.d, left: w(s.m_left), right: w(s.m_right) }
    });
    let running = match numerics::cumulative_integral(velocity, brk.as_ref()) {
        Ok(r) => r,
        Err(_) => return f64::INFINITY,
    };
    if velocity.iter().any(|w| !w.is_finite()) {
        return f64::INFINITY;
    }
    let mut worst = (sol.p - running[n]).abs();
    for k in 0..n {
        let x = k as f64 / n as f64;
        worst = worst.max((sol.u[k] + sol.p * x - running[k]).abs());
    }
    worst
}

/// `10 · median |Δu_x| + 1e-8`, differences taken around the torus.
pub fn default_jump_threshold(u_x: &[f64]) -> f64 {
    let n = u_x.len();
    if n < 2 {
        return 1e-8;
    }
    let mut d: Vec<f64> = (0..n).map(|k| (u_x[(k + 1) % n] - u_x[k]).abs()).collect();
    d.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 { d[n / 2] } else { 0.5 * (d[n / 2 - 1] + d[n / 2]) };
    10.0 * median + 1e-8
}

/// Neighbouring node pairs (including the wrap `N-1 → 0`) whose difference
/// exceeds `threshold`.
pub fn jump_detect(u_x: &[f64], threshold: f64) -> Vec<Jump> {
    let n = u_x.len();
    (0..n)
        .filter_map(|k| {
            let next = (k + 1) % n;
            let (left, right) = (u_x[k], u_x[next]);
            ((right - left).abs() > threshold || !(right - left).is_finite()).then_some(Jump { node: next, left, right })
        })
        .collect()
}
