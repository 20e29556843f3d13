//! Vanishing-potential sweeps: errors against the `ε = 0` solution, fitted
//! log-log slopes, and the explicit constant bounds.
//!
//! Predicted bounds, with `osc = max V - min V`:
//!
//! | regime      | `|H̄_ε - H̄₀|`  | `sup|m_ε - 1|`          | `sup|u_ε|`                  |
//! |-------------|---------------|-------------------------|-----------------------------|
//! | `m* = 1`    | `max|V| ε`    | `2√osc/√h''(1) · √ε`    | `16|j|√osc/√h''(1) · √ε`    |
//! | otherwise   | `max|V| ε`    | `2 osc/|h'(1)| · ε`     | `8|j| osc/|h'(1)| · ε`      |

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling_analysis::{h_prime, h_second};
use crate::model::{ProblemSpec, Regime};
use crate::solver::{classify, solve, SolverError};
use crate::verifier::verify_regular;

/// Errors at or below this are treated as exact zeros in fits.
pub const EXACT_ERROR: f64 = 1e-13;
/// Minimum grid used by sweeps.
pub const MIN_SWEEP_GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub c_h: f64,
    pub c_m: f64,
    pub c_u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub regime: Regime,
    pub order_h: f64,
    pub order_m: f64,
    pub order_u: f64,
    pub constants: RateConstants,
    /// `u_ε ≡ 0` for every `ε` (no current).
    pub u_vanishes: bool,
}

/// Orders and constants of the bound matching the problem's regime.
pub fn predict_rates(spec: &ProblemSpec) -> Result<RatePrediction, SolverError> {
    let regime = classify(spec)?;
    let osc = spec.potential.oscillation();
    let j = spec.j.abs();
    let c_h = spec.potential.abs_max();
    let prediction = if regime == Regime::DecreasingCritical {
        let root = h_second(1.0, j, &spec.coupling).sqrt();
        RatePrediction {
            regime,
            order_h: 1.0,
            order_m: 0.5,
            order_u: 0.5,
            constants: RateConstants { c_h, c_m: 2.0 * osc.sqrt() / root, c_u: 16.0 * j * osc.sqrt() / root },
            u_vanishes: false,
        }
    } else {
        let slope = h_prime(1.0, j, &spec.coupling).abs();
        RatePrediction {
            regime,
            order_h: 1.0,
            order_m: 1.0,
            order_u: 1.0,
            constants: RateConstants { c_h, c_m: 2.0 * osc / slope, c_u: 8.0 * j * osc / slope },
            u_vanishes: j == 0.0,
        }
    };
    Ok(prediction)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeFit {
    Fitted { slope: f64, intercept: f64, r_squared: f64 },
    /// All errors vanish; the slope is undefined.
    Exact,
}

impl SlopeFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            SlopeFit::Fitted { slope, .. } => Some(*slope),
            SlopeFit::Exact => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("ladder too short for fit: {0} usable rows, need 3")]
    TooFewRows(usize),
}

/// Least squares of `log err` against `log ε` over `(ε, err)` pairs.
///
/// Errors at or below [`EXACT_ERROR`] are dropped; if all are, the fit is
/// [`SlopeFit::Exact`].
pub fn fit_loglog(rows: &[(f64, f64)]) -> Result<SlopeFit, FitError> {
    if rows.len() >= 3 && rows.iter().all(|&(_, e)| e <= EXACT_ERROR) {
        return Ok(SlopeFit::Exact);
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|&&(eps, e)| eps > 0.0 && e > EXACT_ERROR && e.is_finite())
        .map(|&(eps, e)| (eps.ln(), e.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(FitError::TooFewRows(n));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit::Fitted { slope, intercept, r_squared })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub h_bar: f64,
    pub err_h: f64,
    pub err_m: f64,
    pub err_u: f64,
    pub res_hj: f64,
    pub res_transport: f64,
    pub d_switch: Option<f64>,
    pub bound_margin_h: f64,
    pub bound_margin_m: f64,
    pub bound_margin_u: f64,
    pub verified: bool,
    /// Solver failure for this rung; such rows are excluded from the fits.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub n_grid: usize,
    pub h_bar_limit: f64,
    pub prediction: RatePrediction,
    pub rows: Vec<SweepRow>,
    pub slope_h: SlopeFit,
    pub slope_m: SlopeFit,
    pub slope_u: SlopeFit,
    /// Number of smallest-ε rows used in the fits.
    pub fit_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("ladder too short for fit: {0} rungs, need at least 3")]
    LadderTooShort(usize),
    #[error("ladder must be positive and strictly decreasing")]
    BadLadder,
    #[error("fit of {quantity}: {source}")]
    Fit {
        quantity: &'static str,
        #[source]
        source: FitError,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// `ε_k = ε_max 2^{-k}`, `k = 0..count`.
pub fn geometric_ladder(eps_max: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| eps_max * 0.5f64.powi(k as i32)).collect()
}

/// `max(256, ⌈32/√ε_min⌉)`.
pub fn refined_grid(eps_min: f64) -> usize {
    let n = (32.0 / eps_min.sqrt()).ceil();
    if n.is_finite() {
        (n as usize).max(MIN_SWEEP_GRID)
    } else {
        MIN_SWEEP_GRID
    }
}

/// `err / (c ε^order)`, zero when the error vanishes.
pub fn bound_margin(err: f64, c: f64, eps: f64, order: f64) -> f64 {
    if err == 0.0 {
        0.0
    } else {
        err / (c * eps.powf(order))
    }
}

/// Solves and verifies every rung (in parallel), then fits the slopes on
/// the smaller half of the ladder.
///
/// The grid is refined to [`refined_grid`] of the smallest `ε` unless the
/// template asks for more. Rows come back in ladder order.
pub fn sweep(template: &ProblemSpec, ladder: &[f64]) -> Result<SweepReport, SweepError> {
    if ladder.len() < 3 {
        return Err(SweepError::LadderTooShort(ladder.len()));
    }
    if ladder.iter().any(|&e| !(e > 0.0)) || ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SweepError::BadLadder);
    }
    let eps_min = *ladder.last().expect("non-empty");
    let n_grid = refined_grid(eps_min).max(template.n_grid);
    let base = template.with_grid(n_grid)?;
    let prediction = predict_rates(&base)?;
    let h0 = base.h_bar_limit();

    let rows: Vec<SweepRow> = ladder
        .par_iter()
        .map(|&eps| sweep_row(&base, eps, h0, &prediction))
        .collect();

    let fit_rows = (ladder.len() + 1) / 2;
    let fit_rows = fit_rows.max(3).min(ladder.len());
    let tail: Vec<&SweepRow> = rows[rows.len() - fit_rows..].iter().filter(|r| r.error.is_none()).collect();
    let fit = |quantity: &'static str, pick: fn(&SweepRow) -> f64| {
        let pairs: Vec<(f64, f64)> = tail.iter().map(|r| (r.epsilon, pick(r))).collect();
        fit_loglog(&pairs).map_err(|source| SweepError::Fit { quantity, source })
    };
    Ok(SweepReport {
        n_grid,
        h_bar_limit: h0,
        prediction,
        slope_h: fit("err_H", |r| r.err_h)?,
        slope_m: fit("err_m", |r| r.err_m)?,
        slope_u: fit("err_u", |r| r.err_u)?,
        rows,
        fit_rows,
    })
}

fn sweep_row(base: &ProblemSpec, eps: f64, h0: f64, pred: &RatePrediction) -> SweepRow {
    let failed = |msg: String| SweepRow {
        epsilon: eps,
        h_bar: f64::NAN,
        err_h: f64::NAN,
        err_m: f64::NAN,
        err_u: f64::NAN,
        res_hj: f64::NAN,
        res_transport: f64::NAN,
        d_switch: None,
        bound_margin_h: f64::NAN,
        bound_margin_m: f64::NAN,
        bound_margin_u: f64::NAN,
        verified: false,
        error: Some(msg),
    };
    let spec = match base.with_epsilon(eps) {
        Ok(s) => s,
        Err(e) => return failed(e.to_string()),
    };
    let sol = match solve(&spec) {
        Ok(s) => s,
        Err(e) => return failed(e.to_string()),
    };
    let report = match verify_regular(&spec, &sol) {
        Ok(r) => r,
        Err(e) => return failed(e.to_string()),
    };
    let err_h = (sol.h_bar - h0).abs();
    let err_m = sol.m.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    let err_u = sol.u.iter().map(|u| u.abs()).fold(0.0, f64::max);
    let c = pred.constants;
    SweepRow {
        epsilon: eps,
        h_bar: sol.h_bar,
        err_h,
        err_m,
        err_u,
        res_hj: report.check_i.max_residual,
        res_transport: report.check_iv.max_residual,
        d_switch: sol.d_switch(),
        bound_margin_h: bound_margin(err_h, c.c_h, eps, pred.order_h),
        bound_margin_m: bound_margin(err_m, c.c_m, eps, pred.order_m),
        bound_margin_u: bound_margin(err_u, c.c_u, eps, pred.order_u),
        verified: report.pass,
        error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_problem, Coupling, Potential};

    #[test]
    fn predictions() {
        let v = Potential::cosine(1.0);
        let p = predict_rates(&make_problem(Coupling::power(1.0).unwrap(), v.clone(), 1.0, 0.1, 64).unwrap()).unwrap();
        assert_eq!((p.order_h, p.order_m, p.order_u), (1.0, 1.0, 1.0));
        assert_eq!(p.constants, RateConstants { c_h: 1.0, c_m: 2.0, c_u: 8.0 });
        let p = predict_rates(&make_problem(Coupling::linear_decreasing(), v.clone(), 1.0, 0.1, 64).unwrap()).unwrap();
        assert_eq!((p.order_m, p.order_u), (0.5, 0.5));
        assert!((p.constants.c_m - 2.0 * 2f64.sqrt() / 3f64.sqrt()).abs() < 1e-15);
        assert!((p.constants.c_u - 16.0 * 2f64.sqrt() / 3f64.sqrt()).abs() < 1e-14);
        let p = predict_rates(&make_problem(Coupling::power(1.0).unwrap(), v, 0.0, 0.1, 64).unwrap()).unwrap();
        assert!(p.u_vanishes);
        assert_eq!(p.constants.c_u, 0.0);
    }

    #[test]
    fn fits() {
        let lin: Vec<(f64, f64)> = (0..6).map(|k| (0.5f64.powi(k), 3.0 * 0.5f64.powi(k))).collect();
        match fit_loglog(&lin).unwrap() {
            SlopeFit::Fitted { slope, r_squared, intercept } => {
                assert!((slope - 1.0).abs() < 1e-12);
                assert!((r_squared - 1.0).abs() < 1e-12);
                assert!((intercept - 3f64.ln()).abs() < 1e-12);
            }
            SlopeFit::Exact => panic!("expected a fit"),
        }
        let half: Vec<(f64, f64)> = (0..6).map(|k| (0.5f64.powi(k), 0.5f64.powi(k).sqrt())).collect();
        assert!((fit_loglog(&half).unwrap().slope().unwrap() - 0.5).abs() < 1e-12);
        let zero: Vec<(f64, f64)> = (0..6).map(|k| (0.5f64.powi(k), 0.0)).collect();
        assert_eq!(fit_loglog(&zero).unwrap(), SlopeFit::Exact);
        assert_eq!(fit_loglog(&lin[..2]), Err(FitError::TooFewRows(2)));
    }

    #[test]
    fn grid_rule() {
        assert_eq!(refined_grid(0.1), 256);
        assert_eq!(refined_grid(2f64.powi(-12)), 2048);
        assert_eq!(geometric_ladder(0.125, 3), vec![0.125, 0.0625, 0.03125]);
    }

    #[test]
    fn short_ladder_rejected() {
        let s = make_problem(Coupling::power(1.0).unwrap(), Potential::default(), 1.0, 0.1, 64).unwrap();
        assert_eq!(sweep(&s, &[0.1, 0.05]).unwrap_err(), SweepError::LadderTooShort(2));
        assert_eq!(sweep(&s, &[0.1, 0.2, 0.05]).unwrap_err(), SweepError::BadLadder);
    }
}
