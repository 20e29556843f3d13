//! Dense scan of the mass map `H̄ ↦ ∫ m_{H̄} - 1`, as an oracle for the
//! solver's bracketed root.
//!
//! The densities are recomputed here without the solver's inversion code:
//! closed forms through `g⁻¹` when `j = 0`, otherwise a safeguarded Newton
//! iteration per node, warm-started from the previous scan point. Because
//! `m(H̄)` is monotone in `H̄` at every node, the previous value and the value
//! at the far end of the scan bracket each node's next root.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling_analysis::{h_prime, minimizer_m_star};
use crate::model::{ProblemSpec, Regime};
use crate::solver::{classify, h_bar_bracket};

use super::VerifyError;

/// Number of equally spaced `H̄` values in a scan.
pub const SCAN_POINTS: usize = 100_000;
/// Nodes per parallel work item in the scan.
const NODE_CHUNK: usize = 32;

/// How the density is recovered from the level in the scanned regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanObjective {
    /// `h(m) = H̄ - εV` with `h` globally decreasing (increasing `g`, `j ≠ 0`).
    GlobalInverse,
    /// `m = [g⁻¹(εV - H̄)]⁺` (increasing `g`, `j = 0`).
    TruncatedInverse,
    /// Root of `h(m) = H̄ - εV` below `m*`.
    LowerBranch,
    /// Root of `h(m) = H̄ - εV` above `m*`.
    UpperBranch,
    /// `m = g⁻¹(εV - H̄)` (decreasing `g`, `j = 0`).
    DecreasingInverse,
}

impl ScanObjective {
    pub fn for_regime(regime: Regime) -> Option<Self> {
        match regime {
            Regime::IncreasingCurrent => Some(Self::GlobalInverse),
            Regime::IncreasingNoCurrent => Some(Self::TruncatedInverse),
            Regime::DecreasingLowerBranch => Some(Self::LowerBranch),
            Regime::DecreasingUpperBranch => Some(Self::UpperBranch),
            Regime::DecreasingNoCurrent => Some(Self::DecreasingInverse),
            Regime::DecreasingCritical => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// Midpoint of the sign-change cell when it is unique, else NaN.
    pub h_bar: f64,
    pub unique: bool,
    /// Midpoints of all sign-change cells.
    pub sign_changes: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

/// Scans [`SCAN_POINTS`] values of `H̄` over the solver's bracket.
pub fn brute_scan_h_bar(spec: &ProblemSpec, objective: ScanObjective) -> Result<ScanResult, VerifyError> {
    let spec = spec.canonical();
    let regime = classify(&spec)?;
    if ScanObjective::for_regime(regime) != Some(objective) {
        return Err(VerifyError::NotApplicable(format!(
            "objective {objective:?} does not match regime {regime}"
        )));
    }
    let (lo, hi) = h_bar_bracket(&spec)?;
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let levels: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + step * i as f64).collect();
    let values = mass_defects(&spec, objective, &levels)?;

    let mut sign_changes = Vec::new();
    for i in 0..SCAN_POINTS - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if (a <= 0.0 && b > 0.0) || (a >= 0.0 && b < 0.0) || (a == 0.0 && b == 0.0) {
            sign_changes.push(0.5 * (levels[i] + levels[i + 1]));
        }
    }
    let unique = sign_changes.len() == 1;
    Ok(ScanResult {
        h_bar: if unique { sign_changes[0] } else { f64::NAN },
        unique,
        sign_changes,
        lo,
        hi,
        step,
    })
}

fn mass_defects(spec: &ProblemSpec, objective: ScanObjective, levels: &[f64]) -> Result<Vec<f64>, VerifyError> {
    let n = spec.n_grid;
    let v = spec.potential.samples(n);
    let eps = spec.epsilon;
    let g = &spec.coupling;
    let mean = |m: &[f64]| m.iter().sum::<f64>() / m.len() as f64 - 1.0;
    match objective {
        ScanObjective::TruncatedInverse | ScanObjective::DecreasingInverse => {
            let mut m = vec![0.0; n];
            Ok(levels
                .iter()
                .map(|&h_bar| {
                    for k in 0..n {
                        let y = eps * v[k] - h_bar;
                        m[k] = if objective == ScanObjective::TruncatedInverse {
                            g.g_inverse_truncated(y)
                        } else {
                            g.g_inverse(y).unwrap_or(f64::NAN)
                        };
                    }
                    mean(&m)
                })
                .collect())
        }
        _ => {
            let j = spec.j;
            let h = |m: f64| j * j / (2.0 * m * m) - g.g(m);
            let (split, increasing) = match objective {
                ScanObjective::GlobalInverse => (None, false),
                ScanObjective::LowerBranch => (Some(minimizer_m_star(j, g).map_err(solver_err)?), false),
                _ => (Some(minimizer_m_star(j, g).map_err(solver_err)?), true),
            };
            let h_min = split.map(h);
            let level = |h_bar: f64, vk: f64| {
                let y = h_bar - eps * vk;
                // The scan starts at H̄_cr in the branch regimes; rounding may
                // put the first level a hair under the minimum.
                match h_min {
                    Some(hm) => y.max(hm),
                    None => y,
                }
            };
            let first = *levels.first().expect("non-empty scan");
            let last = *levels.last().expect("non-empty scan");
            // Each node's trajectory over the levels is independent; chunks of
            // nodes run in parallel and their partial sums are added in chunk
            // order, so the result does not depend on the thread count.
            let partials: Vec<Vec<f64>> = v
                .par_chunks(NODE_CHUNK)
                .map(|chunk| {
                    let mut sums = vec![0.0; levels.len()];
                    for &vk in chunk {
                        let start = bisect_level(&h, level(first, vk), split, increasing);
                        let end = bisect_level(&h, level(last, vk), split, increasing);
                        let (mut prev, mut cur) = (start, start);
                        for (i, &h_bar) in levels.iter().enumerate() {
                            let (a, b) = if increasing { (cur, end) } else { (end, cur) };
                            // Linear extrapolation from the last two levels.
                            let guess = if i >= 2 { 2.0 * cur - prev } else { cur };
                            let next = newton_in(&h, |m| h_prime(m, j, g), level(h_bar, vk), (a, b), increasing, guess);
                            prev = cur;
                            cur = next;
                            sums[i] += cur;
                        }
                    }
                    sums
                })
                .collect();
            let mut out = vec![0.0; levels.len()];
            for part in &partials {
                for (o, p) in out.iter_mut().zip(part) {
                    *o += p;
                }
            }
            let out = out.into_iter().map(|s| s / n as f64 - 1.0).collect();
            Ok(out)
        }
    }
}

fn solver_err(e: crate::coupling_analysis::AnalysisError) -> VerifyError {
    VerifyError::Solver(e.into())
}

/// Plain bisection for `h(m) = y` on the monotone piece selected by `split`.
fn bisect_level(h: &impl Fn(f64) -> f64, y: f64, split: Option<f64>, increasing: bool) -> f64 {
    let (mut a, mut b) = match (split, increasing) {
        (Some(s), true) => (s, 2.0 * s),
        (Some(s), false) => (0.5 * s, s),
        (None, _) => (0.5, 2.0),
    };
    // Orient so that q(m) = ±(h(m) - y) is increasing.
    let q = |m: f64| if increasing { h(m) - y } else { y - h(m) };
    for _ in 0..200 {
        if q(b) >= 0.0 {
            break;
        }
        if split.is_some() && increasing {
            a = b;
        }
        b *= 2.0;
    }
    for _ in 0..200 {
        if q(a) <= 0.0 {
            break;
        }
        if split.is_some() && !increasing {
            b = a;
        }
        a *= 0.5;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if q(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Newton for `h(m) = y` kept inside `(a, b)`, falling back to bisection
/// whenever a step would leave the current bracket. `increasing` gives the
/// orientation of `h` on the bracket. From a warm start two steps usually
/// suffice.
fn newton_in(
    h: &impl Fn(f64) -> f64,
    hp: impl Fn(f64) -> f64,
    y: f64,
    (mut a, mut b): (f64, f64),
    increasing: bool,
    start: f64,
) -> f64 {
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut m = start.clamp(a, b);
    for _ in 0..100 {
        let r = h(m) - y;
        if r == 0.0 {
            return m;
        }
        if (r < 0.0) == increasing {
            a = m;
        } else {
            b = m;
        }
        let mut next = m - r / hp(m);
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - m).abs() <= 1e-13 * m || b - a <= 1e-15 * b {
            return next;
        }
        m = next;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_problem, Coupling, Potential};
    use crate::solver::solve;

    #[test]
    fn regime_f_closed_form() {
        let spec = make_problem(Coupling::linear_decreasing(), Potential::default(), 0.0, 0.05, 64).unwrap();
        let r = brute_scan_h_bar(&spec, ScanObjective::DecreasingInverse).unwrap();
        assert!(r.unique);
        assert!((r.h_bar - 1.0).abs() <= r.step);
    }

    #[test]
    fn regime_a_brackets_solver() {
        let spec = make_problem(Coupling::power(1.0).unwrap(), Potential::default(), 1.0, 0.01, 64).unwrap();
        let sol = solve(&spec).unwrap();
        let r = brute_scan_h_bar(&spec, ScanObjective::GlobalInverse).unwrap();
        assert!(r.unique, "{:?}", r.sign_changes);
        assert!((r.h_bar - sol.h_bar).abs() <= 0.5 * r.step * (1.0 + 1e-9));
    }

    #[test]
    fn branch_regimes_bracket_solver() {
        for (j, obj) in [(8.0, ScanObjective::LowerBranch), (0.125, ScanObjective::UpperBranch)] {
            let spec = make_problem(Coupling::linear_decreasing(), Potential::default(), j, 0.01, 64).unwrap();
            let sol = solve(&spec).unwrap();
            let r = brute_scan_h_bar(&spec, obj).unwrap();
            assert!(r.unique);
            assert!((r.h_bar - sol.h_bar).abs() <= 0.5 * r.step * (1.0 + 1e-9), "j={j}");
        }
    }

    #[test]
    fn unperturbed_scan() {
        let spec = make_problem(Coupling::power(3.0).unwrap(), Potential::default(), 2.0, 0.0, 32).unwrap();
        let r = brute_scan_h_bar(&spec, ScanObjective::GlobalInverse).unwrap();
        assert!(r.unique);
        assert!((r.h_bar - 1.0).abs() <= r.step);
    }

    #[test]
    fn mismatched_objective_rejected() {
        let spec = make_problem(Coupling::power(1.0).unwrap(), Potential::default(), 1.0, 0.01, 32).unwrap();
        assert!(brute_scan_h_bar(&spec, ScanObjective::LowerBranch).is_err());
    }
}
