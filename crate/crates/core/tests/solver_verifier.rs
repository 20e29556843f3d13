//! Solver output against independent oracles, and verifier behaviour on
//! solver output.

use mfg1d::coupling_analysis::{critical_quantities, minimizer_m_star};
use mfg1d::model::{make_problem, Coupling, Potential, ProblemSpec, Regime};
use mfg1d::solver::{classify, solve, truncation_threshold, SolverError};
use mfg1d::verifier::{brute_scan_h_bar, verify_regular, ScanObjective};

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (f(mid) > 0.0) == (fa > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Nested bisection: per-node density from `j²/(2m²) - g(m) = H̄ - εV` on
/// `(lo, hi)`, outer level from the unit mean.
fn nested_oracle(spec: &ProblemSpec, g: impl Fn(f64) -> f64 + Copy, lo: f64, hi: f64, range: (f64, f64)) -> f64 {
    let v = spec.potential.samples(spec.n_grid);
    let j = spec.j;
    let mass = |h_bar: f64| {
        v.iter()
            .map(|&vk| {
                let y = h_bar - spec.epsilon * vk;
                bisect(|m| j * j / (2.0 * m * m) - g(m) - y, lo, hi)
            })
            .sum::<f64>()
            / v.len() as f64
            - 1.0
    };
    bisect(mass, range.0, range.1)
}

#[test]
fn regime_a_matches_nested_bisection() {
    let spec = make_problem(Coupling::power(1.0).unwrap(), Potential::default(), 1.0, 0.05, 128).unwrap();
    let sol = solve(&spec).unwrap();
    assert_eq!(sol.regime, Regime::IncreasingCurrent);
    let oracle = nested_oracle(&spec, |m| m, 1e-3, 1e3, (-1.0, 0.0));
    assert!((sol.h_bar - oracle).abs() < 1e-11, "{} vs {oracle}", sol.h_bar);
}

#[test]
fn lower_branch_matches_nested_bisection() {
    // g = -m, j = 2: m* = 2^{2/3}, lower branch on (0, m*).
    let spec = make_problem(Coupling::linear_decreasing(), Potential::default(), 2.0, 0.02, 128).unwrap();
    let sol = solve(&spec).unwrap();
    assert_eq!(sol.regime, Regime::DecreasingLowerBranch);
    let m_star = 2f64.powf(2.0 / 3.0);
    assert!((minimizer_m_star(2.0, &spec.coupling).unwrap() - m_star).abs() < 1e-9);
    // min h = 3 · 2^{-2/3} ≈ 2.38; the outer bracket must start above it.
    let oracle = nested_oracle(&spec, |m| -m, 1e-3, m_star, (2.5, 4.0));
    assert!((sol.h_bar - oracle).abs() < 1e-11, "{} vs {oracle}", sol.h_bar);
    assert!(sol.m.iter().all(|&m| m < m_star));
}

#[test]
fn upper_branch_matches_nested_bisection() {
    // g = -m, j = 1/2: m* = 4^{-2/3} < 1, upper branch.
    let spec = make_problem(Coupling::linear_decreasing(), Potential::default(), 0.5, 0.02, 128).unwrap();
    let sol = solve(&spec).unwrap();
    assert_eq!(sol.regime, Regime::DecreasingUpperBranch);
    let m_star = 0.25f64.powf(1.0 / 3.0);
    // min h ≈ 0.945.
    let oracle = nested_oracle(&spec, |m| -m, m_star, 10.0, (1.0, 2.0));
    assert!((sol.h_bar - oracle).abs() < 1e-11, "{} vs {oracle}", sol.h_bar);
}

#[test]
fn negative_current_is_the_mirror_image() {
    let v = Potential::shifted_cosine(1.0, 0.2);
    let pos = make_problem(Coupling::power(1.0).unwrap(), v.reflected(), 1.0, 0.05, 128).unwrap();
    let neg = make_problem(Coupling::power(1.0).unwrap(), v, -1.0, 0.05, 128).unwrap();
    let (a, b) = (solve(&pos).unwrap(), solve(&neg).unwrap());
    assert!((a.h_bar - b.h_bar).abs() < 1e-13);
    assert!((a.p + b.p).abs() < 1e-12);
    assert!(verify_regular(&neg, &b).unwrap().pass);
}

#[test]
fn critical_quantities_for_unit_minimizer() {
    let spec = make_problem(Coupling::linear_decreasing(), Potential::default(), 1.0, 0.01, 256).unwrap();
    let cq = critical_quantities(1.0, &spec.coupling, &spec.potential, 0.01, 256).unwrap();
    assert!((cq.m_star - 1.0).abs() < 1e-9);
    assert!(cq.alpha_minus < 1.0 && cq.alpha_plus > 1.0);
    assert!((cq.h_bar_cr - (0.01 + 1.5)).abs() < 1e-12);
}

#[test]
fn truncation_warning_threshold() {
    // g = m: (g(1) - g(0)) / osc = 1/2.
    let spec = make_problem(Coupling::power(1.0).unwrap(), Potential::default(), 0.0, 0.1, 64).unwrap();
    assert_eq!(truncation_threshold(&spec), 0.5);
}

#[test]
fn truncated_density_above_threshold() {
    // Past the threshold the truncated density is only a candidate: where
    // m = 0 the Hamilton-Jacobi equation becomes an inequality, and check (i)
    // reports it.
    let spec = make_problem(Coupling::power(1.0).unwrap(), Potential::default(), 0.0, 2.0, 256).unwrap();
    let sol = solve(&spec).unwrap();
    assert!(sol.m.iter().any(|&m| m == 0.0));
    let r = verify_regular(&spec, &sol).unwrap();
    assert_eq!(r.failing, vec!["check_i".to_string()], "{r:?}");
    let v = spec.potential.samples(256);
    for (k, &m) in sol.m.iter().enumerate() {
        let res = spec.epsilon * v[k] - m - sol.h_bar;
        if m > 0.0 {
            assert!(res.abs() < 1e-9);
        } else {
            assert!(res <= 0.0);
        }
    }
}

#[test]
fn decreasing_j0_needs_small_oscillation() {
    let spec = make_problem(Coupling::linear_decreasing(), Potential::default(), 0.0, 0.6, 64).unwrap();
    assert!(matches!(solve(&spec), Err(SolverError::EpsilonTooLarge { .. })));
}

#[test]
fn scan_agrees_for_powers() {
    for theta in [0.5, 2.0, 3.0] {
        let spec = make_problem(Coupling::power(theta).unwrap(), Potential::default(), 1.5, 0.05, 64).unwrap();
        let sol = solve(&spec).unwrap();
        let scan = brute_scan_h_bar(&spec, ScanObjective::GlobalInverse).unwrap();
        assert!(scan.unique);
        assert!((scan.h_bar - sol.h_bar).abs() <= 0.5 * scan.step * (1.0 + 1e-9), "theta {theta}");
        assert!(verify_regular(&spec, &sol).unwrap().pass);
    }
}

#[test]
fn classification_table() {
    let cases = [
        (Coupling::power(1.0).unwrap(), 1.0, Regime::IncreasingCurrent),
        (Coupling::power(1.0).unwrap(), 0.0, Regime::IncreasingNoCurrent),
        (Coupling::linear_decreasing(), 2.0, Regime::DecreasingLowerBranch),
        (Coupling::linear_decreasing(), 0.5, Regime::DecreasingUpperBranch),
        (Coupling::linear_decreasing(), 1.0, Regime::DecreasingCritical),
        (Coupling::linear_decreasing(), -1.0, Regime::DecreasingCritical),
        (Coupling::linear_decreasing(), 0.0, Regime::DecreasingNoCurrent),
    ];
    for (c, j, want) in cases {
        let spec = make_problem(c, Potential::default(), j, 0.01, 32).unwrap();
        assert_eq!(classify(&spec).unwrap(), want, "j = {j}");
    }
}
