//! Property tests for the building blocks.

use mfg1d::coupling_analysis::{eval_h, h_prime, minimizer_m_star, Branch, BranchFunction};
use mfg1d::model::{make_problem, Coupling, Potential};
use mfg1d::numerics::{cumulative_integral, integrate_periodic};
use mfg1d::solver::solve;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn global_inverse_round_trip(theta in 0.2f64..4.0, j in 0.1f64..3.0, m in 0.05f64..20.0) {
        let c = Coupling::power(theta).unwrap();
        let bf = BranchFunction::new(j, &c).unwrap();
        let back = bf.invert(bf.h(m), Branch::Global).unwrap();
        prop_assert!((back - m).abs() <= 1e-10 * m.max(1.0), "{back} vs {m}");
    }

    #[test]
    fn branch_inverse_round_trip(j in 0.2f64..4.0, t in 0.05f64..0.95, up in 1.05f64..8.0) {
        let c = Coupling::linear_decreasing();
        let bf = BranchFunction::new(j, &c).unwrap();
        let m_star = bf.m_star.unwrap();
        let lower = t * m_star;
        let back = bf.invert(bf.h(lower), Branch::Lower).unwrap();
        prop_assert!((back - lower).abs() <= 1e-9 * m_star);
        let upper = up * m_star;
        let back = bf.invert(bf.h(upper), Branch::Upper).unwrap();
        prop_assert!((back - upper).abs() <= 1e-9 * upper);
    }

    #[test]
    fn branches_straddle_minimizer(j in 0.2f64..4.0, gap in 1e-6f64..5.0) {
        let c = Coupling::linear_decreasing();
        let bf = BranchFunction::new(j, &c).unwrap();
        let (m_star, h_min) = (bf.m_star.unwrap(), bf.h_at_star.unwrap());
        let lo = bf.invert(h_min + gap, Branch::Lower).unwrap();
        let hi = bf.invert(h_min + gap, Branch::Upper).unwrap();
        prop_assert!(lo <= m_star && m_star <= hi);
    }

    #[test]
    fn minimizer_is_stationary(theta in 1.0f64..3.0, j in 0.2f64..4.0) {
        // g = -m^θ with θ ≥ 1 keeps h convex.
        let c = Coupling::power_decreasing(theta).unwrap();
        let m = minimizer_m_star(j, &c).unwrap();
        prop_assert!(h_prime(m, j, &c).abs() <= 1e-8 * (1.0 + j * j / (m * m * m)));
    }

    #[test]
    fn h_decreasing_for_increasing_coupling(theta in 0.2f64..4.0, j in 0.0f64..3.0, m in 0.01f64..50.0) {
        let c = Coupling::power(theta).unwrap();
        prop_assert!(h_prime(m, j, &c) < 0.0);
        prop_assert!(eval_h(m, j, &c).unwrap() > eval_h(m * 1.01, j, &c).unwrap());
    }

    #[test]
    fn cumulative_end_is_periodic_integral(coeffs in prop::collection::vec(-1.0f64..1.0, 1..5), n in 16usize..200) {
        let f: Vec<f64> = (0..n)
            .map(|k| {
                let x = k as f64 / n as f64;
                1.5 + coeffs.iter().enumerate().map(|(i, a)| a * (2.0 * std::f64::consts::PI * (i + 1) as f64 * x).cos()).sum::<f64>()
            })
            .collect();
        let running = cumulative_integral(&f, None).unwrap();
        prop_assert_eq!(running[0], 0.0);
        prop_assert!((running[n] - integrate_periodic(&f)).abs() <= 1e-12);
    }

    #[test]
    fn solve_is_deterministic(j in 0.1f64..3.0, eps in 0.0f64..0.2) {
        let spec = make_problem(Coupling::power(1.0).unwrap(), Potential::default(), j, eps, 64).unwrap();
        let a = solve(&spec).unwrap();
        let b = solve(&spec).unwrap();
        prop_assert_eq!(a.h_bar.to_bits(), b.h_bar.to_bits());
        prop_assert_eq!(a.m, b.m);
    }
}
