//! Construction of the regular solution in each of the six regimes.
//!
//! All regimes share the reduction `h(m(x)) = H̄ - εV(x)`: once `H̄` is fixed
//! by the mass constraint the density follows pointwise, and `u` is the
//! running integral of `j/m - p`. Negative currents are solved on the
//! reflected problem `(|j|, V(-x))` and mapped back.

mod critical;
mod objective;

pub use critical::{build_swapped_critical, solve_decreasing_critical};
pub use objective::DensityRule;

use log::warn;
use thiserror::Error;

use crate::coupling_analysis::{AnalysisError, Branch, BranchFunction};
use crate::model::{log_space, ProblemSpec, Regime, SolutionTriple, Switch};
use crate::numerics::{self, find_root_monotone, Break, NumericsError};

use objective::{bracket, MassMap};

/// `|m* - 1|` below which the switch regime is selected.
pub const M_STAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("epsilon too large for regime {regime}: {detail}")]
    EpsilonTooLarge { regime: Regime, detail: String },
    #[error("hypotheses violated: {0}")]
    HypothesesViolated(String),
    #[error("wrong regime: {0}")]
    WrongRegime(String),
    #[error("no sign change of the mass map on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("density must be positive, got m = {value} at node {node}")]
    NonPositiveDensity { node: usize, value: f64 },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Regime of a problem together with the analysed `h` when it has a minimizer.
pub(crate) struct Classified {
    pub regime: Regime,
    pub branch: Option<BranchFunction>,
}

/// The regime a problem falls into. Reflection does not change it.
pub fn classify(spec: &ProblemSpec) -> Result<Regime, SolverError> {
    Ok(analyse(spec)?.regime)
}

pub(crate) fn analyse(spec: &ProblemSpec) -> Result<Classified, SolverError> {
    let j = spec.j.abs();
    if spec.coupling.is_increasing() {
        let regime = if j == 0.0 {
            Regime::IncreasingNoCurrent
        } else {
            Regime::IncreasingCurrent
        };
        let branch = (j != 0.0).then(|| BranchFunction {
            j,
            coupling: spec.coupling.clone(),
            m_star: None,
            h_at_star: None,
        });
        return Ok(Classified { regime, branch });
    }
    if j == 0.0 {
        return Ok(Classified { regime: Regime::DecreasingNoCurrent, branch: None });
    }
    let bf = BranchFunction::new(j, &spec.coupling).map_err(|e| match e {
        AnalysisError::ConvexityViolated { .. } | AnalysisError::NoInteriorMinimum(_) => {
            SolverError::HypothesesViolated(e.to_string())
        }
        other => other.into(),
    })?;
    let m_star = bf.m_star.expect("decreasing coupling with j != 0 has a minimizer");
    if (m_star - 1.0).abs() <= M_STAR_TOL {
        // The critical case is an exact algebraic condition; snapping keeps
        // H̄_cr = εmax V + h(1) consistent with the unperturbed H̄₀.
        let bf = BranchFunction::with_m_star(j, &spec.coupling, 1.0);
        return Ok(Classified { regime: Regime::DecreasingCritical, branch: Some(bf) });
    }
    let regime = if m_star > 1.0 {
        Regime::DecreasingLowerBranch
    } else {
        Regime::DecreasingUpperBranch
    };
    Ok(Classified { regime, branch: Some(bf) })
}

/// Solves the problem in whichever regime it belongs to.
///
/// At `ε = 0` the unperturbed solution `(0, 1, j²/2 - g(1))`, `p = j`, is
/// returned without any root finding.
pub fn solve(spec: &ProblemSpec) -> Result<SolutionTriple, SolverError> {
    let regime = classify(spec)?;
    match regime {
        Regime::IncreasingCurrent => solve_increasing_jnz(spec),
        Regime::IncreasingNoCurrent => solve_increasing_j0(spec),
        Regime::DecreasingLowerBranch => solve_decreasing_branch(spec, Branch::Lower),
        Regime::DecreasingUpperBranch => solve_decreasing_branch(spec, Branch::Upper),
        Regime::DecreasingCritical => solve_decreasing_critical(spec),
        Regime::DecreasingNoCurrent => solve_decreasing_j0(spec),
    }
}

/// Runs `f` on the canonical problem and maps the result back.
pub(crate) fn with_canonical<F>(spec: &ProblemSpec, f: F) -> Result<SolutionTriple, SolverError>
where
    F: FnOnce(&ProblemSpec) -> Result<SolutionTriple, SolverError>,
{
    if spec.reflected {
        f(&spec.canonical()).map(|s| s.reflected())
    } else {
        f(spec)
    }
}

fn expect_regime(spec: &ProblemSpec, wanted: &[Regime]) -> Result<Classified, SolverError> {
    let c = analyse(spec)?;
    if wanted.contains(&c.regime) {
        Ok(c)
    } else {
        Err(SolverError::WrongRegime(format!(
            "problem is in regime {}, expected {}",
            c.regime,
            wanted.iter().map(|r| r.tag()).collect::<Vec<_>>().join(" or ")
        )))
    }
}

/// Regime A: increasing `g`, `j ≠ 0`.
pub fn solve_increasing_jnz(spec: &ProblemSpec) -> Result<SolutionTriple, SolverError> {
    expect_regime(spec, &[Regime::IncreasingCurrent])?;
    if spec.epsilon == 0.0 {
        return Ok(SolutionTriple::unperturbed(spec, Regime::IncreasingCurrent));
    }
    with_canonical(spec, |c| {
        let cl = analyse(c)?;
        solve_by_mass(c, Regime::IncreasingCurrent, cl.branch.as_ref(), None)
    })
}

/// Regime B: increasing `g`, `j = 0`. Above `ε₀ = (g(1) - g(0))/(max V - min V)`
/// the density is truncated at zero somewhere; this is reported as a warning.
pub fn solve_increasing_j0(spec: &ProblemSpec) -> Result<SolutionTriple, SolverError> {
    expect_regime(spec, &[Regime::IncreasingNoCurrent])?;
    if spec.epsilon == 0.0 {
        return Ok(SolutionTriple::unperturbed(spec, Regime::IncreasingNoCurrent));
    }
    let eps0 = truncation_threshold(spec);
    if spec.epsilon >= eps0 {
        warn!(
            "epsilon {} is at or above the truncation threshold {eps0}; density may vanish",
            spec.epsilon
        );
    }
    solve_by_mass(spec, Regime::IncreasingNoCurrent, None, None)
}

/// `ε₀ = (g(1) - g(0)) / (max V - min V)` for increasing `g` with `j = 0`.
pub fn truncation_threshold(spec: &ProblemSpec) -> f64 {
    let osc = spec.potential.oscillation();
    if osc == 0.0 {
        return f64::INFINITY;
    }
    (spec.coupling.g(1.0) - spec.coupling.g_at_zero()) / osc
}

/// Regimes C (`m* > 1`, lower branch) and D (`m* < 1`, upper branch).
pub fn solve_decreasing_branch(spec: &ProblemSpec, branch: Branch) -> Result<SolutionTriple, SolverError> {
    let regime = match branch {
        Branch::Lower => Regime::DecreasingLowerBranch,
        Branch::Upper => Regime::DecreasingUpperBranch,
        Branch::Global => {
            return Err(SolverError::WrongRegime("decreasing couplings have two branches".into()))
        }
    };
    expect_regime(spec, &[regime])?;
    if spec.epsilon == 0.0 {
        return Ok(SolutionTriple::unperturbed(spec, regime));
    }
    with_canonical(spec, |c| {
        let cl = analyse(c)?;
        let bf = cl.branch.as_ref().expect("analysed branch");
        let crit = crate::coupling_analysis::critical_quantities_for(bf, &c.potential, c.epsilon, c.n_grid)?;
        let (alpha, ok, cond) = match branch {
            Branch::Lower => (crit.alpha_minus, crit.alpha_minus > 1.0, "alpha_minus > 1"),
            _ => (crit.alpha_plus, crit.alpha_plus < 1.0, "alpha_plus < 1"),
        };
        if !ok {
            return Err(SolverError::EpsilonTooLarge {
                regime,
                detail: format!("{cond} fails at H_cr = {}: alpha = {alpha}", crit.h_bar_cr),
            });
        }
        solve_by_mass(c, regime, Some(bf), Some(crit.h_bar_cr))
    })
}

/// Regime F: decreasing `g`, `j = 0`. Needs `-g` convex and
/// `ε (max V - min V) < g(0) - g(1)`.
pub fn solve_decreasing_j0(spec: &ProblemSpec) -> Result<SolutionTriple, SolverError> {
    expect_regime(spec, &[Regime::DecreasingNoCurrent])?;
    if spec.epsilon == 0.0 {
        return Ok(SolutionTriple::unperturbed(spec, Regime::DecreasingNoCurrent));
    }
    for m in log_space(1e-2, 1e2, 400) {
        let g2 = spec.coupling.g_second(m);
        if g2 > 1e-12 * spec.coupling.g_prime(m).abs().max(1.0) {
            return Err(SolverError::HypothesesViolated(format!(
                "-g is not convex: g''({m}) = {g2} > 0"
            )));
        }
    }
    let room = spec.coupling.g_at_zero() - spec.coupling.g(1.0);
    let swing = spec.epsilon * spec.potential.oscillation();
    if !(swing < room) {
        warn!("epsilon {} violates eps*(max V - min V) < g(0) - g(1)", spec.epsilon);
        return Err(SolverError::EpsilonTooLarge {
            regime: Regime::DecreasingNoCurrent,
            detail: format!("eps*(max V - min V) = {swing} is not below g(0) - g(1) = {room}"),
        });
    }
    solve_by_mass(spec, Regime::DecreasingNoCurrent, None, None)
}

/// Root-finds `H̄` on the mass map of a canonical problem and assembles the
/// solution.
fn solve_by_mass(
    spec: &ProblemSpec,
    regime: Regime,
    branch: Option<&BranchFunction>,
    floor: Option<f64>,
) -> Result<SolutionTriple, SolverError> {
    let rule = DensityRule::for_regime(regime).expect("root-found regime");
    let map = MassMap::new(spec, rule, branch);
    let (lo, hi) = bracket(spec, &map, floor).map_err(|e| match e {
        SolverError::NoBracket { lo, hi } if floor.is_some() => SolverError::EpsilonTooLarge {
            regime,
            detail: format!("no sign change of the mass map on [{lo}, {hi}]"),
        },
        other => other,
    })?;
    let tol = spec.tol_root * lo.abs().max(hi.abs()).max(1.0);
    let h_bar = find_root_monotone(|h| map.eval(h), (lo, hi), rule.direction(), tol)?;
    let m = map.densities(h_bar)?;
    let (u, p) = if spec.j == 0.0 {
        (vec![0.0; m.len()], 0.0)
    } else {
        reconstruct_u(&m, spec.j, None)?
    };
    Ok(SolutionTriple { u, m, h_bar, p, regime, switch: None })
}

/// The bracket the solver searches `H̄` on (after expansion). Not defined
/// for the switch regime, where `H̄` is assigned.
pub fn h_bar_bracket(spec: &ProblemSpec) -> Result<(f64, f64), SolverError> {
    let c = spec.canonical();
    let cl = analyse(&c)?;
    let rule = DensityRule::for_regime(cl.regime).ok_or_else(|| {
        SolverError::WrongRegime("the switch regime assigns H̄ instead of solving for it".into())
    })?;
    let floor = match cl.regime {
        Regime::DecreasingLowerBranch | Regime::DecreasingUpperBranch => {
            let bf = cl.branch.as_ref().expect("analysed branch");
            Some(c.epsilon * c.potential.v_max() + bf.h_at_star.expect("minimum"))
        }
        _ => None,
    };
    let map = MassMap::new(&c, rule, cl.branch.as_ref());
    bracket(&c, &map, floor)
}

/// `u(x) = ∫₀ˣ j/m - p x` with `p = ∫ j/m`, so that `u(0) = 0` and `u` is
/// periodic. With a switch the integrand is integrated piecewise using the
/// one-sided limits of `m` at `d`.
pub fn reconstruct_u(m: &[f64], j: f64, switch: Option<&Switch>) -> Result<(Vec<f64>, f64), SolverError> {
    if let Some((node, &value)) = m.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(SolverError::NonPositiveDensity { node, value });
    }
    let n = m.len();
    let flux: Vec<f64> = m.iter().map(|mk| j / mk).collect();
    let (running, p) = match switch {
        None => {
            let running = numerics::cumulative_integral(&flux, None)?;
            (running, numerics::integrate_periodic(&flux))
        }
        Some(s) => {
            let brk = Break { d: s.d, left: j / s.m_left, right: j / s.m_right };
            let running = numerics::cumulative_integral(&flux, Some(&brk))?;
            let p = running[n];
            (running, p)
        }
    };
    let u = (0..n).map(|k| running[k] - p * (k as f64 / n as f64)).collect();
    Ok((u, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_problem, Coupling, Potential};

    fn spec(c: Coupling, j: f64, eps: f64) -> ProblemSpec {
        make_problem(c, Potential::cosine(1.0), j, eps, 256).unwrap()
    }

    #[test]
    fn classification() {
        let inc = Coupling::power(1.0).unwrap();
        let dec = Coupling::linear_decreasing();
        assert_eq!(classify(&spec(inc.clone(), 1.0, 0.1)).unwrap(), Regime::IncreasingCurrent);
        assert_eq!(classify(&spec(inc, 0.0, 0.1)).unwrap(), Regime::IncreasingNoCurrent);
        assert_eq!(classify(&spec(dec.clone(), 8.0, 0.1)).unwrap(), Regime::DecreasingLowerBranch);
        assert_eq!(classify(&spec(dec.clone(), 0.125, 0.1)).unwrap(), Regime::DecreasingUpperBranch);
        assert_eq!(classify(&spec(dec.clone(), 1.0, 0.1)).unwrap(), Regime::DecreasingCritical);
        assert_eq!(classify(&spec(dec.clone(), -1.0, 0.1)).unwrap(), Regime::DecreasingCritical);
        assert_eq!(classify(&spec(dec, 0.0, 0.1)).unwrap(), Regime::DecreasingNoCurrent);
    }

    #[test]
    fn unperturbed_is_exact() {
        let s = spec(Coupling::power(1.0).unwrap(), 1.0, 0.0);
        let sol = solve(&s).unwrap();
        assert!(sol.u.iter().all(|&u| u == 0.0));
        assert!(sol.m.iter().all(|&m| m == 1.0));
        assert_eq!(sol.h_bar, -0.5);
        assert_eq!(sol.p, 1.0);
        let sol = solve(&spec(Coupling::linear_decreasing(), 1.0, 0.0)).unwrap();
        assert_eq!(sol.h_bar, 1.5);
        assert_eq!(sol.regime, Regime::DecreasingCritical);
        assert!(sol.switch.is_none());
    }

    #[test]
    fn regime_b_closed_form() {
        let sol = solve(&spec(Coupling::power(1.0).unwrap(), 0.0, 0.1)).unwrap();
        assert!((sol.h_bar + 1.0).abs() < 1e-10);
        let sup = sol.m.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
        assert!((sup - 0.1).abs() < 1e-8);
        assert!(sol.u.iter().all(|&u| u == 0.0));
        assert_eq!(sol.p, 0.0);
    }

    #[test]
    fn regime_f_closed_form() {
        let sol = solve(&spec(Coupling::linear_decreasing(), 0.0, 0.05)).unwrap();
        assert!((sol.h_bar - 1.0).abs() < 1e-10);
        for (k, m) in sol.m.iter().enumerate() {
            let x = k as f64 / 256.0;
            let exact = 1.0 - 0.05 * (2.0 * std::f64::consts::PI * x).cos();
            assert!((m - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn regime_f_refuses_large_epsilon_and_concave_minus_g() {
        let err = solve(&spec(Coupling::power_decreasing(1.0).unwrap(), 0.0, 0.6)).unwrap_err();
        assert!(matches!(err, SolverError::EpsilonTooLarge { .. }));
        let err = solve(&spec(Coupling::power_decreasing(0.5).unwrap(), 0.0, 0.01)).unwrap_err();
        assert!(matches!(err, SolverError::HypothesesViolated(_)));
    }

    #[test]
    fn regime_c_too_large_epsilon() {
        let err = solve(&spec(Coupling::linear_decreasing(), 2.0, 2.0)).unwrap_err();
        assert!(err.to_string().contains("epsilon too large for regime"), "{err}");
    }

    #[test]
    fn reconstruct_u_constant_densities() {
        let (u, p) = reconstruct_u(&vec![1.0; 64], 1.0, None).unwrap();
        assert_eq!(p, 1.0);
        assert!(u.iter().all(|u| u.abs() < 1e-15));
        let (u, p) = reconstruct_u(&vec![2.0; 64], 1.0, None).unwrap();
        assert_eq!(p, 0.5);
        assert!(u.iter().all(|u| u.abs() < 1e-15));
        assert!(reconstruct_u(&[1.0, 0.0, 1.0, 1.0], 1.0, None).is_err());
    }

    #[test]
    fn reconstruct_u_refinement() {
        let m_of = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|k| 1.0 + 0.1 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
                .collect()
        };
        let (coarse, _) = reconstruct_u(&m_of(512), 1.0, None).unwrap();
        let (fine, _) = reconstruct_u(&m_of(4096), 1.0, None).unwrap();
        for k in 0..512 {
            assert!((coarse[k] - fine[8 * k]).abs() < 1e-7);
        }
        // Periodic closure: one more step of slope j/m - p lands back on 0.
        let (u, p) = reconstruct_u(&m_of(512), 1.0, None).unwrap();
        let m = m_of(512);
        let closing = u[511] + (1.0 / m[511] - p) / 512.0;
        assert!(closing.abs() < 1e-3);
        assert!(u[0] == 0.0);
    }

    #[test]
    fn reflection_matches_direct_regime_a() {
        let s = make_problem(Coupling::power(1.0).unwrap(), Potential::shifted_cosine(1.0, 0.1), -1.0, 0.05, 128)
            .unwrap();
        let via_reflection = solve(&s).unwrap();
        // Solving without canonicalization: h depends on j², u on j itself.
        let cl = analyse(&s).unwrap();
        let direct = solve_by_mass(&s, Regime::IncreasingCurrent, cl.branch.as_ref(), None).unwrap();
        assert!((via_reflection.h_bar - direct.h_bar).abs() < 1e-9);
        assert!((via_reflection.p - direct.p).abs() < 1e-9);
        for k in 0..128 {
            assert!((via_reflection.m[k] - direct.m[k]).abs() < 1e-9);
            assert!((via_reflection.u[k] - direct.u[k]).abs() < 1e-9);
        }
    }
}
