//! Regime E: decreasing `g` with `m*(j) = 1`.
//!
//! `H̄` is pinned to `H̄_cr = ε max V + h(1)`. At that level the two branch
//! densities `m⁻ ≤ 1 ≤ m⁺` touch at the maximum of `V` (x = 0), and the
//! solution uses `m⁻` on `[0, d)` and `m⁺` on `[d, 1)`, with the switch
//! point `d` fixed by the unit mass.

use crate::coupling_analysis::{Branch, BranchFunction};
use crate::model::{ProblemSpec, Regime, SolutionTriple, Switch};
use crate::numerics::{find_root_monotone, integrate_periodic, integrate_piecewise, Break, Direction};

use super::{analyse, expect_regime, reconstruct_u, with_canonical, SolverError};

/// Grid samples of both branches at `H̄_cr`, plus pointwise evaluation.
struct Branches<'a> {
    bf: &'a BranchFunction,
    spec: &'a ProblemSpec,
    h_bar_cr: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> Branches<'a> {
    fn new(spec: &'a ProblemSpec, bf: &'a BranchFunction) -> Result<Self, SolverError> {
        let h_bar_cr = spec.epsilon * spec.potential.v_max() + bf.h_at_star.expect("minimum");
        let v = spec.potential.samples(spec.n_grid);
        let mut lower = Vec::with_capacity(v.len());
        let mut upper = Vec::with_capacity(v.len());
        for vk in v {
            let y = h_bar_cr - spec.epsilon * vk;
            lower.push(bf.invert(y, Branch::Lower)?);
            upper.push(bf.invert(y, Branch::Upper)?);
        }
        Ok(Self { bf, spec, h_bar_cr, lower, upper })
    }

    fn at(&self, x: f64, branch: Branch) -> Result<f64, SolverError> {
        let y = self.h_bar_cr - self.spec.epsilon * self.spec.potential.eval(x);
        Ok(self.bf.invert(y, branch)?)
    }

    /// `∫₀^d a + ∫_d^1 b - 1` where `a`, `b` are the branches in that order.
    fn mass_defect(&self, d: f64, first: Branch, second: Branch) -> f64 {
        let (left, right) = match first {
            Branch::Lower => (&self.lower, &self.upper),
            _ => (&self.upper, &self.lower),
        };
        let limits = self.at(d, first).and_then(|l| Ok((l, self.at(d, second)?)));
        match limits {
            Ok((l, r)) => {
                let brk = Break { d, left: l, right: r };
                integrate_piecewise(left, right, &brk).map_or(f64::NAN, |v| v - 1.0)
            }
            Err(_) => f64::NAN,
        }
    }

    /// Switch point `d ∈ (0, 1)` where the two-branch density has unit mass.
    fn switch_point(&self, first: Branch, second: Branch, tol: f64) -> Result<Switch, SolverError> {
        let phi = |d: f64| self.mass_defect(d, first, second);
        let (lo, hi) = (0.0, 1.0 - f64::EPSILON);
        let (at_lo, at_hi) = (phi(lo), phi(hi));
        // With m⁻ first the defect falls from α⁺ - 1 to α⁻ - 1.
        let direction = if first == Branch::Lower {
            Direction::Decreasing
        } else {
            Direction::Increasing
        };
        let sign_ok = match direction {
            Direction::Decreasing => at_lo > 0.0 && at_hi < 0.0,
            Direction::Increasing => at_lo < 0.0 && at_hi > 0.0,
        };
        if !sign_ok {
            return Err(SolverError::EpsilonTooLarge {
                regime: Regime::DecreasingCritical,
                detail: format!("switch-point mass defect has no sign change: phi(0) = {at_lo}, phi(1) = {at_hi}"),
            });
        }
        let d = find_root_monotone(phi, (lo, hi), direction, tol)?;
        Ok(Switch { d, m_left: self.at(d, first)?, m_right: self.at(d, second)? })
    }

    fn assemble(&self, first: Branch, switch: Switch) -> Result<SolutionTriple, SolverError> {
        let (left, right) = match first {
            Branch::Lower => (&self.lower, &self.upper),
            _ => (&self.upper, &self.lower),
        };
        let n = left.len();
        let m: Vec<f64> = (0..n)
            .map(|k| if (k as f64 / n as f64) < switch.d { left[k] } else { right[k] })
            .collect();
        let (u, p) = reconstruct_u(&m, self.spec.j, Some(&switch))?;
        Ok(SolutionTriple {
            u,
            m,
            h_bar: self.h_bar_cr,
            p,
            regime: Regime::DecreasingCritical,
            switch: Some(switch),
        })
    }
}

fn check_potential(spec: &ProblemSpec) -> Result<(), SolverError> {
    let a = spec.potential.argmax();
    if !spec.potential.single_max() || a.min(1.0 - a) > 1e-12 {
        return Err(SolverError::HypothesesViolated(format!(
            "the switch regime needs V with a single maximum at x = 0 (argmax {a}, single {})",
            spec.potential.single_max()
        )));
    }
    Ok(())
}

/// Regime E. `H̄ = H̄_cr` is assigned; the switch point is root-found.
pub fn solve_decreasing_critical(spec: &ProblemSpec) -> Result<SolutionTriple, SolverError> {
    expect_regime(spec, &[Regime::DecreasingCritical])?;
    if spec.epsilon == 0.0 {
        return Ok(SolutionTriple::unperturbed(spec, Regime::DecreasingCritical));
    }
    with_canonical(spec, |c| {
        check_potential(c)?;
        let cl = analyse(c)?;
        let bf = cl.branch.as_ref().expect("analysed branch");
        let br = Branches::new(c, bf)?;
        let alpha_minus = integrate_periodic(&br.lower);
        let alpha_plus = integrate_periodic(&br.upper);
        if !(alpha_minus < 1.0 && alpha_plus > 1.0) {
            return Err(SolverError::EpsilonTooLarge {
                regime: Regime::DecreasingCritical,
                detail: format!("need alpha_minus < 1 < alpha_plus, got {alpha_minus}, {alpha_plus}"),
            });
        }
        let switch = br.switch_point(Branch::Lower, Branch::Upper, c.tol_root)?;
        br.assemble(Branch::Lower, switch)
    })
}

/// The branch-swapped density `m⁺` on `[0, d')`, `m⁻` on `[d', 1)` at
/// `H̄_cr`, with `d'` chosen for unit mass. It satisfies the equations
/// pointwise and the mass constraint, but `u_x` jumps upward at `d'`, so it
/// is not a regular solution. Used to exercise the verifier.
pub fn build_swapped_critical(spec: &ProblemSpec) -> Result<SolutionTriple, SolverError> {
    expect_regime(spec, &[Regime::DecreasingCritical])?;
    if spec.epsilon == 0.0 {
        return Err(SolverError::WrongRegime("no branch switch at epsilon = 0".into()));
    }
    with_canonical(spec, |c| {
        check_potential(c)?;
        let cl = analyse(c)?;
        let bf = cl.branch.as_ref().expect("analysed branch");
        let br = Branches::new(c, bf)?;
        let switch = br.switch_point(Branch::Upper, Branch::Lower, c.tol_root)?;
        br.assemble(Branch::Upper, switch)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_problem, Coupling, Potential};

    fn critical(eps: f64, n: usize) -> ProblemSpec {
        make_problem(Coupling::linear_decreasing(), Potential::cosine(1.0), 1.0, eps, n).unwrap()
    }

    #[test]
    fn h_bar_is_assigned() {
        let sol = solve_decreasing_critical(&critical(0.01, 256)).unwrap();
        assert_eq!(sol.h_bar, 0.01 * 1.0 + 1.5);
        // For dyadic ε the offset from H̄₀ is exact.
        let eps = 2f64.powi(-7);
        let sol = solve_decreasing_critical(&critical(eps, 256)).unwrap();
        assert_eq!(sol.h_bar - 1.5, eps);
    }

    #[test]
    fn switch_point_and_jump_sign() {
        let sol = solve_decreasing_critical(&critical(0.01, 256)).unwrap();
        let s = sol.switch.unwrap();
        assert!(s.d > 0.0 && s.d < 1.0);
        assert!(s.m_left < 1.0 && s.m_right > 1.0);
        // Continuity at the maximum of V.
        assert!((sol.m[0] - 1.0).abs() <= 2e-13);
        assert!(sol.m.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn swapped_density_has_unit_mass() {
        let spec = critical(0.01, 256);
        let sw = build_swapped_critical(&spec).unwrap();
        let s = sw.switch.unwrap();
        assert!(s.m_left > 1.0 && s.m_right < 1.0);
        let left: Vec<f64> = sw.m.clone();
        let brk = Break { d: s.d, left: s.m_left, right: s.m_right };
        let mass = integrate_piecewise(&left, &left, &brk).unwrap();
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reflected_current() {
        let spec = make_problem(Coupling::linear_decreasing(), Potential::cosine(1.0), -1.0, 0.01, 256).unwrap();
        let sol = solve_decreasing_critical(&spec).unwrap();
        let direct = solve_decreasing_critical(&critical(0.01, 256)).unwrap();
        assert_eq!(sol.h_bar, direct.h_bar);
        assert_eq!(sol.p, -direct.p);
        assert!((sol.switch.unwrap().d - (1.0 - direct.switch.unwrap().d)).abs() < 1e-15);
    }

    #[test]
    fn shifted_maximum_rejected() {
        let spec = make_problem(
            Coupling::linear_decreasing(),
            Potential::shifted_cosine(1.0, 0.3),
            1.0,
            0.01,
            256,
        )
        .unwrap();
        assert!(matches!(solve_decreasing_critical(&spec), Err(SolverError::HypothesesViolated(_))));
    }
}
