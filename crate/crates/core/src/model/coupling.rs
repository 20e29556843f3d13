use std::fmt;
use std::sync::Arc;

use crate::numerics::{self, Direction, Growth};

use super::ModelError;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    StrictlyIncreasing,
    StrictlyDecreasing,
}

/// User supplied coupling. `g_second` and `g_inverse` are optional: missing
/// second derivatives fall back to centered differences of `g_prime`, a
/// missing inverse to bisection on `g`.
#[derive(Clone)]
pub struct CustomCoupling {
    pub name: String,
    pub g: ScalarFn,
    pub g_prime: ScalarFn,
    pub g_second: Option<ScalarFn>,
    pub g_inverse: Option<ScalarFn>,
}

#[derive(Clone)]
pub enum CouplingFamily {
    /// `g(m) = m^θ`, θ > 0.
    PowerIncreasing { theta: f64 },
    /// `g(m) = -m`.
    LinearDecreasing,
    /// `g(m) = -m^θ`, θ > 0.
    PowerDecreasing { theta: f64 },
    /// `g(m) = a m + b`, a ≠ 0.
    Affine { a: f64, b: f64 },
    Custom(CustomCoupling),
}

impl fmt::Debug for CouplingFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerIncreasing { theta } => write!(f, "PowerIncreasing(θ={theta})"),
            Self::LinearDecreasing => write!(f, "LinearDecreasing"),
            Self::PowerDecreasing { theta } => write!(f, "PowerDecreasing(θ={theta})"),
            Self::Affine { a, b } => write!(f, "Affine(a={a}, b={b})"),
            Self::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

/// The coupling `g` between density and cost, with its declared monotonicity.
#[derive(Debug, Clone)]
pub struct Coupling {
    family: CouplingFamily,
    monotonicity: Monotonicity,
}

/// `m^t`, with small integer exponents done by repeated multiplication.
#[inline]
fn pow(m: f64, t: f64) -> f64 {
    if t == t.trunc() && t.abs() <= 8.0 {
        m.powi(t as i32)
    } else {
        m.powf(t)
    }
}

impl Coupling {
    pub fn power(theta: f64) -> Result<Self, ModelError> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        Ok(Self {
            family: CouplingFamily::PowerIncreasing { theta },
            monotonicity: Monotonicity::StrictlyIncreasing,
        })
    }

    pub fn linear_decreasing() -> Self {
        Self {
            family: CouplingFamily::LinearDecreasing,
            monotonicity: Monotonicity::StrictlyDecreasing,
        }
    }

    pub fn power_decreasing(theta: f64) -> Result<Self, ModelError> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        Ok(Self {
            family: CouplingFamily::PowerDecreasing { theta },
            monotonicity: Monotonicity::StrictlyDecreasing,
        })
    }

    pub fn affine(a: f64, b: f64) -> Result<Self, ModelError> {
        if a == 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(ModelError::InvalidParameter(format!(
                "affine coupling needs finite a != 0, got a={a}, b={b}"
            )));
        }
        let monotonicity = if a > 0.0 {
            Monotonicity::StrictlyIncreasing
        } else {
            Monotonicity::StrictlyDecreasing
        };
        Ok(Self { family: CouplingFamily::Affine { a, b }, monotonicity })
    }

    /// Custom coupling with a declared monotonicity. Not checked here; see
    /// [`Coupling::validate`].
    pub fn custom(custom: CustomCoupling, monotonicity: Monotonicity) -> Self {
        Self { family: CouplingFamily::Custom(custom), monotonicity }
    }

    pub fn family(&self) -> &CouplingFamily {
        &self.family
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    pub fn is_increasing(&self) -> bool {
        self.monotonicity == Monotonicity::StrictlyIncreasing
    }

    pub fn g(&self, m: f64) -> f64 {
        match &self.family {
            CouplingFamily::PowerIncreasing { theta } => pow(m, *theta),
            CouplingFamily::LinearDecreasing => -m,
            CouplingFamily::PowerDecreasing { theta } => -pow(m, *theta),
            CouplingFamily::Affine { a, b } => a * m + b,
            CouplingFamily::Custom(c) => (c.g)(m),
        }
    }

    pub fn g_prime(&self, m: f64) -> f64 {
        match &self.family {
            CouplingFamily::PowerIncreasing { theta } => theta * pow(m, theta - 1.0),
            CouplingFamily::LinearDecreasing => -1.0,
            CouplingFamily::PowerDecreasing { theta } => -theta * pow(m, theta - 1.0),
            CouplingFamily::Affine { a, .. } => *a,
            CouplingFamily::Custom(c) => (c.g_prime)(m),
        }
    }

    pub fn g_second(&self, m: f64) -> f64 {
        match &self.family {
            CouplingFamily::PowerIncreasing { theta } => theta * (theta - 1.0) * pow(m, theta - 2.0),
            CouplingFamily::LinearDecreasing | CouplingFamily::Affine { .. } => 0.0,
            CouplingFamily::PowerDecreasing { theta } => -theta * (theta - 1.0) * pow(m, theta - 2.0),
            CouplingFamily::Custom(c) => match &c.g_second {
                Some(f) => f(m),
                None => {
                    let step = 1e-5 * m.max(1e-3);
                    ((c.g_prime)(m + step) - (c.g_prime)(m - step)) / (2.0 * step)
                }
            },
        }
    }

    /// `g(0⁺)`; may be infinite for custom couplings.
    pub fn g_at_zero(&self) -> f64 {
        match &self.family {
            CouplingFamily::Custom(c) => {
                let v = (c.g)(0.0);
                if v.is_nan() {
                    (c.g)(f64::MIN_POSITIVE)
                } else {
                    v
                }
            }
            _ => self.g(0.0),
        }
    }

    /// `g⁻¹(y)` on the range of `g` over `m > 0`; `None` outside it.
    pub fn g_inverse(&self, y: f64) -> Option<f64> {
        let m = match &self.family {
            CouplingFamily::PowerIncreasing { theta } => {
                if y <= 0.0 {
                    return None;
                }
                y.powf(1.0 / theta)
            }
            CouplingFamily::LinearDecreasing => -y,
            CouplingFamily::PowerDecreasing { theta } => {
                if y >= 0.0 {
                    return None;
                }
                (-y).powf(1.0 / theta)
            }
            CouplingFamily::Affine { a, b } => (y - b) / a,
            CouplingFamily::Custom(c) => match &c.g_inverse {
                Some(inv) => inv(y),
                None => return self.numeric_inverse(y),
            },
        };
        (m > 0.0 && m.is_finite()).then_some(m)
    }

    /// Truncated inverse `[g⁻¹(y)]⁺`: zero where the preimage would be
    /// non-positive.
    pub fn g_inverse_truncated(&self, y: f64) -> f64 {
        let g0 = self.g_at_zero();
        let below_range = match self.monotonicity {
            Monotonicity::StrictlyIncreasing => y <= g0,
            Monotonicity::StrictlyDecreasing => y >= g0,
        };
        if below_range {
            return 0.0;
        }
        self.g_inverse(y).unwrap_or(f64::NAN)
    }

    fn numeric_inverse(&self, y: f64) -> Option<f64> {
        let dir = match self.monotonicity {
            Monotonicity::StrictlyIncreasing => Direction::Increasing,
            Monotonicity::StrictlyDecreasing => Direction::Decreasing,
        };
        let f = |m: f64| self.g(m) - y;
        let (lo, hi) = numerics::expand_bracket(f, 0.5, 2.0, dir, Growth::Geometric).ok()?;
        numerics::find_root_monotone(f, (lo, hi), dir, 1e-14 * hi.max(1.0)).ok()
    }

    /// Sampled checks on `[1e-2, 1e2]`: the sign of `g'` matches the declared
    /// monotonicity, and `g⁻¹(g(m)) = m` on `[0.1, 10]`.
    pub fn validate(&self) -> Result<(), ModelError> {
        let want = match self.monotonicity {
            Monotonicity::StrictlyIncreasing => 1.0,
            Monotonicity::StrictlyDecreasing => -1.0,
        };
        for m in log_space(1e-2, 1e2, 400) {
            let d = self.g_prime(m);
            if !(d * want > 0.0) {
                return Err(ModelError::NonMonotoneCoupling { at: m, derivative: d });
            }
        }
        for m in log_space(0.1, 10.0, 50) {
            let back = self.g_inverse(self.g(m));
            match back {
                Some(b) if (b - m).abs() <= 1e-8 * m.max(1.0) => {}
                _ => {
                    return Err(ModelError::BadInverse { at: m, got: back.unwrap_or(f64::NAN) });
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn log_space(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}
