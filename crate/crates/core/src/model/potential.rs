use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::coupling::ScalarFn;
use super::ModelError;

/// Resolution used to locate extrema of custom potentials.
const CUSTOM_SAMPLES: usize = 1 << 14;

#[derive(Clone)]
pub enum PotentialFamily {
    /// `V(x) = A cos(2πx)`.
    Cosine { amplitude: f64 },
    /// `V(x) = A cos(2π(x - phase))`.
    ShiftedCosine { amplitude: f64, phase: f64 },
    Custom { name: String, v: ScalarFn },
}

impl fmt::Debug for PotentialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cosine { amplitude } => write!(f, "Cosine(A={amplitude})"),
            Self::ShiftedCosine { amplitude, phase } => {
                write!(f, "ShiftedCosine(A={amplitude}, phase={phase})")
            }
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// A smooth 1-periodic potential with its extrema.
#[derive(Debug, Clone)]
pub struct Potential {
    family: PotentialFamily,
    v_max: f64,
    v_min: f64,
    argmax: f64,
    single_max: bool,
}

impl Default for Potential {
    fn default() -> Self {
        Self::cosine(1.0)
    }
}

impl Potential {
    pub fn cosine(amplitude: f64) -> Self {
        let a = amplitude.abs();
        Self {
            family: PotentialFamily::Cosine { amplitude },
            v_max: a,
            v_min: -a,
            argmax: if amplitude >= 0.0 { 0.0 } else { 0.5 },
            single_max: amplitude != 0.0,
        }
    }

    pub fn shifted_cosine(amplitude: f64, phase: f64) -> Self {
        let a = amplitude.abs();
        let phase_max = if amplitude >= 0.0 { phase } else { phase + 0.5 };
        Self {
            family: PotentialFamily::ShiftedCosine { amplitude, phase },
            v_max: a,
            v_min: -a,
            argmax: phase_max.rem_euclid(1.0),
            single_max: amplitude != 0.0,
        }
    }

    /// Custom potential; extrema are located by dense sampling.
    pub fn custom(name: impl Into<String>, v: ScalarFn) -> Self {
        let samples: Vec<f64> = (0..CUSTOM_SAMPLES)
            .map(|k| v(k as f64 / CUSTOM_SAMPLES as f64))
            .collect();
        let (mut v_max, mut v_min, mut kmax) = (f64::NEG_INFINITY, f64::INFINITY, 0);
        for (k, &s) in samples.iter().enumerate() {
            if s > v_max {
                v_max = s;
                kmax = k;
            }
            v_min = v_min.min(s);
        }
        let tol = 1e-9 * (v_max - v_min).max(1e-300);
        let n = samples.len();
        let peaks = (0..n)
            .filter(|&k| {
                let s = samples[k];
                s >= v_max - tol && s >= samples[(k + n - 1) % n] && s > samples[(k + 1) % n]
            })
            .count();
        Self {
            family: PotentialFamily::Custom { name: name.into(), v },
            v_max,
            v_min,
            argmax: kmax as f64 / CUSTOM_SAMPLES as f64,
            single_max: peaks == 1 && v_max > v_min,
        }
    }

    pub fn family(&self) -> &PotentialFamily {
        &self.family
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.family {
            PotentialFamily::Cosine { amplitude } => amplitude * (2.0 * PI * x).cos(),
            PotentialFamily::ShiftedCosine { amplitude, phase } => {
                amplitude * (2.0 * PI * (x - phase)).cos()
            }
            PotentialFamily::Custom { v, .. } => v(x),
        }
    }

    /// Values on the uniform grid `k / n`.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.eval(k as f64 / n as f64)).collect()
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    /// `max |V|`.
    pub fn abs_max(&self) -> f64 {
        self.v_max.abs().max(self.v_min.abs())
    }

    /// Oscillation `max V - min V`.
    pub fn oscillation(&self) -> f64 {
        self.v_max - self.v_min
    }

    pub fn argmax(&self) -> f64 {
        self.argmax
    }

    pub fn single_max(&self) -> bool {
        self.single_max
    }

    /// The potential `x ↦ V(-x)`.
    pub fn reflected(&self) -> Self {
        match &self.family {
            PotentialFamily::Cosine { .. } => self.clone(),
            PotentialFamily::ShiftedCosine { amplitude, phase } => {
                Self::shifted_cosine(*amplitude, -phase)
            }
            PotentialFamily::Custom { name, v } => {
                let v = Arc::clone(v);
                Self::custom(
                    format!("{name} reflected"),
                    Arc::new(move |x: f64| v((-x).rem_euclid(1.0))),
                )
            }
        }
    }

    /// Periodicity check `|V(0) - V(1)|` and finiteness of the extrema.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.v_max.is_finite() && self.v_min.is_finite()) {
            return Err(ModelError::InvalidParameter("potential is not finite".into()));
        }
        let scale = 1.0 + self.abs_max();
        let gap = (self.eval(0.0) - self.eval(1.0)).abs();
        if gap > 1e-9 * scale {
            return Err(ModelError::NotPeriodic { gap });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_extrema() {
        let v = Potential::cosine(1.0);
        assert_eq!(v.v_max(), 1.0);
        assert_eq!(v.v_min(), -1.0);
        assert_eq!(v.argmax(), 0.0);
        assert!(v.single_max());
        assert_eq!(v.eval(0.0), 1.0);
        assert_eq!(v.oscillation(), 2.0);
        v.validate().unwrap();
    }

    #[test]
    fn argmax_is_the_only_grid_maximum() {
        let v = Potential::cosine(0.7);
        let s = v.samples(256);
        let top = s.iter().filter(|&&x| x >= v.v_max() - 1e-12).count();
        assert_eq!(top, 1);
        assert_eq!(s[0], v.v_max());
    }

    #[test]
    fn custom_detects_extrema_and_multiple_maxima() {
        let v = Potential::custom("c", Arc::new(|x: f64| (2.0 * PI * x).cos()));
        assert!((v.v_max() - 1.0).abs() < 1e-12);
        assert!((v.v_min() + 1.0).abs() < 1e-6);
        assert_eq!(v.argmax(), 0.0);
        assert!(v.single_max());
        let two = Potential::custom("c2", Arc::new(|x: f64| (4.0 * PI * x).cos()));
        assert!(!two.single_max());
    }

    #[test]
    fn sawtooth_is_not_periodic() {
        let v = Potential::custom("saw", Arc::new(|x: f64| x));
        assert!(matches!(v.validate(), Err(ModelError::NotPeriodic { .. })));
    }

    #[test]
    fn reflection() {
        let v = Potential::shifted_cosine(1.0, 0.2);
        let r = v.reflected();
        for k in 0..10 {
            let x = k as f64 / 10.0;
            assert!((r.eval(x) - v.eval(-x)).abs() < 1e-14);
        }
        assert!((r.argmax() - 0.8).abs() < 1e-14);
    }
}
