//! Flat `key = value` problem configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Recognized keys:
//! `coupling.family`, `coupling.theta`, `coupling.a`, `coupling.b`,
//! `potential.family`, `potential.amplitude`, `potential.phase`, `j`,
//! `epsilon`, `n_grid`, `tol_root`, `tol_residual`.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::{Coupling, ModelError, Potential, ProblemSpec, DEFAULT_TOL_RESIDUAL, DEFAULT_TOL_ROOT};

const KNOWN_KEYS: &[&str] = &[
    "coupling.family",
    "coupling.theta",
    "coupling.a",
    "coupling.b",
    "potential.family",
    "potential.amplitude",
    "potential.phase",
    "j",
    "epsilon",
    "n_grid",
    "tol_root",
    "tol_residual",
];

pub const DEFAULT_N_GRID: usize = 256;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("missing required key \"{0}\"")]
    Missing(String),
    #[error("unknown key \"{0}\"")]
    Unknown(String),
    #[error("duplicate key \"{0}\"")]
    Duplicate(String),
    #[error("invalid value for key \"{key}\": {reason}")]
    Invalid { key: String, reason: String },
}

/// Parsed configuration, before validation into a [`ProblemSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    entries: BTreeMap<String, String>,
}

/// Parses the text of a config file.
pub fn parse_config(text: &str) -> Result<ProblemConfig, ConfigError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::Unknown(key.to_string()));
        }
        if entries.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError::Duplicate(key.to_string()));
        }
    }
    Ok(ProblemConfig { entries })
}

impl ProblemConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        parse_config(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| invalid(key, format!("expected a finite number, got \"{v}\"")))
            })
            .transpose()
    }

    fn required_real(&self, key: &str) -> Result<f64, ConfigError> {
        self.required(key)?;
        Ok(self.real(key)?.expect("present"))
    }

    fn coupling(&self) -> Result<Coupling, ConfigError> {
        let key = "coupling.family";
        let family = self.required(key)?;
        let theta = || self.real("coupling.theta").map(|t| t.unwrap_or(1.0));
        let coupling = match family {
            "power_increasing" | "power" => Coupling::power(theta()?),
            "linear_decreasing" => Ok(Coupling::linear_decreasing()),
            "power_decreasing" => Coupling::power_decreasing(theta()?),
            "affine" => {
                let a = self.required_real("coupling.a")?;
                let b = self.real("coupling.b")?.unwrap_or(0.0);
                Coupling::affine(a, b)
            }
            other => return Err(invalid(key, format!("unknown family \"{other}\""))),
        };
        coupling.map_err(|e| model_invalid(key, e))
    }

    fn potential(&self) -> Result<Potential, ConfigError> {
        let amplitude = self.real("potential.amplitude")?.unwrap_or(1.0);
        let phase = self.real("potential.phase")?;
        match self.get("potential.family").unwrap_or("cosine") {
            "cosine" => {
                if phase.is_some() {
                    return Err(invalid("potential.phase", "only valid with shifted_cosine".into()));
                }
                Ok(Potential::cosine(amplitude))
            }
            "shifted_cosine" => Ok(Potential::shifted_cosine(amplitude, phase.unwrap_or(0.0))),
            other => Err(invalid("potential.family", format!("unknown family \"{other}\""))),
        }
    }

    fn n_grid(&self) -> Result<usize, ConfigError> {
        match self.get("n_grid") {
            None => Ok(DEFAULT_N_GRID),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| invalid("n_grid", format!("expected a positive integer, got \"{v}\""))),
        }
    }

    /// Builds and validates the problem. Errors name the offending key.
    pub fn to_spec(&self) -> Result<ProblemSpec, ConfigError> {
        let coupling = self.coupling()?;
        let potential = self.potential()?;
        let j = self.required_real("j")?;
        let epsilon = self.required_real("epsilon")?;
        let n_grid = self.n_grid()?;
        let tol_root = self.real("tol_root")?.unwrap_or(DEFAULT_TOL_ROOT);
        let tol_residual = self.real("tol_residual")?.unwrap_or(DEFAULT_TOL_RESIDUAL);
        let spec = ProblemSpec::new(coupling, potential, j, epsilon, n_grid).map_err(|e| {
            let key = match e {
                ModelError::NegativeEpsilon(_) => "epsilon",
                ModelError::GridTooSmall(_) => "n_grid",
                ModelError::NotPeriodic { .. } => "potential.family",
                _ => "coupling.family",
            };
            model_invalid(key, e)
        })?;
        spec.with_tolerances(tol_root, tol_residual).map_err(|e| {
            let key = if tol_root > 0.0 { "tol_residual" } else { "tol_root" };
            model_invalid(key, e)
        })
    }
}

fn invalid(key: &str, reason: String) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason }
}

fn model_invalid(key: &str, e: ModelError) -> ConfigError {
    invalid(key, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Monotonicity;

    const BASIC: &str = "\
# regime A
coupling.family = power_increasing
coupling.theta = 1
potential.family = cosine
j = 1
epsilon = 0.01
n_grid = 128
";

    #[test]
    fn parses_basic_config() {
        let spec = parse_config(BASIC).unwrap().to_spec().unwrap();
        assert_eq!(spec.j, 1.0);
        assert_eq!(spec.epsilon, 0.01);
        assert_eq!(spec.n_grid, 128);
        assert_eq!(spec.tol_root, DEFAULT_TOL_ROOT);
        assert_eq!(spec.coupling.monotonicity(), Monotonicity::StrictlyIncreasing);
    }

    #[test]
    fn missing_j_names_the_key() {
        let text = BASIC.replace("j = 1\n", "");
        let err = parse_config(&text).unwrap().to_spec().unwrap_err();
        assert!(matches!(&err, ConfigError::Missing(k) if k == "j"));
        assert!(err.to_string().contains("\"j\""));
    }

    #[test]
    fn bad_values_name_the_key() {
        let err = parse_config(&BASIC.replace("epsilon = 0.01", "epsilon = -1"))
            .unwrap()
            .to_spec()
            .unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "epsilon"), "{err}");
        let err = parse_config(&BASIC.replace("n_grid = 128", "n_grid = many"))
            .unwrap()
            .to_spec()
            .unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "n_grid"));
        let err = parse_config(&BASIC.replace("power_increasing", "sigmoid"))
            .unwrap()
            .to_spec()
            .unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "coupling.family"));
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert!(matches!(parse_config("foo = 1"), Err(ConfigError::Unknown(_))));
        assert!(matches!(parse_config("j = 1\nj = 2"), Err(ConfigError::Duplicate(_))));
        assert!(matches!(parse_config("j 1"), Err(ConfigError::Syntax { line: 1 })));
    }

    #[test]
    fn affine_and_shifted_cosine() {
        let text = "coupling.family = affine\ncoupling.a = -2\ncoupling.b = 1\n\
                    potential.family = shifted_cosine\npotential.phase = 0.25\nj = 0\nepsilon = 0";
        let spec = parse_config(text).unwrap().to_spec().unwrap();
        assert_eq!(spec.coupling.g(1.0), -1.0);
        assert!((spec.potential.argmax() - 0.25).abs() < 1e-15);
    }
}
