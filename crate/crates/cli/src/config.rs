//! JSON run configuration.

use std::path::Path;

use plap_core::{build_system, ValidatedSystem};
use serde::Deserialize;

use crate::error::CliError;

/// One axis of a sweep: a parameter name and the values it takes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
}

/// System definition plus optional run settings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub n: u32,
    pub alpha: f64,
    pub r_max: f64,
    pub f1: Vec<[f64; 2]>,
    pub f2: Vec<[f64; 2]>,
    pub g1: Vec<[f64; 2]>,
    pub g2: Vec<[f64; 2]>,
    pub g3: Vec<[f64; 2]>,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub sweep: Option<Vec<SweepAxis>>,
}

fn one() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-9
}

/// Parameters a sweep may override.
pub const SWEEP_PARAMS: [&str; 13] = [
    "p", "n", "alpha", "r_max", "a", "b", "c1", "m1", "c2", "m2", "k1", "k2", "k3",
];

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn system(&self) -> Result<ValidatedSystem, CliError> {
        Ok(build_system(
            self.p, self.n, self.alpha, self.r_max, &self.f1, &self.f2, &self.g1, &self.g2,
            &self.g3,
        )?)
    }

    /// Copy with one parameter replaced.
    ///
    /// `c1, m1, c2, m2` change the first term of `f1`/`f2`; `k1, k2, k3`
    /// replace `g1, g2, g3` by the pure power `s^k`.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, CliError> {
        let mut out = self.clone();
        let first = |terms: &mut Vec<[f64; 2]>, idx: usize| -> Result<(), CliError> {
            let term = terms.first_mut().ok_or_else(|| {
                CliError::config(format!("cannot override `{name}` on an empty term list"))
            })?;
            term[idx] = value;
            Ok(())
        };
        match name {
            "p" => out.p = value,
            "n" => {
                if value.fract() != 0.0 || !(2.0..=f64::from(u32::MAX)).contains(&value) {
                    return Err(CliError::config(format!(
                        "sweep value {value} is not a valid dimension"
                    )));
                }
                out.n = value as u32;
            }
            "alpha" => out.alpha = value,
            "r_max" => out.r_max = value,
            "a" => out.a = value,
            "b" => out.b = value,
            "c1" => first(&mut out.f1, 0)?,
            "m1" => first(&mut out.f1, 1)?,
            "c2" => first(&mut out.f2, 0)?,
            "m2" => first(&mut out.f2, 1)?,
            "k1" => out.g1 = vec![[1.0, value]],
            "k2" => out.g2 = vec![[1.0, value]],
            "k3" => out.g3 = vec![[1.0, value]],
            other => {
                return Err(CliError::config(format!(
                    "unknown sweep parameter `{other}` (expected one of {})",
                    SWEEP_PARAMS.join(", ")
                )))
            }
        }
        Ok(out)
    }
}
