//! Run configuration: a JSON file mirroring the command-line flags.

use std::path::Path;

use clap::ValueEnum;
use qclock_core::{PhaseBasisTerm, Units};
use serde::Deserialize;

use crate::error::CliError;
use crate::output::Format;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub units: Option<Units>,
    pub sigma: Option<f64>,
    pub q0: Option<f64>,
    #[serde(rename = "e0")]
    pub e0: Option<f64>,
    pub mu: Option<f64>,
    pub hbar: Option<f64>,
    pub phase: Option<PhaseConfig>,
    pub sweep: Option<SweepConfig>,
    pub output: Option<OutputConfig>,
}

/// Phase choice: none, explicit coefficients, or solved for a cancellation order.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseConfig {
    None,
    Terms {
        terms: Vec<(f64, PhaseBasisTerm)>,
    },
    Solve {
        order: usize,
        basis: Vec<PhaseBasisTerm>,
        #[serde(default)]
        pinned: Vec<Option<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepVariable {
    KSigma,
    E0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: Option<SweepVariable>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub points: Option<usize>,
    pub scale: Option<SweepScale>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("bad config {}: {e}", path.display())))
    }
}

/// Sweep points in order.
pub fn sweep_points(min: f64, max: f64, points: usize, scale: SweepScale) -> Result<Vec<f64>, CliError> {
    if points == 0 {
        return Err(CliError::Invalid("sweep needs at least one point".into()));
    }
    if !(min.is_finite() && max.is_finite()) || max < min {
        return Err(CliError::Invalid(format!("sweep range [{min}, {max}] is not a finite increasing interval")));
    }
    if scale == SweepScale::Log && min <= 0.0 {
        return Err(CliError::Invalid("log sweep needs a positive minimum".into()));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let n = (points - 1) as f64;
    let mut v: Vec<f64> = (0..points)
        .map(|i| {
            let t = i as f64 / n;
            match scale {
                SweepScale::Linear => min + (max - min) * t,
                SweepScale::Log => (min.ln() + (max.ln() - min.ln()) * t).exp(),
            }
        })
        .collect();
    v[0] = min;
    v[points - 1] = max;
    Ok(v)
}
