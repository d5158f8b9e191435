//! JSON run configurations. Every block rejects unknown keys.

use std::path::Path;

use annloewner::classify::ClassifyConfig;
use annloewner::evolution::SolverConfig;
use annloewner::presets;
use annloewner::{CircleMeasure, DrivingData, KernelTolerance, QuadConfig};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::Failure;

/// Driving data given inline or by preset name.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "serde_json::Value")]
pub struct Driving(pub DrivingData);

impl TryFrom<serde_json::Value> for Driving {
    type Error = String;

    fn try_from(value: serde_json::Value) -> Result<Self, String> {
        match value {
            serde_json::Value::String(name) => presets::preset(&name).map(Driving).map_err(|e| e.to_string()),
            other => serde_json::from_value(other).map(Driving).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub moduli: usize,
    pub angles: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { moduli: 8, angles: 16 }
    }
}

fn default_free_term_nodes() -> usize {
    512
}

fn default_reconstruction_nodes() -> usize {
    1024
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub r: f64,
    #[serde(default)]
    pub grid: GridSpec,
    /// Explicit evaluation points; replaces the grid when present.
    pub points: Option<Vec<Complex64>>,
    pub mu1: Option<CircleMeasure>,
    pub mu2: Option<CircleMeasure>,
    #[serde(default = "default_free_term_nodes")]
    pub free_term_nodes: usize,
    /// Zero skips the reconstruction check.
    #[serde(default = "default_reconstruction_nodes")]
    pub reconstruction_nodes: usize,
    #[serde(default)]
    pub tolerance: KernelTolerance,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub driving: Driving,
    pub s: f64,
    pub t: f64,
    pub points: Vec<Complex64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "yes")]
    pub write_trajectories: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub driving: Driving,
    #[serde(default)]
    pub quad: QuadConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyRunConfig {
    pub driving: Driving,
    #[serde(default)]
    pub classify: ClassifyConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSpec {
    pub s: f64,
    pub z: Complex64,
    pub steps: Vec<f64>,
    pub min_order: Option<f64>,
}

fn default_samples() -> usize {
    100
}

fn default_grid_size() -> usize {
    6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub driving: Driving,
    pub horizon: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: Option<u64>,
    pub pde: Option<PdeSpec>,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
}

pub fn load<T: DeserializeOwned>(path: Option<&Path>) -> Result<T, Failure> {
    let path = path.ok_or_else(|| Failure::Usage("this command needs --config PATH".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
}
