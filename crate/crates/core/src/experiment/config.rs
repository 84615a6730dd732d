use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::capacity::Shape;
use crate::error::{LabError, Result};
use crate::spectra::{Geometry, SAMPLES_PER_WAVELENGTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Nodal,
    Chain,
    Capacity,
    HeatBounds,
    Scaling,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Nodal => "nodal",
            ExperimentKind::Chain => "chain",
            ExperimentKind::Capacity => "capacity",
            ExperimentKind::HeatBounds => "heat_bounds",
            ExperimentKind::Scaling => "scaling",
        }
    }
}

/// One condenser of a capacity sweep. `resolution` is cells per unit length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondenserCase {
    pub k: Shape,
    pub u: Shape,
    pub resolution: usize,
}

/// A single JSON document describing a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub geometry: Geometry,
    /// Torus eigenspace levels `|k|^2`.
    #[serde(default)]
    pub levels: Vec<u64>,
    /// Box mode multi-indices (Dirichlet box only).
    #[serde(default)]
    pub box_modes: Vec<Vec<i64>>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_samples")]
    pub samples_per_wavelength: f64,
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default, rename = "A")]
    pub a_values: Vec<usize>,
    #[serde(default)]
    pub condensers: Vec<CondenserCase>,
    /// Kernel times for `heat_bounds`.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Random point pairs per seed for `heat_bounds`.
    #[serde(default = "default_pairs")]
    pub pairs_per_seed: usize,
    /// Largest time used for the not-feeling-the-boundary fit.
    #[serde(default = "default_t0")]
    pub norris_t0: f64,
    pub output_dir: PathBuf,
}

fn default_samples() -> f64 {
    SAMPLES_PER_WAVELENGTH
}

fn default_pairs() -> usize {
    20
}

fn default_t0() -> f64 {
    0.05
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, geometry: Geometry, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            kind,
            geometry,
            levels: Vec::new(),
            box_modes: Vec::new(),
            seeds: Vec::new(),
            samples_per_wavelength: SAMPLES_PER_WAVELENGTH,
            deltas: Vec::new(),
            a_values: Vec::new(),
            condensers: Vec::new(),
            times: Vec::new(),
            pairs_per_seed: default_pairs(),
            norris_t0: default_t0(),
            output_dir: output_dir.into(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::InvalidConfig(vec![e.to_string()]))
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config = Self::from_json(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Every violated precondition, collected before any computation.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Err(e) = self.geometry.validate() {
            v.push(format!("geometry: {e}"));
            return v;
        }
        let d = self.geometry.dim;
        let torus = self.geometry.is_torus();
        if !(self.samples_per_wavelength >= SAMPLES_PER_WAVELENGTH) {
            v.push(format!("samples_per_wavelength must be at least {SAMPLES_PER_WAVELENGTH}"));
        }
        if !self.levels.is_empty() && !torus {
            v.push("levels need a flat torus; use box_modes for a Dirichlet box".into());
        }
        if !self.levels.is_empty() && self.seeds.is_empty() {
            v.push("levels are given but seeds is empty".into());
        }
        if !self.box_modes.is_empty() && torus {
            v.push("box_modes need a Dirichlet box".into());
        }
        for m in &self.box_modes {
            if m.len() != d || m.iter().any(|&k| k < 1) {
                v.push(format!("box mode {m:?} must have {d} positive entries"));
            }
        }
        if self.deltas.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            v.push("deltas must be positive".into());
        }
        match self.kind {
            ExperimentKind::Nodal => {}
            ExperimentKind::Chain => {
                if self.deltas.is_empty() {
                    v.push("chain needs at least one delta".into());
                }
                if self.a_values.is_empty() {
                    v.push("chain needs at least one A".into());
                }
                for &a in &self.a_values {
                    if a < 5 || a % 4 != 1 {
                        v.push(format!("A = {a} is not of the form 4A'+1 with A' >= 1"));
                    }
                }
            }
            ExperimentKind::Capacity => {
                for (i, c) in self.condensers.iter().enumerate() {
                    if c.k.dim() != d || c.u.dim() != d {
                        v.push(format!("condenser {i}: shapes must have dimension {d}"));
                    }
                    if c.resolution < 8 {
                        v.push(format!("condenser {i}: resolution must be at least 8"));
                    }
                }
            }
            ExperimentKind::HeatBounds => {
                if self.times.is_empty() {
                    v.push("heat_bounds needs at least one time".into());
                }
                if self.times.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
                    v.push("heat_bounds times must lie in (0, 1)".into());
                }
                if !(self.norris_t0 > 0.0) {
                    v.push("norris_t0 must be positive".into());
                }
                if self.seeds.is_empty() || self.pairs_per_seed == 0 {
                    v.push("heat_bounds needs seeds and pairs_per_seed > 0".into());
                }
            }
            ExperimentKind::Scaling => {
                if !torus {
                    v.push("scaling sweeps run on a flat torus".into());
                }
                if self.levels.contains(&0) {
                    v.push("scaling levels must be positive".into());
                }
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(LabError::InvalidConfig(v))
        }
    }
}
