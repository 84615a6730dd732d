//! Config-driven sweeps with hashed report manifests, and the scaling-law fits.

mod config;
mod fit;
mod run;

pub use config::{CondenserCase, ExperimentConfig, ExperimentKind};
pub use fit::{fit_scaling, fit_table, ScalingFit, ScalingModel};
pub use run::{run_experiment, run_spectrum, verify_manifest, Artifact, InstanceFailure, Manifest, MANIFEST_NAME};
