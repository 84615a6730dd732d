use serde::{Deserialize, Serialize};

use super::{variational_capacity, Condenser};
use crate::error::{invalid, LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MazyaReport {
    /// `#K h^3`.
    pub volume: f64,
    pub capacity: f64,
    /// `volume / capacity^3`.
    pub ratio: f64,
}

/// `Vol(K) / cap(K, U)^{d/(d-2)}`, defined for `d = 3` only.
pub fn mazya_check(condenser: &Condenser) -> Result<MazyaReport> {
    if condenser.dim() != 3 {
        return invalid(format!("the volume-capacity ratio needs d = 3, got d = {}", condenser.dim()));
    }
    let volume = condenser.k_volume();
    let capacity = variational_capacity(condenser)?.energy;
    if !(capacity > 0.0) {
        return Err(LabError::Discretization(format!(
            "zero capacity for K of volume {volume:e}; refine the lattice"
        )));
    }
    Ok(MazyaReport {
        volume,
        capacity,
        ratio: volume / capacity.powi(3),
    })
}
