use serde::{Deserialize, Serialize};

use super::union_find::UnionFind;
use crate::error::{LabError, Result};
use crate::spectra::ScalarGrid;

/// Relative threshold below which a sample is treated as a zero.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-9;

/// Nodal domains of a sampled field. Domain ids run from 1; label 0 marks zero samples.
/// Per-domain vectors are indexed by `id - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainLabeling {
    pub labels: Vec<u32>,
    pub signs: Vec<i8>,
    pub volumes: Vec<f64>,
    pub max_abs: Vec<f64>,
    pub argmax: Vec<usize>,
    pub zero_volume: f64,
    /// Absolute threshold used for zero samples.
    pub zero_threshold: f64,
}

impl DomainLabeling {
    pub fn domain_count(&self) -> usize {
        self.signs.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> {
        1..=self.signs.len() as u32
    }

    pub fn sign(&self, id: u32) -> i8 {
        self.signs[id as usize - 1]
    }

    pub fn volume(&self, id: u32) -> f64 {
        self.volumes[id as usize - 1]
    }

    pub fn argmax_of(&self, id: u32) -> usize {
        self.argmax[id as usize - 1]
    }

    pub fn max_abs_of(&self, id: u32) -> f64 {
        self.max_abs[id as usize - 1]
    }

    pub fn check_id(&self, id: u32) -> Result<()> {
        if id == 0 || id as usize > self.signs.len() {
            return Err(LabError::InvalidArgument(format!("no nodal domain with id {id}")));
        }
        Ok(())
    }

    /// Sign of a sample under this labeling: 0 for zero samples.
    pub fn sample_sign(&self, flat: usize) -> i8 {
        match self.labels[flat] {
            0 => 0,
            l => self.signs[l as usize - 1],
        }
    }
}

/// Labels sign-connected components of `grid` under face adjacency (wrapping on the torus).
pub fn label_nodal_domains(grid: &ScalarGrid, zero_tolerance: f64) -> Result<DomainLabeling> {
    let max = grid.max_abs();
    if max == 0.0 || !max.is_finite() {
        return Err(LabError::DegenerateField);
    }
    let threshold = zero_tolerance * max;
    let n = grid.len();
    let sign: Vec<i8> = grid
        .values
        .iter()
        .map(|&v| {
            if v.abs() <= threshold {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();

    let mut uf = UnionFind::new(n);
    let strides = grid.strides();
    let torus = grid.geometry.is_torus();
    for f in 0..n {
        if sign[f] == 0 {
            continue;
        }
        for a in 0..grid.dim() {
            let len = grid.shape[a];
            let i = (f / strides[a]) % len;
            let g = if i + 1 < len {
                f + strides[a]
            } else if torus {
                f + strides[a] - len * strides[a]
            } else {
                continue;
            };
            if sign[g] == sign[f] {
                uf.union(f, g);
            }
        }
    }

    let mut root_label = vec![0u32; n];
    let mut labels = vec![0u32; n];
    let mut signs = Vec::new();
    let mut volumes = Vec::new();
    let mut max_abs = Vec::new();
    let mut argmax = Vec::new();
    let mut zero_volume = 0.0;
    for f in 0..n {
        let w = grid.weight(f);
        if sign[f] == 0 {
            zero_volume += w;
            continue;
        }
        let r = uf.find(f);
        if root_label[r] == 0 {
            signs.push(sign[f]);
            volumes.push(0.0);
            max_abs.push(0.0);
            argmax.push(f);
            root_label[r] = signs.len() as u32;
        }
        let l = root_label[r];
        labels[f] = l;
        let k = l as usize - 1;
        volumes[k] += w;
        let a = grid.values[f].abs();
        if a > max_abs[k] {
            max_abs[k] = a;
            argmax[k] = f;
        }
    }
    Ok(DomainLabeling {
        labels,
        signs,
        volumes,
        max_abs,
        argmax,
        zero_volume,
        zero_threshold: threshold,
    })
}
