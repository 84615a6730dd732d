use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::Geometry;
use super::lattice::{strides, unflatten, TensorLattice};
use super::mode::EigenMode;
use crate::error::{invalid, LabError, Result};

/// Samples per wavelength `2 pi / sqrt(lambda)` below which sampling is refused.
pub const SAMPLES_PER_WAVELENGTH: f64 = 16.0;

/// A field sampled at cell corners `i * h`, `h = L / N`.
///
/// Torus grids hold `N` samples per axis with periodic indexing. Box grids hold
/// `N + 1` samples per axis so that both walls are sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub geometry: Geometry,
    pub resolution: usize,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub gradient: Option<Vec<Vec<f64>>>,
    pub source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridHeader {
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    geometry: Geometry,
    source: String,
    shape: Vec<usize>,
}

/// Smallest per-axis resolution allowed for `mode`.
pub fn sampling_floor(mode: &EigenMode) -> usize {
    let k = mode.eigenvalue.max(0.0).sqrt() / (2.0 * PI);
    mode.geometry
        .sides
        .iter()
        .map(|&l| (SAMPLES_PER_WAVELENGTH * l * k - 1e-9).ceil().max(1.0) as usize)
        .max()
        .unwrap_or(1)
}

pub fn grid_shape(geometry: &Geometry, resolution: usize) -> Vec<usize> {
    let n = if geometry.is_torus() { resolution } else { resolution + 1 };
    vec![n; geometry.dim]
}

/// Samples `mode` exactly on the corner lattice of its geometry.
pub fn sample_field(mode: &EigenMode, resolution: usize, with_gradient: bool) -> Result<ScalarGrid> {
    let floor = sampling_floor(mode);
    if resolution < floor {
        return Err(LabError::BelowSamplingFloor { resolution, floor });
    }
    let shape = grid_shape(&mode.geometry, resolution);
    let spacing: Vec<f64> = mode.geometry.sides.iter().map(|&l| l / resolution as f64).collect();
    let lattice = TensorLattice::new(vec![0.0; mode.dim()], spacing, shape.clone());
    let (mut values, gradient) = mode.eval_lattice(&lattice, with_gradient);
    if !mode.geometry.is_torus() {
        // walls are exact zeros of every product sine mode
        let g = ScalarGrid {
            geometry: mode.geometry.clone(),
            resolution,
            shape: shape.clone(),
            values: Vec::new(),
            gradient: None,
            source: String::new(),
        };
        for f in 0..values.len() {
            if g.on_wall(f) {
                values[f] = 0.0;
            }
        }
    }
    Ok(ScalarGrid {
        geometry: mode.geometry.clone(),
        resolution,
        shape,
        values,
        gradient,
        source: format!("mode lambda={:.12e} terms={}", mode.eigenvalue, mode.terms.len()),
    })
}

impl ScalarGrid {
    /// Builds a grid from an arbitrary function; used for non-eigenfunction test fields.
    pub fn from_fn(geometry: &Geometry, resolution: usize, source: &str, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        geometry.validate()?;
        if resolution < 2 {
            return invalid("resolution must be at least 2");
        }
        let shape = grid_shape(geometry, resolution);
        let mut g = ScalarGrid {
            geometry: geometry.clone(),
            resolution,
            shape,
            values: Vec::new(),
            gradient: None,
            source: source.to_string(),
        };
        g.values = (0..g.len()).map(|i| f(&g.point(i))).collect();
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.geometry.sides[axis] / self.resolution as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn lattice(&self) -> TensorLattice {
        TensorLattice::new(
            vec![0.0; self.dim()],
            (0..self.dim()).map(|a| self.spacing(a)).collect(),
            self.shape.clone(),
        )
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn index_of(&self, flat: usize) -> Vec<usize> {
        unflatten(flat, &self.shape)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.index_of(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| i as f64 * self.spacing(a))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn on_wall(&self, flat: usize) -> bool {
        !self.geometry.is_torus() && self.index_of(flat).iter().zip(&self.shape).any(|(&i, &n)| i == 0 || i == n - 1)
    }

    /// Quadrature weight of a sample: `h^d` on the torus, trapezoid weights on the box.
    /// Weights sum to the geometry volume.
    pub fn weight(&self, flat: usize) -> f64 {
        let base: f64 = (0..self.dim()).map(|a| self.spacing(a)).product();
        if self.geometry.is_torus() {
            return base;
        }
        let halves = self
            .index_of(flat)
            .iter()
            .zip(&self.shape)
            .filter(|(&i, &n)| i == 0 || i == n - 1)
            .count();
        base * 0.5f64.powi(halves as i32)
    }

    /// Face neighbours of a sample, wrapping on the torus.
    pub fn neighbors(&self, flat: usize, out: &mut Vec<usize>) {
        out.clear();
        let idx = self.index_of(flat);
        let st = self.strides();
        let torus = self.geometry.is_torus();
        for a in 0..self.dim() {
            let n = self.shape[a];
            let i = idx[a];
            if i + 1 < n {
                out.push(flat + st[a]);
            } else if torus {
                out.push(flat + st[a] - n * st[a]);
            }
            if i > 0 {
                out.push(flat - st[a]);
            } else if torus {
                out.push(flat + (n - 1) * st[a]);
            }
        }
    }

    /// Lattice index containing the point nearest to `x` (wrapped on the torus, clamped on the box).
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let mut flat = 0;
        for a in 0..self.dim() {
            let n = self.shape[a] as i64;
            let mut i = (x[a] / self.spacing(a)).round() as i64;
            if self.geometry.is_torus() {
                i = i.rem_euclid(n);
            } else {
                i = i.clamp(0, n - 1);
            }
            flat = flat * self.shape[a] + i as usize;
        }
        flat
    }

    /// Writes `<stem>.bin` (little-endian f64 values) and `<stem>.json` (header).
    pub fn write(&self, stem: &Path) -> Result<()> {
        let header = GridHeader {
            d: self.dim(),
            n: self.resolution,
            geometry: self.geometry.clone(),
            source: self.source.clone(),
            shape: self.shape.clone(),
        };
        fs::write(stem.with_extension("json"), serde_json::to_vec_pretty(&header)?)?;
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(stem.with_extension("bin"), bytes)?;
        Ok(())
    }

    pub fn read(stem: &Path) -> Result<Self> {
        let header: GridHeader = serde_json::from_slice(&fs::read(stem.with_extension("json"))?)?;
        header.geometry.validate()?;
        let bytes = fs::read(stem.with_extension("bin"))?;
        let expected: usize = header.shape.iter().product();
        if bytes.len() != expected * 8 || header.shape != grid_shape(&header.geometry, header.n) {
            return invalid("grid file size does not match its header");
        }
        let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(ScalarGrid {
            geometry: header.geometry,
            resolution: header.n,
            shape: header.shape,
            values,
            gradient: None,
            source: header.source,
        })
    }
}
