use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gradient::gradient_check;
use super::index::doubling_index;
use super::oracle::{GridOracle, ModeOracle};
use super::region::Region;
use crate::error::{invalid, LabError, Result};
use crate::nodal::{centered_inradius_search, label_nodal_domains, refined_centered_inradius, DEFAULT_ZERO_TOLERANCE};
use crate::spectra::rng::{derive_seed, NormalStream};
use crate::spectra::{random_eigenfunction, resolution_for, sample_field, EigenMode, Geometry};

/// Default oversampling of the field grid for sup computations in sweeps.
pub const SWEEP_OVERSAMPLE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfRow {
    pub lambda: f64,
    pub level: u64,
    pub seed: u64,
    pub n_max: f64,
    /// `n_max / sqrt(lambda)`; NaN for the constant mode.
    pub df_ratio: f64,
    pub balls: usize,
    /// Balls dropped because the field vanished on the inner ball.
    pub skipped: usize,
}

/// `count` balls with radii uniform in `[0.05 r0, 0.5 r0]` whose doubles fit the geometry.
pub fn random_balls(geometry: &Geometry, count: usize, seed: u64) -> Vec<Region> {
    let mut rng = NormalStream::new(seed);
    let r0 = geometry.r0();
    (0..count)
        .map(|_| {
            let r = r0 * (0.05 + 0.45 * rng.uniform());
            let center = geometry
                .sides
                .iter()
                .map(|&l| {
                    if geometry.is_torus() {
                        l * rng.uniform()
                    } else {
                        2.0 * r + (l - 4.0 * r) * rng.uniform()
                    }
                })
                .collect();
            Region::ball(center, r)
        })
        .collect()
}

/// Largest doubling index of `mode` over the given balls, on a grid `oversample` times finer
/// than the sampling floor.
pub fn df_field(mode: &EigenMode, balls: &[Region], oversample: usize) -> Result<(f64, usize)> {
    let n = resolution_for(mode, 16.0, 1).max(16) * oversample.max(1);
    let grid = sample_field(mode, n, false)?;
    let oracle = GridOracle::for_mode(&grid, mode);
    let mut n_max: f64 = 0.0;
    let mut skipped = 0;
    for b in balls {
        match doubling_index(&oracle, b) {
            Ok(ix) => n_max = n_max.max(ix.value),
            Err(LabError::VanishingInnerRegion) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((n_max, skipped))
}

/// Max doubling index per random torus field, sorted by lambda. Levels without lattice
/// representations are skipped.
pub fn df_sweep(geometry: &Geometry, levels: &[u64], seeds: &[u64], balls_per_field: usize) -> Result<Vec<DfRow>> {
    df_sweep_with(geometry, levels, seeds, balls_per_field, SWEEP_OVERSAMPLE)
}

pub fn df_sweep_with(geometry: &Geometry, levels: &[u64], seeds: &[u64], balls_per_field: usize, oversample: usize) -> Result<Vec<DfRow>> {
    let jobs = field_jobs(geometry, levels, seeds)?;
    let mut rows = jobs
        .par_iter()
        .map(|(level, seed, mode)| {
            let balls = random_balls(geometry, balls_per_field, derive_seed(&[*level, *seed, 0xdf]));
            let (n_max, skipped) = df_field(mode, &balls, oversample)?;
            Ok(DfRow {
                lambda: mode.eigenvalue,
                level: *level,
                seed: *seed,
                n_max,
                df_ratio: n_max / mode.eigenvalue.sqrt(),
                balls: balls_per_field - skipped,
                skipped,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.seed.cmp(&b.seed)));
    Ok(rows)
}

/// Random fields for every representable `(level, seed)` pair.
pub fn field_jobs(geometry: &Geometry, levels: &[u64], seeds: &[u64]) -> Result<Vec<(u64, u64, EigenMode)>> {
    let mut jobs = Vec::new();
    for &level in levels {
        for &seed in seeds {
            match random_eigenfunction(geometry, level, seed) {
                Ok(m) => jobs.push((level, seed, m)),
                Err(LabError::InvalidArgument(msg)) if msg.contains("no lattice representation") => break,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(jobs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientRow {
    pub lambda: f64,
    pub level: u64,
    pub seed: u64,
    pub centers: usize,
    pub max_ratio: f64,
}

/// Gradient ratio at radius `0.5 lambda^{-1/2}` around random centers of each field.
pub fn gradient_sweep(geometry: &Geometry, levels: &[u64], seeds: &[u64], centers_per_field: usize) -> Result<Vec<GradientRow>> {
    let jobs = field_jobs(geometry, levels, seeds)?;
    jobs.par_iter()
        .filter(|(_, _, m)| m.eigenvalue > 0.0)
        .map(|(level, seed, mode)| {
            let r = 0.5 / mode.eigenvalue.sqrt();
            let oracle = ModeOracle::new(mode, r / 40.0)?;
            let mut rng = NormalStream::new(derive_seed(&[*level, *seed, 0x9d]));
            let mut max_ratio: f64 = 0.0;
            for _ in 0..centers_per_field {
                let c: Vec<f64> = geometry.sides.iter().map(|&l| l * rng.uniform()).collect();
                max_ratio = max_ratio.max(gradient_check(&oracle, &c, r)?.ratio);
            }
            Ok(GradientRow {
                lambda: mode.eigenvalue,
                level: *level,
                seed: *seed,
                centers: centers_per_field,
                max_ratio,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTheoremRow {
    pub lambda: f64,
    pub level: u64,
    pub seed: u64,
    pub resolution: usize,
    pub domains: usize,
    pub min_centered_inradius: f64,
    /// `lambda^{-1/2}`.
    pub lambda_scale: f64,
    /// `lambda^{-1/2} (log lambda)^{-(d-2)/2}`.
    pub log_scale: f64,
    /// `min_centered_inradius / log_scale`.
    pub normalized: f64,
}

/// Smallest centered inradius over the domains of one field.
///
/// Grid distances locate the candidates; those within `2 h sqrt(d)` of the grid minimum
/// are re-measured on a local lattice four times finer.
pub fn main_theorem_row(mode: &EigenMode, level: u64, seed: u64, samples_per_wavelength: f64) -> Result<MainTheoremRow> {
    main_theorem_row_at(mode, level, seed, resolution_for(mode, samples_per_wavelength, 2))
}

pub fn main_theorem_row_at(mode: &EigenMode, level: u64, seed: u64, resolution: usize) -> Result<MainTheoremRow> {
    let lambda = mode.eigenvalue;
    if !(lambda > std::f64::consts::E) {
        return invalid(format!("lambda = {lambda} is not above e"));
    }
    let d = mode.dim();
    let grid = sample_field(mode, resolution, false)?;
    let lab = label_nodal_domains(&grid, DEFAULT_ZERO_TOLERANCE)?;
    let coarse: Vec<(u32, f64)> = lab.ids().map(|id| (id, centered_inradius_search(&grid, &lab, id))).collect();
    let h = grid.max_spacing();
    let floor = coarse.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let mut min_r = f64::INFINITY;
    for &(id, r) in &coarse {
        if r <= floor + 2.0 * h * (d as f64).sqrt() {
            min_r = min_r.min(refined_centered_inradius(mode, &grid, &lab, id, h / 4.0)?);
        }
    }
    let lambda_scale = lambda.powf(-0.5);
    let log_scale = lambda_scale * lambda.ln().powf(-(d as f64 - 2.0) / 2.0);
    Ok(MainTheoremRow {
        lambda,
        level,
        seed,
        resolution,
        domains: lab.domain_count(),
        min_centered_inradius: min_r,
        lambda_scale,
        log_scale,
        normalized: min_r / log_scale,
    })
}

pub fn main_theorem_sweep(geometry: &Geometry, levels: &[u64], seeds: &[u64], samples_per_wavelength: f64) -> Result<Vec<MainTheoremRow>> {
    let jobs = field_jobs(geometry, levels, seeds)?;
    let mut rows = jobs
        .par_iter()
        .map(|(level, seed, mode)| main_theorem_row(mode, *level, *seed, samples_per_wavelength))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.seed.cmp(&b.seed)));
    Ok(rows)
}
