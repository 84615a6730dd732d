use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::edt::squared_edt;
use super::labeling::DomainLabeling;
use super::local::{centered_lattice, local_domain};
use crate::error::{invalid, LabError, Result};
use crate::spectra::{EigenMode, ScalarGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainRadii {
    pub id: u32,
    pub inradius: f64,
    pub incenter: Vec<f64>,
    pub centered_inradius: f64,
}

/// Distance from every sample to the nearest sample outside its own domain (0 on zero samples).
///
/// The nearest sample outside a positive domain is always a nonpositive sample, since a
/// positive sample face-adjacent to the domain would belong to it. So two transforms, one
/// per sign, give exact per-domain distances.
pub fn distance_to_complement(grid: &ScalarGrid, labeling: &DomainLabeling) -> Vec<f64> {
    let spacing: Vec<f64> = (0..grid.dim()).map(|a| grid.spacing(a)).collect();
    let torus = grid.geometry.is_torus();
    let n = grid.len();
    let mut dist = vec![0.0; n];
    for sign in [1i8, -1] {
        let feature: Vec<bool> = (0..n).map(|f| labeling.sample_sign(f) != sign).collect();
        let d2 = squared_edt(&grid.shape, &spacing, torus, &feature);
        for f in 0..n {
            if labeling.sample_sign(f) == sign {
                dist[f] = d2[f].sqrt();
            }
        }
    }
    dist
}

/// Inner radius, incenter and distance from the argmax to the nodal set, per domain.
pub fn inradius_report(labeling: &DomainLabeling, grid: &ScalarGrid) -> Vec<DomainRadii> {
    let dist = distance_to_complement(grid, labeling);
    radii_from_distances(labeling, grid, &dist)
}

pub fn radii_from_distances(labeling: &DomainLabeling, grid: &ScalarGrid, dist: &[f64]) -> Vec<DomainRadii> {
    let k = labeling.domain_count();
    let mut best = vec![(f64::NEG_INFINITY, 0usize); k];
    for (f, &l) in labeling.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let b = &mut best[l as usize - 1];
        if dist[f] > b.0 {
            *b = (dist[f], f);
        }
    }
    labeling
        .ids()
        .map(|id| {
            let (inradius, at) = best[id as usize - 1];
            DomainRadii {
                id,
                inradius,
                incenter: grid.point(at),
                centered_inradius: dist[labeling.argmax_of(id)],
            }
        })
        .collect()
}

/// Fraction of `B(x_max, delta / sqrt(lambda))` not in domain `id`, for each delta.
///
/// All balls are counted on one local lattice centered at the argmax, resolved by analytic
/// evaluation; zero points and points outside a box count toward the deficiency.
/// `spacing` defaults to the smaller of half the grid spacing and a twelfth of the smallest radius,
/// coarsened if needed to keep the lattice under [`MAX_LOCAL_POINTS`].
pub fn deficiency_profile(
    mode: &EigenMode,
    grid: &ScalarGrid,
    labeling: &DomainLabeling,
    id: u32,
    deltas: &[f64],
    spacing: Option<f64>,
) -> Result<Vec<f64>> {
    labeling.check_id(id)?;
    if mode.eigenvalue <= 0.0 {
        return invalid("deficiency ratio needs a positive eigenvalue");
    }
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0)) {
        return invalid("deltas must be positive");
    }
    let scale = mode.eigenvalue.sqrt().recip();
    let r_max = deltas.iter().cloned().fold(0.0, f64::max) * scale;
    let r_min = deltas.iter().cloned().fold(f64::INFINITY, f64::min) * scale;
    if r_max >= grid.geometry.r0() {
        return Err(LabError::OutsideGeometry(format!(
            "ball radius {r_max} is not below r0 = {}",
            grid.geometry.r0()
        )));
    }
    let s = spacing.unwrap_or_else(|| {
        let per_axis = (MAX_LOCAL_POINTS as f64).powf(1.0 / grid.dim() as f64).floor() - 1.0;
        (0.5 * grid.max_spacing()).min(r_min / 12.0).max(2.0 * r_max / per_axis)
    });
    let center = grid.point(labeling.argmax_of(id));
    let local = local_domain(mode, grid, labeling, id, centered_lattice(&center, r_max, s))?;

    let mut dist2: Vec<(f64, bool)> = (0..local.lattice.len())
        .map(|f| {
            let p = local.lattice.point(f);
            let d2: f64 = p.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, local.in_domain[f])
        })
        .collect();
    dist2.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(deltas
        .iter()
        .map(|&d| {
            let r2 = (d * scale).powi(2) * (1.0 + 1e-12);
            let inside = dist2.partition_point(|e| e.0 <= r2);
            let missing = dist2[..inside].iter().filter(|e| !e.1).count();
            missing as f64 / inside as f64
        })
        .collect())
}

pub const MAX_LOCAL_POINTS: usize = 2_000_000;

pub fn deficiency_ratio(mode: &EigenMode, grid: &ScalarGrid, labeling: &DomainLabeling, id: u32, delta: f64) -> Result<f64> {
    Ok(deficiency_profile(mode, grid, labeling, id, &[delta], None)?[0])
}

/// Distance from the domain's argmax sample to the nearest zero or opposite-sign sample,
/// by a local search that grows until the answer is certain. Agrees with
/// `centered_inradius` of [`inradius_report`] without a full distance transform.
pub fn centered_inradius_search(grid: &ScalarGrid, labeling: &DomainLabeling, id: u32) -> f64 {
    let d = grid.dim();
    let at = grid.index_of(labeling.argmax_of(id));
    let h: Vec<f64> = (0..d).map(|a| grid.spacing(a)).collect();
    let h_min = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let torus = grid.geometry.is_torus();
    let strides = grid.strides();
    let max_reach = *grid.shape.iter().max().unwrap() as i64;
    let sign = labeling.sign(id);
    let mut best = f64::INFINITY;
    let mut reach = 1i64;
    loop {
        let mut off = vec![-reach; d];
        'scan: loop {
            let mut flat = 0usize;
            let mut d2 = 0.0;
            let mut valid = true;
            for a in 0..d {
                let n = grid.shape[a] as i64;
                let mut i = at[a] as i64 + off[a];
                if torus {
                    i = i.rem_euclid(n);
                } else if i < 0 || i >= n {
                    valid = false;
                }
                flat += i.max(0) as usize * strides[a];
                d2 += (off[a] as f64 * h[a]).powi(2);
            }
            if valid && d2 < best && labeling.sample_sign(flat) != sign {
                best = d2;
            }
            let mut a = d;
            loop {
                if a == 0 {
                    break 'scan;
                }
                a -= 1;
                off[a] += 1;
                if off[a] <= reach {
                    break;
                }
                off[a] = -reach;
            }
        }
        if best <= (reach as f64 * h_min).powi(2) || reach >= max_reach {
            return best.sqrt();
        }
        reach = (reach * 2).min(max_reach);
    }
}

/// Centered inradius resolved on a fine local lattice of the given spacing by analytic
/// evaluation of the mode, starting from the grid estimate.
pub fn refined_centered_inradius(mode: &EigenMode, grid: &ScalarGrid, labeling: &DomainLabeling, id: u32, spacing: f64) -> Result<f64> {
    let coarse = centered_inradius_search(grid, labeling, id);
    let center = grid.point(labeling.argmax_of(id));
    // the segment to the nearest opposite-sign sample crosses the nodal set, so the
    // true distance is at most `coarse`
    let half = coarse + spacing;
    let local = local_domain(mode, grid, labeling, id, centered_lattice(&center, half, spacing))?;
    let best = (0..local.lattice.len())
        .filter(|&f| !local.in_domain[f])
        .map(|f| {
            let p = local.lattice.point(f);
            p.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(if best.is_finite() { best.sqrt() } else { coarse })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBounds {
    /// `min over domains of Vol(domain) * lambda^{d/2}`.
    pub faber_krahn_min: f64,
    /// Smallest radius such that every ball centered at a sample meets a zero or both signs.
    pub zero_hitting_radius: f64,
}

pub fn classical_bounds_report(labeling: &DomainLabeling, grid: &ScalarGrid, lambda: f64) -> ClassicalBounds {
    let d = grid.dim() as f64;
    let faber_krahn_min = labeling
        .volumes
        .iter()
        .map(|v| v * lambda.powf(d / 2.0))
        .fold(f64::INFINITY, f64::min);
    // the ball around a sample first meets a zero or the other sign at exactly the
    // sample's distance to the complement of its domain
    let zero_hitting_radius = distance_to_complement(grid, labeling).into_iter().fold(0.0, f64::max);
    ClassicalBounds {
        faber_krahn_min,
        zero_hitting_radius,
    }
}

/// Ball constant `omega_d j^d` of the Faber-Krahn inequality, with `j` the first zero of `J_{d/2-1}`.
pub fn faber_krahn_constant(dim: usize) -> f64 {
    match dim {
        2 => PI * BESSEL_J0_FIRST_ZERO.powi(2),
        3 => 4.0 * PI / 3.0 * PI.powi(3),
        _ => f64::NAN,
    }
}

pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;
