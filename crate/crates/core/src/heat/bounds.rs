use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use crate::error::{invalid, Result};
use crate::spectra::{advance, Geometry};

/// Gaussian exponent constant held fixed in the upper bound.
pub const UPPER_BOUND_C2: f64 = 0.2;

/// Values of `1 - p_B / p_M` below this are rounding noise and do not constrain epsilon.
pub const NORRIS_RESOLVABLE: f64 = 1e-12;

/// One upper-bound check, `bound = C1 t^{-d/2} exp(-C2 dist^2 / t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub t: f64,
    pub dist: f64,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundReport {
    /// Smallest `C1` for which the upper bound holds with `C2 = UPPER_BOUND_C2`.
    pub c1: f64,
    pub c2: f64,
    /// Largest `C3` with `p >= C3 t^{-d/2} exp(-dist^2 / 4t)`.
    pub c3: f64,
    /// Largest `eps` with `p_B / p_M >= 1 - exp(-eps / t)` over the resolvable Norris samples.
    pub norris_epsilon: f64,
    pub norris_t0: f64,
    pub norris_half_width: f64,
    /// Norris samples used, and samples whose defect was below [`NORRIS_RESOLVABLE`].
    pub norris_samples: usize,
    pub norris_unresolved: usize,
    pub rows: Vec<BoundRow>,
}

/// The kernel of the whole geometry: torus images or Dirichlet box images.
pub fn geometry_kernel(geometry: &Geometry) -> KernelSpec {
    if geometry.is_torus() {
        KernelSpec::torus(geometry.sides.clone())
    } else {
        KernelSpec::dirichlet_box(vec![0.0; geometry.dim], geometry.sides.clone())
    }
}

/// Fits the upper and lower Gaussian constants over `t_grid x pairs`, and the
/// not-feeling-the-boundary exponent for the box of half-width `r0` centered in the
/// geometry, over `t <= norris_t0` and pairs inside the concentric box of half-width `3 r0 / 4`.
pub fn kernel_bound_report(
    geometry: &Geometry,
    t_grid: &[f64],
    pairs: &[(Vec<f64>, Vec<f64>)],
    norris_t0: f64,
) -> Result<KernelBoundReport> {
    geometry.validate()?;
    if t_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return invalid("kernel bound times must lie in (0, 1)");
    }
    let d = geometry.dim;
    let pm = geometry_kernel(geometry);
    let r0 = geometry.r0();
    let center: Vec<f64> = geometry.sides.iter().map(|l| 0.5 * l).collect();
    let pb = KernelSpec::dirichlet_between(
        &center.iter().map(|c| c - r0).collect::<Vec<_>>(),
        &center.iter().map(|c| c + r0).collect::<Vec<_>>(),
    );
    let inner = |x: &[f64]| x.iter().zip(&center).all(|(a, c)| (a - c).abs() <= 0.75 * r0);

    let mut c1: f64 = 0.0;
    let mut c3 = f64::INFINITY;
    let mut eps = f64::INFINITY;
    let (mut used, mut unresolved) = (0, 0);
    let mut samples = Vec::with_capacity(t_grid.len() * pairs.len());
    for &t in t_grid {
        let scale = t.powf(d as f64 / 2.0);
        for (x, y) in pairs {
            let v = pm.eval(t, x, y)?;
            let dist = geometry.distance(x, y);
            c1 = c1.max(v * scale * (UPPER_BOUND_C2 * dist * dist / t).exp());
            c3 = c3.min(v * scale * (dist * dist / (4.0 * t)).exp());
            samples.push((t, dist, v));
            if t <= norris_t0 && inner(x) && inner(y) {
                // ln(1 - ratio) through ln_1p keeps far pairs, whose ratio is tiny, resolvable
                let ratio = pb.eval(t, x, y)? / v;
                if 1.0 - ratio < NORRIS_RESOLVABLE {
                    unresolved += 1;
                } else {
                    used += 1;
                    eps = eps.min(-t * (-ratio).ln_1p());
                }
            }
        }
    }
    let rows = samples
        .into_iter()
        .map(|(t, dist, value)| {
            let bound = c1 * t.powf(-(d as f64) / 2.0) * (-UPPER_BOUND_C2 * dist * dist / t).exp();
            BoundRow {
                t,
                dist,
                value,
                bound,
                margin: bound - value,
            }
        })
        .collect();
    Ok(KernelBoundReport {
        c1,
        c2: UPPER_BOUND_C2,
        c3,
        norris_epsilon: eps,
        norris_t0,
        norris_half_width: r0,
        norris_samples: used,
        norris_unresolved: unresolved,
        rows,
    })
}

/// `(4 pi)^{-d/2}`, the free-space value of `p t^{d/2}` on the diagonal.
pub fn gaussian_constant(dim: usize) -> f64 {
    (4.0 * PI).powf(-(dim as f64) / 2.0)
}

fn midpoints(spec: &KernelSpec, cells: usize) -> (Vec<Vec<f64>>, f64) {
    let axes: Vec<Vec<f64>> = (0..spec.dim())
        .map(|a| {
            let h = spec.sides[a] / cells as f64;
            (0..cells).map(|i| spec.lower[a] + (i as f64 + 0.5) * h).collect()
        })
        .collect();
    let vol: f64 = spec.sides.iter().map(|l| l / cells as f64).product();
    (axes, vol)
}

/// Sum over the `cells^d` cell midpoints `y` of `f(y)` times the cell volume.
fn cell_quadrature(spec: &KernelSpec, cells: usize, mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<f64> {
    let (axes, vol) = midpoints(spec, cells);
    let d = spec.dim();
    let shape = vec![cells; d];
    let mut idx = vec![0; d];
    let mut y = vec![0.0; d];
    let mut sum = 0.0;
    loop {
        for a in 0..d {
            y[a] = axes[a][idx[a]];
        }
        sum += f(&y)?;
        if !advance(&mut idx, &shape) {
            break;
        }
    }
    Ok(sum * vol)
}

/// Cell-midpoint quadrature of `int p(t, x, y) dy` over the fundamental cell.
pub fn cell_mass(spec: &KernelSpec, t: f64, x: &[f64], cells: usize) -> Result<f64> {
    cell_quadrature(spec, cells, |y| spec.eval(t, x, y))
}

/// `|int p(s, x, y) p(t, y, z) dy - p(s + t, x, z)|` by cell-midpoint quadrature.
pub fn semigroup_defect(spec: &KernelSpec, s: f64, t: f64, x: &[f64], z: &[f64], cells: usize) -> Result<f64> {
    let lhs = cell_quadrature(spec, cells, |y| Ok(spec.eval(s, x, y)? * spec.eval(t, y, z)?))?;
    Ok((lhs - spec.eval(s + t, x, z)?).abs())
}
