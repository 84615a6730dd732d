//! Discrete condenser capacity and the checks built on it: the heat-flow bound,
//! the nodal condenser experiment, and the volume-capacity inequality.

mod condenser;
mod heat_bound;
mod mazya;
mod nodal;

pub use condenser::{concentric_spheres, Condenser, Shape, MIN_SEPARATION};
pub use heat_bound::{capacity_heat_bound_check, capacity_heat_bound_sweep, HeatBoundReport, TIME_NODES};
pub use mazya::{mazya_check, MazyaReport};
pub use nodal::{nodal_capacity_experiment, NodalCapacityReport};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::heat::{equilibrium_free, FreeOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// `sum_edges h^{d-2} (v_i - v_j)^2` for the equilibrium potential.
    pub energy: f64,
    /// Net conductance-weighted flow out of `K`.
    pub flux: f64,
    pub relative_gap: f64,
    pub spacing: f64,
    pub solver_residual: f64,
    pub iterations: usize,
}

impl CapacityResult {
    pub fn value(&self) -> f64 {
        self.energy
    }
}

/// Dirichlet energy and boundary flux of the discrete equilibrium potential.
pub fn variational_capacity(condenser: &Condenser) -> Result<CapacityResult> {
    let op = FreeOperator::new(condenser);
    let (free, st) = equilibrium_free(&op)?;
    let v = op.scatter(&free, true);
    Ok(energy_and_flux(condenser, &v, st.residual, st.iterations))
}

pub(crate) fn energy_and_flux(condenser: &Condenser, v: &[f64], residual: f64, iterations: usize) -> CapacityResult {
    let lat = &condenser.lattice;
    let d = lat.dim();
    let h = lat.spacing[0];
    let g = h.powi(d as i32 - 2);
    let strides = lat.strides();
    let mut energy = 0.0;
    let mut flux = 0.0;
    for f in 0..lat.len() {
        for a in 0..d {
            let i = (f / strides[a]) % lat.shape[a];
            if i + 1 >= lat.shape[a] {
                continue;
            }
            let n = f + strides[a];
            let dv = v[f] - v[n];
            energy += dv * dv;
            if condenser.k[f] != condenser.k[n] {
                flux += dv.abs();
            }
        }
    }
    energy *= g;
    flux *= g;
    let relative_gap = if energy > 0.0 { (energy - flux).abs() / energy } else { flux.abs() };
    CapacityResult {
        energy,
        flux,
        relative_gap,
        spacing: h,
        solver_residual: residual,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn empty_k_has_zero_capacity() {
        let c = Condenser::from_shapes(&Shape::ball(vec![0.5, 0.5], 0.1), &Shape::cube(&[0.5, 0.5], 0.3), 0.05).unwrap();
        let empty = Condenser::new(c.lattice.clone(), vec![false; c.k.len()], c.u.clone(), true).unwrap();
        let r = variational_capacity(&empty).unwrap();
        assert_eq!((r.energy, r.flux), (0.0, 0.0));
        assert!(Condenser::new(c.lattice.clone(), vec![false; c.k.len()], c.u.clone(), false).is_err());
    }

    #[test]
    fn circle_capacity_is_close_at_moderate_resolution() {
        let c = concentric_spheres(2, 0.1, 0.3, 256).unwrap();
        let r = variational_capacity(&c).unwrap();
        let exact = 2.0 * PI / 3f64.ln();
        assert!((r.energy - exact).abs() < 0.08 * exact, "{} vs {exact}", r.energy);
        assert!(r.relative_gap <= 1e-6, "{}", r.relative_gap);
    }

    #[test]
    fn capacity_is_monotone_in_k_and_u() {
        let c = [0.5, 0.5];
        let h = 1.0 / 80.0;
        let caps: Vec<f64> = [0.05, 0.1, 0.15]
            .iter()
            .map(|&a| {
                variational_capacity(&Condenser::from_shapes(&Shape::cube(&c, a), &Shape::cube(&c, 0.35), h).unwrap())
                    .unwrap()
                    .energy
            })
            .collect();
        assert!(caps.windows(2).all(|w| w[1] - w[0] >= -1e-9), "{caps:?}");
        let caps: Vec<f64> = [0.25, 0.3, 0.4]
            .iter()
            .map(|&b| {
                variational_capacity(&Condenser::from_shapes(&Shape::cube(&c, 0.1), &Shape::cube(&c, b), h).unwrap())
                    .unwrap()
                    .energy
            })
            .collect();
        assert!(caps.windows(2).all(|w| w[0] - w[1] >= -1e-9), "{caps:?}");
    }
}
