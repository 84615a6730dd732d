use serde::{Deserialize, Serialize};

use super::{energy_and_flux, Condenser};
use crate::error::{invalid, Result};
use crate::heat::{equilibrium_free, FreeOperator, HeatFlow, STEP_TOLERANCE_LOOSE};
use crate::nodal::{centered_lattice, local_domain, DomainLabeling};
use crate::spectra::{EigenMode, ScalarGrid};

/// Local lattice steps per radius `delta / sqrt(lambda)`.
pub const CELLS_PER_RADIUS: usize = 6;
/// Half-width of `U` in radii, capped at `r0`.
pub const U_RADII: f64 = 4.0;
const FLOW_STEPS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalCapacityReport {
    pub lambda: f64,
    pub domain_id: u32,
    pub delta: f64,
    /// `delta / sqrt(lambda)`.
    pub radius: f64,
    pub x_max: Vec<f64>,
    pub spacing: f64,
    pub u_half_width: f64,
    pub k_nodes: usize,
    /// `K` is empty after erosion; every later number is then zero.
    pub vacuous: bool,
    pub capacity: f64,
    pub energy_flux_gap: f64,
    /// `psi_{K,U}(radius^2, x_max)`.
    pub temperature: f64,
    /// `cap / (delta^2 radius^{d-2})`.
    pub normalized_cap: f64,
    /// `temperature / delta^2`.
    pub normalized_temp: f64,
    /// Heat left in `U \ K` at time `radius^2` from unit initial data, at `x_max`.
    pub mass_u_minus_k: f64,
    /// Heat lost through the boundary of `U` alone by the same time.
    pub exit_tail: f64,
    /// `exp(-delta^2) = exp(-lambda t)`.
    pub decay: f64,
    /// `mass_u_minus_k + exit_tail - decay`.
    pub majorization_margin: f64,
}

/// Condenser built from the nodal set near the maximum of domain `id`.
///
/// `K` is the part of the closed ball `B(x_max, delta/sqrt(lambda))` outside the domain,
/// resolved on a local lattice and eroded by one node; `U` is the cube of half-width
/// `min(r0, 4 delta/sqrt(lambda))` about `x_max`.
pub fn nodal_capacity_experiment(
    mode: &EigenMode,
    grid: &ScalarGrid,
    labeling: &DomainLabeling,
    id: u32,
    delta: f64,
) -> Result<NodalCapacityReport> {
    labeling.check_id(id)?;
    let lambda = mode.eigenvalue;
    if !(lambda > 0.0) || !(delta > 0.0) {
        return invalid("nodal capacity needs lambda > 0 and delta > 0");
    }
    let d = grid.dim();
    let radius = delta / lambda.sqrt();
    let r0 = grid.geometry.r0();
    if radius >= 0.5 * r0 {
        return invalid(format!("delta/sqrt(lambda) = {radius} is not below r0/2 = {}", 0.5 * r0));
    }
    let h = radius / CELLS_PER_RADIUS as f64;
    let half_nodes = ((U_RADII * radius).min(r0) / h).floor() as usize;
    let x_max = grid.point(labeling.argmax_of(id));
    let lattice = centered_lattice(&x_max, (half_nodes + 2) as f64 * h, h);
    let local = local_domain(mode, grid, labeling, id, lattice.clone())?;
    let mid = half_nodes + 2;
    let shape = lattice.shape.clone();
    let n = lattice.len();
    let strides = lattice.strides();

    let mut u = vec![false; n];
    let mut k0 = vec![false; n];
    for f in 0..n {
        let idx = crate::spectra::unflatten(f, &shape);
        let off: Vec<i64> = idx.iter().map(|&i| i as i64 - mid as i64).collect();
        u[f] = off.iter().all(|o| o.unsigned_abs() < half_nodes as u64);
        let r2 = off.iter().map(|&o| (o * o) as f64).sum::<f64>() * h * h;
        k0[f] = u[f] && r2 <= radius * radius * (1.0 + 1e-12) && !local.in_domain[f];
    }
    let k: Vec<bool> = (0..n)
        .map(|f| k0[f] && (0..d).all(|a| k0[f - strides[a]] && k0[f + strides[a]]))
        .collect();
    let condenser = Condenser::new(lattice, k, u.clone(), true)?;
    let k_nodes = condenser.k_count();
    let decay = (-delta * delta).exp();
    let center = condenser.nearest_node(&x_max).expect("x_max is the lattice center");

    let op = FreeOperator::new(&condenser);
    let t = radius * radius;
    let tau = t / FLOW_STEPS as f64;
    let (capacity, gap, temperature) = if k_nodes == 0 {
        (0.0, 0.0, 0.0)
    } else {
        let (free, st) = equilibrium_free(&op)?;
        let res = energy_and_flux(&condenser, &op.scatter(&free, true), st.residual, st.iterations);
        let mut flow = HeatFlow::new(&op, tau)?;
        flow.run(FLOW_STEPS)?;
        (res.energy, res.relative_gap, flow.state().value_at(&op, center))
    };

    let mass = |op: &FreeOperator| -> Result<f64> {
        let mut flow = HeatFlow::with_initial(op, tau, vec![1.0; op.len()], false)?.with_tolerance(STEP_TOLERANCE_LOOSE);
        flow.run(FLOW_STEPS)?;
        Ok(flow.state().value_at(op, center))
    };
    let mass_u_minus_k = mass(&op)?;
    let exit_tail = if k_nodes == 0 {
        1.0 - mass_u_minus_k
    } else {
        let bare = Condenser::new(condenser.lattice.clone(), vec![false; n], u, true)?;
        1.0 - mass(&FreeOperator::new(&bare))?
    };

    let scale = delta * delta * radius.powi(d as i32 - 2);
    Ok(NodalCapacityReport {
        lambda,
        domain_id: id,
        delta,
        radius,
        x_max,
        spacing: h,
        u_half_width: half_nodes as f64 * h,
        k_nodes,
        vacuous: k_nodes == 0,
        capacity,
        energy_flux_gap: gap,
        temperature,
        normalized_cap: capacity / scale,
        normalized_temp: temperature / (delta * delta),
        mass_u_minus_k,
        exit_tail,
        decay,
        majorization_margin: mass_u_minus_k + exit_tail - decay,
    })
}
