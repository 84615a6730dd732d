use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cg::{conjugate_gradient, iteration_limit, CgStats};
use crate::capacity::Condenser;
use crate::error::{invalid, Result};
use crate::spectra::TensorLattice;

/// Relative residual for every implicit step.
pub const STEP_TOLERANCE: f64 = 1e-12;
/// The loosest step residual allowed.
pub const STEP_TOLERANCE_LOOSE: f64 = 1e-10;
/// Relative residual for the equilibrium solve.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-12;

const NONE: u32 = u32::MAX;

/// The graph Laplacian `deg I - Adj` restricted to the free nodes `U \ K`.
#[derive(Debug, Clone)]
pub struct FreeOperator {
    dim: usize,
    spacing: f64,
    /// Lattice index of each free node.
    pub nodes: Vec<usize>,
    /// Free index of each lattice node, `u32::MAX` when pinned.
    slot: Vec<u32>,
    /// `2d` neighbour slots per free node.
    nbrs: Vec<u32>,
    /// Number of `K` neighbours of each free node.
    pub k_links: Vec<f64>,
    k: Vec<bool>,
}

impl FreeOperator {
    pub fn new(condenser: &Condenser) -> Self {
        let lat = &condenser.lattice;
        let d = lat.dim();
        let strides = lat.strides();
        let mut slot = vec![NONE; lat.len()];
        let mut nodes = Vec::new();
        for f in 0..lat.len() {
            if condenser.is_free(f) {
                slot[f] = nodes.len() as u32;
                nodes.push(f);
            }
        }
        let mut nbrs = Vec::with_capacity(2 * d * nodes.len());
        let mut k_links = Vec::with_capacity(nodes.len());
        for &f in &nodes {
            let mut kl = 0.0;
            // free nodes lie in U, which stays off the lattice edge
            for a in 0..d {
                for g in [f - strides[a], f + strides[a]] {
                    nbrs.push(slot[g]);
                    if condenser.k[g] {
                        kl += 1.0;
                    }
                }
            }
            k_links.push(kl);
        }
        FreeOperator {
            dim: d,
            spacing: lat.spacing[0],
            nodes,
            slot,
            nbrs,
            k_links,
            k: condenser.k.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn slot(&self, lattice_index: usize) -> Option<usize> {
        let s = self.slot[lattice_index];
        (s != NONE).then_some(s as usize)
    }

    /// `y = shift x + scale (deg x - Adj x)`.
    pub fn apply(&self, shift: f64, scale: f64, x: &[f64], y: &mut [f64]) {
        let w = 2 * self.dim;
        let deg = w as f64;
        for (i, nb) in self.nbrs.chunks_exact(w).enumerate() {
            let mut s = 0.0;
            for &j in nb {
                if j != NONE {
                    s += x[j as usize];
                }
            }
            y[i] = shift * x[i] + scale * (deg * x[i] - s);
        }
    }

    /// Solves `(shift I + scale L) x = rhs`, starting from `x`.
    pub fn solve(&self, shift: f64, scale: f64, rhs: &[f64], x: &mut [f64], tolerance: f64) -> Result<CgStats> {
        conjugate_gradient(
            |v, out| self.apply(shift, scale, v, out),
            rhs,
            x,
            tolerance,
            iteration_limit(self.len()),
        )
    }

    /// Full lattice array: free values, 1 on `K` when `pinned_one`, 0 elsewhere.
    pub fn scatter(&self, free: &[f64], pinned_one: bool) -> Vec<f64> {
        let mut out: Vec<f64> = self.k.iter().map(|&k| if k && pinned_one { 1.0 } else { 0.0 }).collect();
        for (i, &f) in self.nodes.iter().enumerate() {
            out[f] = free[i];
        }
        out
    }
}

/// Temperature of the condenser heat flow at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatFlowState {
    pub time: f64,
    pub step: usize,
    pub step_size: f64,
    /// Values on the free nodes, in [`FreeOperator::nodes`] order.
    pub temperature: Vec<f64>,
    pub solver_residual: f64,
    pub iterations: usize,
}

impl HeatFlowState {
    /// Temperature at a lattice node (1 on `K`, 0 outside `U`).
    pub fn value_at(&self, op: &FreeOperator, lattice_index: usize) -> f64 {
        match op.slot(lattice_index) {
            Some(i) => self.temperature[i],
            None if op.k[lattice_index] => 1.0,
            None => 0.0,
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.temperature
            .iter()
            .fold((0.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

#[derive(Serialize)]
struct CheckpointHeader<'a> {
    t: f64,
    step: usize,
    residual: f64,
    lattice: &'a TensorLattice,
}

/// Writes `<stem>.bin` (full lattice values, little-endian f64) and `<stem>.json` with
/// `{t, step, residual, lattice}`.
pub fn write_checkpoint(state: &HeatFlowState, condenser: &Condenser, op: &FreeOperator, stem: &Path) -> Result<()> {
    let header = CheckpointHeader {
        t: state.time,
        step: state.step,
        residual: state.solver_residual,
        lattice: &condenser.lattice,
    };
    fs::write(stem.with_extension("json"), serde_json::to_vec_pretty(&header)?)?;
    let values = op.scatter(&state.temperature, true);
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(stem.with_extension("bin"), bytes)?;
    Ok(())
}

/// Implicit Euler stepping of `psi_t = Delta_h psi` on the free nodes.
///
/// With `source` the `K` nodes are held at 1, otherwise every pinned node is 0.
pub struct HeatFlow<'a> {
    op: &'a FreeOperator,
    source: bool,
    tolerance: f64,
    state: HeatFlowState,
}

impl<'a> HeatFlow<'a> {
    /// Zero initial data, `K` held at 1.
    pub fn new(op: &'a FreeOperator, step_size: f64) -> Result<Self> {
        Self::with_initial(op, step_size, vec![0.0; op.len()], true)
    }

    pub fn with_initial(op: &'a FreeOperator, step_size: f64, initial: Vec<f64>, source: bool) -> Result<Self> {
        if !(step_size > 0.0) {
            return invalid(format!("heat flow needs a positive step, got {step_size}"));
        }
        if initial.len() != op.len() {
            return invalid("initial temperature does not match the free nodes");
        }
        let state = HeatFlowState {
            time: 0.0,
            step: 0,
            step_size,
            temperature: initial,
            solver_residual: 0.0,
            iterations: 0,
        };
        Ok(HeatFlow {
            op,
            source,
            tolerance: STEP_TOLERANCE,
            state,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn state(&self) -> &HeatFlowState {
        &self.state
    }

    pub fn into_state(self) -> HeatFlowState {
        self.state
    }

    pub fn step(&mut self) -> Result<()> {
        let c = self.state.step_size / (self.op.spacing * self.op.spacing);
        let mut rhs = self.state.temperature.clone();
        if self.source {
            rhs.iter_mut().zip(&self.op.k_links).for_each(|(r, k)| *r += c * k);
        }
        let mut x = self.state.temperature.clone();
        let st = self.op.solve(1.0, c, &rhs, &mut x, self.tolerance)?;
        self.state.temperature = x;
        self.state.time = (self.state.step + 1) as f64 * self.state.step_size;
        self.state.step += 1;
        self.state.solver_residual = self.state.solver_residual.max(st.residual);
        self.state.iterations += st.iterations;
        Ok(())
    }

    pub fn run(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}

/// Step count and uniform step for reaching `t_end` with steps no longer than `step_size`.
pub fn step_plan(t_end: f64, step_size: f64) -> Result<(usize, f64)> {
    if !(t_end >= 0.0) || !(step_size > 0.0) {
        return invalid(format!("bad time plan: t_end={t_end}, step={step_size}"));
    }
    if t_end == 0.0 {
        return Ok((0, step_size));
    }
    let n = (t_end / step_size * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((n, t_end / n as f64))
}

/// Temperature `psi_{K,U}(t)` from zero initial data, checkpointed `checkpoints` times
/// (evenly in steps, always including the end).
pub fn heat_flow_psi(condenser: &Condenser, t_end: f64, step_size: f64, checkpoints: usize) -> Result<Vec<HeatFlowState>> {
    if !(t_end > 0.0) || step_size > t_end / 10.0 * (1.0 + 1e-12) {
        return invalid(format!(
            "heat flow needs t_end > 0 and step <= t_end/10, got t_end={t_end}, step={step_size}"
        ));
    }
    let op = FreeOperator::new(condenser);
    let (steps, tau) = step_plan(t_end, step_size)?;
    let mut flow = HeatFlow::new(&op, tau)?;
    let every = (steps / checkpoints.max(1)).max(1);
    let mut out = Vec::new();
    for s in 1..=steps {
        flow.step()?;
        if s % every == 0 || s == steps {
            out.push(flow.state().clone());
        }
    }
    Ok(out)
}

/// Discrete equilibrium potential on the full lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub values: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub(crate) fn equilibrium_free(op: &FreeOperator) -> Result<(Vec<f64>, CgStats)> {
    let mut x = vec![0.0; op.len()];
    let st = op.solve(0.0, 1.0, &op.k_links, &mut x, EQUILIBRIUM_TOLERANCE)?;
    Ok((x, st))
}

/// Solves `L psi = 0` on `U \ K` with 1 on `K` and 0 outside `U`.
pub fn equilibrium_potential(condenser: &Condenser) -> Result<Potential> {
    let op = FreeOperator::new(condenser);
    let (x, st) = equilibrium_free(&op)?;
    Ok(Potential {
        values: op.scatter(&x, true),
        residual: st.residual,
        iterations: st.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub t: f64,
    pub steps: usize,
    pub step_size: f64,
    /// Sup over free nodes of `|(E - psi(t)) - P_t E|`.
    pub discrepancy: f64,
}

/// Compares `E - psi(t)` with `E` evolved under the zero-boundary flow, both with the
/// same implicit steps.
pub fn deficit_identity_check(condenser: &Condenser, t: f64, step_size: f64) -> Result<DeficitReport> {
    let op = FreeOperator::new(condenser);
    let (steps, tau) = step_plan(t, step_size)?;
    let (eq, _) = equilibrium_free(&op)?;
    let psi = HeatFlow::new(&op, tau)?;
    let w = HeatFlow::with_initial(&op, tau, eq.clone(), false)?;
    let (mut psi, mut w) = (psi.with_tolerance(1e-14), w.with_tolerance(1e-14));
    psi.run(steps)?;
    w.run(steps)?;
    let discrepancy = eq
        .iter()
        .zip(&psi.state().temperature)
        .zip(&w.state().temperature)
        .map(|((e, p), q)| (e - p - q).abs())
        .fold(0.0, f64::max);
    Ok(DeficitReport {
        t,
        steps,
        step_size: tau,
        discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{concentric_spheres, Shape};

    fn probe(c: &Condenser, x: &[f64]) -> usize {
        c.nearest_node(x).unwrap()
    }

    #[test]
    fn equilibrium_matches_radial_solutions() {
        let c = concentric_spheres(3, 0.1, 0.3, 64).unwrap();
        let eq = equilibrium_potential(&c).unwrap();
        assert!(eq.residual <= EQUILIBRIUM_TOLERANCE);
        // node at radius 13/64; the mask error is first order in h
        let v = eq.values[probe(&c, &[0.7, 0.5, 0.5])];
        let exact = (64.0 / 13.0 - 1.0 / 0.3) / (10.0 - 1.0 / 0.3);
        assert!((v - exact).abs() <= 0.1 * exact, "{v}");

        let c = concentric_spheres(2, 0.1, 0.3, 256).unwrap();
        let eq = equilibrium_potential(&c).unwrap();
        let v = eq.values[probe(&c, &[0.7, 0.5])];
        let exact = 1.5f64.ln() / 3f64.ln();
        assert!((v - exact).abs() <= 0.02 * exact, "{v}");
        let op = FreeOperator::new(&c);
        assert!(op.nodes.iter().all(|&f| eq.values[f] > 0.0 && eq.values[f] < 1.0));
    }

    #[test]
    fn flow_is_monotone_and_bounded() {
        let c = Condenser::from_shapes(&Shape::cube(&[0.5, 0.5], 0.1), &Shape::cube(&[0.5, 0.5], 0.3), 1.0 / 64.0).unwrap();
        let states = heat_flow_psi(&c, 0.02, 0.001, 20).unwrap();
        assert_eq!(states.len(), 20);
        for w in states.windows(2) {
            let (lo, hi) = w[1].min_max();
            assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);
            assert!(w[0].temperature.iter().zip(&w[1].temperature).all(|(a, b)| b >= &(a - 1e-12)));
        }
        let op = FreeOperator::new(&c);
        let eq = equilibrium_potential(&c).unwrap();
        let late = heat_flow_psi(&c, 10.0 * 0.09, 0.01, 1).unwrap().pop().unwrap();
        let gap = op
            .nodes
            .iter()
            .map(|&f| (late.value_at(&op, f) - eq.values[f]).abs())
            .fold(0.0, f64::max);
        assert!(gap <= 1e-6, "{gap}");
    }

    #[test]
    fn first_step_is_local() {
        let c = Condenser::from_shapes(&Shape::cube(&[0.5, 0.5], 0.05), &Shape::cube(&[0.5, 0.5], 0.4), 1.0 / 100.0).unwrap();
        let s = heat_flow_psi(&c, 1e-4, 1e-5, 1).unwrap().remove(0);
        let op = FreeOperator::new(&c);
        let far = op
            .nodes
            .iter()
            .position(|&f| c.lattice.point(f).iter().all(|&x| (x - 0.5).abs() > 0.3))
            .unwrap();
        assert!(s.temperature[far] < 1e-12, "{}", s.temperature[far]);
    }

    #[test]
    fn deficit_identity_is_exact() {
        let c = concentric_spheres(2, 0.1, 0.3, 128).unwrap();
        assert_eq!(deficit_identity_check(&c, 0.0, 1e-3).unwrap().discrepancy, 0.0);
        let r = deficit_identity_check(&c, 0.02, 1e-3).unwrap();
        assert!(r.discrepancy <= 1e-8, "{}", r.discrepancy);
    }

    #[test]
    fn rejects_long_steps() {
        let c = concentric_spheres(2, 0.1, 0.3, 64).unwrap();
        assert!(heat_flow_psi(&c, 0.01, 0.002, 1).is_err());
    }
}
