use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{variational_capacity, Condenser};
use crate::error::{invalid, Result};
use crate::heat::{FreeOperator, HeatFlow, KernelSpec};

/// Log-spaced quadrature nodes in `s`, covering `[t 1e-8, t]`.
pub const TIME_NODES: usize = 400;
const DECADES: f64 = 8.0;
/// Implicit steps up to the shortest requested time.
const MIN_STEPS: f64 = 40.0;
const CLUSTER: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatBoundReport {
    /// Probe snapped to the nearest lattice node.
    pub probe: Vec<f64>,
    /// Requested time rounded to a whole number of heat-flow steps.
    pub t: f64,
    pub r: f64,
    pub capacity: f64,
    /// `int_0^t inf_{y in dK} p_U(s, x, y) ds`.
    pub kernel_integral: f64,
    pub psi: f64,
    /// `psi(t, x) - cap * kernel_integral`.
    pub margin: f64,
    pub psi_r2: f64,
    /// `cap / (psi(r^2, x) r^{d-2})`.
    pub proposition_ratio: f64,
    /// Share of the integral estimated on `(0, t 1e-8]`.
    pub small_time_fraction: f64,
    pub tail_warning: bool,
}

/// The Dirichlet box whose first pinned layer matches the mask of `U`, if `U` is a box.
fn u_box(c: &Condenser) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = c.dim();
    let h = c.spacing();
    let mut lo = vec![usize::MAX; d];
    let mut hi = vec![0; d];
    let mut count = 0usize;
    for f in (0..c.u.len()).filter(|&f| c.u[f]) {
        let idx = crate::spectra::unflatten(f, &c.lattice.shape);
        for a in 0..d {
            lo[a] = lo[a].min(idx[a]);
            hi[a] = hi[a].max(idx[a]);
        }
        count += 1;
    }
    let full: usize = (0..d).map(|a| hi[a] - lo[a] + 1).product();
    if count != full {
        return invalid("the heat bound needs U to be an axis-aligned box");
    }
    Ok((
        (0..d).map(|a| c.lattice.origin[a] + (lo[a] as f64 - 1.0) * h).collect(),
        (0..d).map(|a| c.lattice.origin[a] + (hi[a] as f64 + 1.0) * h).collect(),
    ))
}

/// `psi_{K,U}(t, x)` against `cap(K, U) int_0^t inf_{dK} p_U`, plus the ratio
/// `cap / (psi(r^2, x) r^{d-2})`. `U` must be a box.
pub fn capacity_heat_bound_check(condenser: &Condenser, x: &[f64], t: f64, r: f64) -> Result<HeatBoundReport> {
    Ok(capacity_heat_bound_sweep(condenser, &[(x.to_vec(), t, r)])?.remove(0))
}

/// Several `(probe, t, r)` cases on one condenser, sharing the capacity solve and the heat flows.
pub fn capacity_heat_bound_sweep(condenser: &Condenser, cases: &[(Vec<f64>, f64, f64)]) -> Result<Vec<HeatBoundReport>> {
    let (lo, hi) = u_box(condenser)?;
    let kernel = KernelSpec::dirichlet_between(&lo, &hi);
    let d = condenser.dim();
    let mut probes = Vec::with_capacity(cases.len());
    for (x, t, r) in cases {
        if !(*t > 0.0 && *r > 0.0) {
            return invalid(format!("heat bound needs t > 0 and r > 0, got t={t}, r={r}"));
        }
        let node = match condenser.nearest_node(x) {
            Some(f) if condenser.is_free(f) => f,
            _ => return invalid("probe is not in U \\ K"),
        };
        let p = condenser.lattice.point(node);
        let far = (0..condenser.k.len()).filter(|&f| condenser.k[f]).any(|f| {
            condenser
                .lattice
                .point(f)
                .iter()
                .zip(&p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                > r * r * (1.0 + 1e-12)
        });
        if far {
            return invalid(format!("K is not inside the ball of radius {r} about the probe"));
        }
        probes.push((node, p));
    }

    let cap = variational_capacity(condenser)?.energy;
    let op = FreeOperator::new(condenser);
    // Times within a factor CLUSTER of the shortest one in their group share one flow and are
    // rounded to a whole number of its steps.
    let mut times: Vec<f64> = cases.iter().flat_map(|(_, t, r)| [*t, r * r]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut snapshots: HashMap<u64, (f64, Vec<f64>)> = HashMap::new();
    let mut i = 0;
    while i < times.len() {
        let tau = times[i] / MIN_STEPS;
        let mut flow = HeatFlow::new(&op, tau)?;
        while i < times.len() && times[i] <= CLUSTER * tau * MIN_STEPS {
            let n = (times[i] / tau).round().max(1.0) as usize;
            flow.run(n - flow.state().step)?;
            snapshots.insert(times[i].to_bits(), (n as f64 * tau, op.scatter(&flow.state().temperature, true)));
            i += 1;
        }
    }

    let faces = condenser.boundary_faces();
    let mut out = Vec::with_capacity(cases.len());
    for ((_, t, r), (node, p)) in cases.iter().zip(probes) {
        let (t, psi_t) = &snapshots[&t.to_bits()];
        let t = *t;
        let psi = psi_t[node];
        let psi_r2 = snapshots[&(r * r).to_bits()].1[node];
        let (integral, small) = inf_kernel_integral(&kernel, &faces, &p, t)?;
        let small_time_fraction = if integral > 0.0 { small / integral } else { 0.0 };
        out.push(HeatBoundReport {
            probe: p,
            t,
            r: *r,
            capacity: cap,
            kernel_integral: integral,
            psi,
            margin: psi - cap * integral,
            psi_r2,
            proposition_ratio: cap / (psi_r2 * r.powi(d as i32 - 2)),
            small_time_fraction,
            tail_warning: small_time_fraction > 0.01,
        });
    }
    Ok(out)
}

/// Trapezoid rule in `ln s` on `[t 1e-8, t]`, plus `s_0 f(s_0)` for the first interval.
/// Returns the total and that first-interval estimate.
fn inf_kernel_integral(kernel: &KernelSpec, faces: &[Vec<f64>], x: &[f64], t: f64) -> Result<(f64, f64)> {
    if faces.is_empty() {
        return Ok((0.0, 0.0));
    }
    if !(t > 0.0) {
        return invalid(format!("heat kernel needs t > 0, got {t}"));
    }
    // face coordinates repeat along each axis, so the 1D factors are tabulated once per time
    let d = kernel.dim();
    let mut coords: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut slots: Vec<Vec<usize>> = Vec::with_capacity(d);
    for a in 0..d {
        let mut c: Vec<f64> = faces.iter().map(|y| y[a]).collect();
        c.sort_by(f64::total_cmp);
        c.dedup();
        slots.push(faces.iter().map(|y| c.partition_point(|&v| v < y[a])).collect());
        coords.push(c);
    }
    let step = DECADES * std::f64::consts::LN_10 / (TIME_NODES - 1) as f64;
    let mut table: Vec<Vec<f64>> = coords.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut prev: Option<f64> = None;
    let mut sum = 0.0;
    let mut small = 0.0;
    for j in 0..TIME_NODES {
        let s = t * (-(DECADES * std::f64::consts::LN_10) + j as f64 * step).exp();
        for a in 0..d {
            for (v, &y) in table[a].iter_mut().zip(&coords[a]) {
                *v = kernel.factor(a, s, x[a], y).value;
            }
        }
        let inf = (0..faces.len())
            .map(|i| (0..d).map(|a| table[a][slots[a][i]]).product::<f64>())
            .fold(f64::INFINITY, f64::min);
        let g = inf * s;
        match prev {
            None => small = g,
            Some(p) => sum += 0.5 * (p + g) * step,
        }
        prev = Some(g);
    }
    Ok((sum + small, small))
}
