use serde::{Deserialize, Serialize};

use super::index::log_error;
use crate::error::{invalid, LabError, Result};
use crate::nodal::{local_domain, DomainLabeling};
use crate::spectra::{advance, EigenMode, ScalarGrid, TensorLattice};

/// Lattice points per subcube side (spacing `s(q) / 4`).
pub const DEFAULT_POINTS_PER_SIDE: usize = 4;

/// How `sup_{q0} |u|` compares with `sup_Omega u`, up to the certified sup error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// `sup_{q0} |u| > sup_Omega u`: some nearby subcube sees a larger value.
    Strict,
    /// Equal within the sup error (the maximal subcube is essentially the one at `x_max`).
    Attained,
    /// No subcube of the block reaches `sup_Omega u`.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainWitnesses {
    pub c2_fit: f64,
    pub c3_fit: f64,
    pub growth_verified: bool,
    /// `max N / sqrt(lambda)` over the chain.
    pub df_ratio: f64,
    /// `sup_{(2A'+1) q_c} |u| / sup_Omega u`.
    pub sup_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub lambda: f64,
    pub domain_id: u32,
    pub x_max: Vec<f64>,
    pub delta: f64,
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "A_prime")]
    pub a_prime: usize,
    pub subcube_side: f64,
    pub lattice_spacing: f64,
    pub q0: Vec<usize>,
    /// `q_1, q_2, ...`; shorter than `A'` when truncated.
    pub chain: Vec<Vec<usize>>,
    /// `N(q_0), N(q_1), ...` for every chain cube whose double stays in `Q_delta`.
    #[serde(rename = "N_sequence")]
    pub n_sequence: Vec<f64>,
    /// `sup_{q_k} |u|` for `q_0` and every chain cube.
    pub chain_sups: Vec<f64>,
    /// Per subcube (row-major over the `A^d` multi-indices) fraction not in the domain.
    pub volume_fractions: Vec<f64>,
    pub lemma_premise_holds: bool,
    pub sup_omega: f64,
    pub hypothesis: Hypothesis,
    /// `log2(sup_{q_k} / sup_{q_0}) - sum_{j<k} N(q_j)` for `k = 1..`.
    pub telescoping_slack: Vec<f64>,
    /// Certified absolute error of every lattice sup.
    pub epsilon_abs: f64,
    /// `2 log2(1 + epsilon_abs / min chain sup)`.
    pub epsilon_grid: f64,
    pub telescoping_holds: bool,
    pub witnesses: ChainWitnesses,
    pub truncated: bool,
}

pub fn run_chain(
    mode: &EigenMode,
    grid: &ScalarGrid,
    labeling: &DomainLabeling,
    domain_id: u32,
    delta: f64,
    a: usize,
) -> Result<ChainReport> {
    run_chain_with(mode, grid, labeling, domain_id, delta, a, DEFAULT_POINTS_PER_SIDE)
}

/// Partitions `Q_delta` around the domain's max point into `A^d` subcubes, picks the
/// maximal subcube `q0` of `(2A'+1) q_c` and follows the argmax chain `x_{k+1}` of `2 q_k`.
pub fn run_chain_with(
    mode: &EigenMode,
    grid: &ScalarGrid,
    labeling: &DomainLabeling,
    domain_id: u32,
    delta: f64,
    a: usize,
    points_per_side: usize,
) -> Result<ChainReport> {
    labeling.check_id(domain_id)?;
    if a < 5 || a % 4 != 1 {
        return invalid(format!("A = {a} is not of the form 4A'+1 with A' >= 1"));
    }
    if points_per_side < 2 || points_per_side % 2 != 0 {
        return invalid("points per subcube side must be even and at least 2");
    }
    if !(delta > 0.0) || !(mode.eigenvalue > 0.0) {
        return invalid("delta and lambda must be positive");
    }
    let d = grid.dim();
    let a_prime = (a - 1) / 4;
    let lambda = mode.eigenvalue;
    let x_max = grid.point(labeling.argmax_of(domain_id));
    let half = delta / lambda.sqrt() / (d as f64).sqrt();
    if !grid.geometry.cube_fits(&x_max, half) {
        return Err(LabError::OutsideGeometry(format!("Q_delta of half side {half} around {x_max:?}")));
    }
    let m = points_per_side;
    let side = 2.0 * half / a as f64;
    let sigma = side / m as f64;
    let p = a * m + 1;
    let lattice = TensorLattice::new(x_max.iter().map(|c| c - half).collect(), vec![sigma; d], vec![p; d]);
    let local = local_domain(mode, grid, labeling, domain_id, lattice)?;
    let abs: Vec<f64> = local.values.iter().map(|v| v.abs()).collect();
    let lat = &local.lattice;
    let strides = lat.strides();

    // sup and argmax of |u| over the lattice box [lo, hi] (inclusive, per axis)
    let box_sup = |lo: &[usize], hi: &[usize]| -> (f64, usize) {
        let shape: Vec<usize> = lo.iter().zip(hi).map(|(l, h)| h - l + 1).collect();
        let mut off = vec![0usize; d];
        let mut best = (-1.0, 0);
        loop {
            let flat: usize = (0..d).map(|k| (lo[k] + off[k]) * strides[k]).sum();
            if abs[flat] > best.0 {
                best = (abs[flat], flat);
            }
            if !advance(&mut off, &shape) {
                return best;
            }
        }
    };
    let cube_bounds =
        |q: &[usize]| -> (Vec<usize>, Vec<usize>) { (q.iter().map(|&j| j * m).collect(), q.iter().map(|&j| j * m + m).collect()) };
    // 2q stays inside Q_delta exactly when q is not on the outer layer
    let double_bounds = |q: &[usize]| -> Option<(Vec<usize>, Vec<usize>)> {
        if q.iter().any(|&j| j == 0 || j + 1 == a) {
            return None;
        }
        Some((
            q.iter().map(|&j| j * m - m / 2).collect(),
            q.iter().map(|&j| j * m + m + m / 2).collect(),
        ))
    };
    let containing = |flat: usize| -> Vec<usize> { (0..d).map(|k| ((flat / strides[k]) % p / m).min(a - 1)).collect() };

    // fraction of each subcube's lattice points outside the domain
    let sub_shape = vec![a; d];
    let mut volume_fractions = Vec::with_capacity(a.pow(d as u32));
    let mut q = vec![0usize; d];
    loop {
        let (lo, hi) = cube_bounds(&q);
        let shape: Vec<usize> = vec![m + 1; d];
        let mut off = vec![0usize; d];
        let (mut out, mut total) = (0usize, 0usize);
        loop {
            let flat: usize = (0..d).map(|k| (lo[k] + off[k]) * strides[k]).sum();
            total += 1;
            if !local.in_domain[flat] {
                out += 1;
            }
            if !advance(&mut off, &shape) {
                break;
            }
        }
        debug_assert_eq!(hi[0] - lo[0], m);
        volume_fractions.push(out as f64 / total as f64);
        if !advance(&mut q, &sub_shape) {
            break;
        }
    }
    let lemma_premise_holds = volume_fractions.iter().all(|&v| v <= 0.5);

    // q0: maximal sup among the subcubes of (2A'+1) q_c, i.e. indices A'..=3A'
    let block_shape = vec![2 * a_prime + 1; d];
    let mut off = vec![0usize; d];
    let mut q0 = vec![a_prime; d];
    let mut sup_block = -1.0;
    loop {
        let cand: Vec<usize> = off.iter().map(|o| o + a_prime).collect();
        let (lo, hi) = cube_bounds(&cand);
        let (s, _) = box_sup(&lo, &hi);
        if s > sup_block {
            sup_block = s;
            q0 = cand;
        }
        if !advance(&mut off, &block_shape) {
            break;
        }
    }
    let sup_omega = local
        .in_domain
        .iter()
        .zip(&abs)
        .filter(|(&inside, _)| inside)
        .map(|(_, &v)| v)
        .fold(labeling.max_abs_of(domain_id), f64::max);

    // certified sup error on lattice-aligned cubes: |Hess u| <= lambda sum |c|
    let hessian_bound = lambda * mode.terms.iter().map(|t| t.coeff.abs()).sum::<f64>();
    let epsilon_abs = hessian_bound * d as f64 * sigma * sigma / 8.0;

    let hypothesis = if sup_block > sup_omega + epsilon_abs {
        Hypothesis::Strict
    } else if sup_block < sup_omega - epsilon_abs {
        Hypothesis::Vacuous
    } else {
        Hypothesis::Attained
    };

    let mut chain = Vec::new();
    let mut n_sequence = Vec::new();
    let mut chain_sups = vec![sup_block];
    let mut truncated = false;
    let mut current = q0.clone();
    let mut current_sup = sup_block;
    for _ in 0..=a_prime {
        let Some((lo, hi)) = double_bounds(&current) else {
            truncated = true;
            break;
        };
        let (sup2, at) = box_sup(&lo, &hi);
        n_sequence.push(index_value(sup2, current_sup));
        if chain.len() == a_prime {
            break;
        }
        let next = containing(at);
        let (lo, hi) = cube_bounds(&next);
        current_sup = box_sup(&lo, &hi).0;
        chain_sups.push(current_sup);
        chain.push(next.clone());
        current = next;
    }

    let mut telescoping_slack = Vec::with_capacity(chain.len());
    let mut partial = 0.0;
    for k in 1..=chain.len() {
        partial += n_sequence[k - 1];
        telescoping_slack.push((chain_sups[k] / chain_sups[0]).log2() - partial);
    }
    let min_sup = chain_sups.iter().cloned().fold(f64::INFINITY, f64::min);
    let epsilon_grid = 2.0 * log_error(epsilon_abs, min_sup);
    let telescoping_holds = telescoping_slack.iter().all(|&s| s >= -(a_prime as f64) * epsilon_grid);

    let sup_ratio = sup_block / sup_omega;
    let (c2_fit, c3_fit, slope) = fit_growth(&n_sequence);
    let growth_verified = lemma_premise_holds && hypothesis != Hypothesis::Vacuous && sup_ratio > 1.0 && slope.is_some_and(|s| s > 0.0);
    let n_max = n_sequence.iter().cloned().fold(0.0, f64::max);

    Ok(ChainReport {
        lambda,
        domain_id,
        x_max,
        delta,
        a,
        a_prime,
        subcube_side: side,
        lattice_spacing: sigma,
        q0,
        chain,
        n_sequence,
        chain_sups,
        volume_fractions,
        lemma_premise_holds,
        sup_omega,
        hypothesis,
        telescoping_slack,
        epsilon_abs,
        epsilon_grid,
        telescoping_holds,
        witnesses: ChainWitnesses {
            c2_fit,
            c3_fit,
            growth_verified,
            df_ratio: n_max / lambda.sqrt(),
            sup_ratio,
        },
        truncated,
    })
}

fn index_value(sup_outer: f64, sup_inner: f64) -> f64 {
    if sup_inner > 0.0 {
        (sup_outer / sup_inner).log2()
    } else {
        f64::INFINITY
    }
}

/// Fits `N_k >= c2 S_k - c3` with `S_k = sum_{j<k} N_j`: `c2` is the least-squares slope
/// clamped at zero and `c3` the smallest offset making every point satisfy it.
/// Also returns the raw slope when at least two distinct `S_k` exist.
pub fn fit_growth(n: &[f64]) -> (f64, f64, Option<f64>) {
    let mut pts = Vec::new();
    let mut s = 0.0;
    for k in 1..n.len() {
        s += n[k - 1];
        if n[k].is_finite() && s.is_finite() {
            pts.push((s, n[k]));
        }
    }
    let slope = if pts.len() >= 2 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    } else {
        None
    };
    let c2 = slope.unwrap_or(0.0).max(0.0);
    let c3 = pts.iter().map(|&(s, nk)| c2 * s - nk).fold(0.0, f64::max);
    (c2, c3, slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodal::{label_nodal_domains, DEFAULT_ZERO_TOLERANCE};
    use crate::spectra::{box_mode, random_combination, sample_field, torus_eigenspace, Geometry};

    #[test]
    fn first_box_mode_cube_sits_in_its_domain() {
        let mode = box_mode(&Geometry::unit_box(2), &[1, 1]).unwrap();
        let grid = sample_field(&mode, 64, false).unwrap();
        let lab = label_nodal_domains(&grid, DEFAULT_ZERO_TOLERANCE).unwrap();
        let r = run_chain(&mode, &grid, &lab, 1, 0.5, 5).unwrap();
        assert!(r.volume_fractions.iter().all(|&v| v == 0.0));
        assert_eq!(r.volume_fractions.len(), 25);
        assert!(r.witnesses.sup_ratio <= 1.0 + 1e-9);
        assert_eq!(r.q0, vec![2, 2]);
        assert_eq!(r.hypothesis, Hypothesis::Attained);
    }

    #[test]
    fn rejects_bad_partitions() {
        let mode = box_mode(&Geometry::unit_box(2), &[1, 1]).unwrap();
        let grid = sample_field(&mode, 64, false).unwrap();
        let lab = label_nodal_domains(&grid, DEFAULT_ZERO_TOLERANCE).unwrap();
        assert!(matches!(
            run_chain(&mode, &grid, &lab, 1, 0.5, 7),
            Err(LabError::InvalidArgument(_))
        ));
        assert!(matches!(
            run_chain(&mode, &grid, &lab, 1, 4.0, 5),
            Err(LabError::OutsideGeometry(_))
        ));
    }

    #[test]
    fn telescoping_holds_on_random_fields() {
        let geo = Geometry::unit_torus(2);
        let mode = random_combination(&torus_eigenspace(&geo, 25).unwrap(), 2).unwrap();
        let grid = sample_field(&mode, 96, false).unwrap();
        let lab = label_nodal_domains(&grid, DEFAULT_ZERO_TOLERANCE).unwrap();
        for id in lab.ids().take(10) {
            for a in [5, 9, 13] {
                let r = run_chain(&mode, &grid, &lab, id, 0.8, a).unwrap();
                assert!(r.telescoping_holds, "{:?}", r.telescoping_slack);
                assert!(r.chain.len() <= r.a_prime);
                assert!(r.witnesses.sup_ratio >= 1.0 - 1e-12);
                for s in &r.telescoping_slack {
                    assert!(*s >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn growth_fit_bounds_every_point() {
        let n = [0.5, 0.7, 1.5, 2.0, 4.5];
        let (c2, c3, slope) = fit_growth(&n);
        assert!(slope.unwrap() > 0.0 && c2 > 0.0);
        let mut s = 0.0;
        for k in 1..n.len() {
            s += n[k - 1];
            assert!(n[k] >= c2 * s - c3 - 1e-12);
        }
    }
}
