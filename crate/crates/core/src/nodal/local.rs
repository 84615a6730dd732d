use super::labeling::DomainLabeling;
use super::union_find::UnionFind;
use crate::error::Result;
use crate::spectra::{EigenMode, ScalarGrid, TensorLattice};

/// A nodal domain resolved on a fine local lattice by analytic evaluation.
///
/// Values are multiplied by the domain sign so the domain is where they are positive.
#[derive(Debug, Clone)]
pub struct LocalDomain {
    pub lattice: TensorLattice,
    pub values: Vec<f64>,
    pub in_domain: Vec<bool>,
}

/// Evaluates `mode` on `lattice` and decides which points belong to domain `id`.
///
/// Positive local components are matched to the global labeling by majority vote over
/// the grid samples nearest to their points. The component holding the domain's argmax
/// always belongs to the domain. Points outside a box geometry never belong.
pub fn local_domain(
    mode: &EigenMode,
    grid: &ScalarGrid,
    labeling: &DomainLabeling,
    id: u32,
    lattice: TensorLattice,
) -> Result<LocalDomain> {
    labeling.check_id(id)?;
    let sign = labeling.sign(id) as f64;
    let (raw, _) = mode.eval_lattice(&lattice, false);
    let values: Vec<f64> = raw.into_iter().map(|v| sign * v).collect();
    let n = lattice.len();
    let geometry = &grid.geometry;

    let inside = |p: &[f64]| geometry.is_torus() || p.iter().zip(&geometry.sides).all(|(&x, &l)| x >= -1e-12 && x <= l + 1e-12);
    let positive: Vec<bool> = (0..n)
        .map(|f| values[f] > labeling.zero_threshold && inside(&lattice.point(f)))
        .collect();

    let strides = lattice.strides();
    let mut uf = UnionFind::new(n);
    for f in 0..n {
        if !positive[f] {
            continue;
        }
        for a in 0..lattice.dim() {
            let i = (f / strides[a]) % lattice.shape[a];
            if i + 1 < lattice.shape[a] && positive[f + strides[a]] {
                uf.union(f, f + strides[a]);
            }
        }
    }

    // votes[root] = (for, against)
    let mut votes = std::collections::HashMap::<usize, (u32, u32)>::new();
    for f in 0..n {
        if !positive[f] {
            continue;
        }
        let g = grid.nearest_index(&lattice.point(f));
        let l = labeling.labels[g];
        let e = votes.entry(uf.find(f)).or_insert((0, 0));
        if l == id {
            e.0 += 1;
        } else if l != 0 && labeling.sign(l) == labeling.sign(id) {
            e.1 += 1;
        }
    }
    let anchor = grid.point(labeling.argmax_of(id));
    let anchor_root = nearest_lattice_index(&lattice, &anchor)
        .filter(|&f| positive[f])
        .map(|f| uf.find(f));

    let in_domain = (0..n)
        .map(|f| {
            if !positive[f] {
                return false;
            }
            let r = uf.find(f);
            if Some(r) == anchor_root {
                return true;
            }
            let (yes, no) = votes[&r];
            yes > no
        })
        .collect();
    Ok(LocalDomain {
        lattice,
        values,
        in_domain,
    })
}

/// Lattice cube of half-width `half` (rounded up to whole steps) centered at a lattice point `center`.
pub fn centered_lattice(center: &[f64], half: f64, spacing: f64) -> TensorLattice {
    let k = (half / spacing - 1e-9).ceil().max(0.0) as usize;
    TensorLattice::new(
        center.iter().map(|&c| c - k as f64 * spacing).collect(),
        vec![spacing; center.len()],
        vec![2 * k + 1; center.len()],
    )
}

fn nearest_lattice_index(lattice: &TensorLattice, x: &[f64]) -> Option<usize> {
    let mut flat = 0;
    for a in 0..lattice.dim() {
        let i = ((x[a] - lattice.origin[a]) / lattice.spacing[a]).round();
        if i < 0.0 || i >= lattice.shape[a] as f64 {
            return None;
        }
        flat = flat * lattice.shape[a] + i as usize;
    }
    Some(flat)
}
