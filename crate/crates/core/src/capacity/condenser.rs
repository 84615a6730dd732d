use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectra::{advance, unflatten, TensorLattice};

/// Nodes kept between `K` and the complement of `U`.
pub const MIN_SEPARATION: usize = 2;

/// Nodes of padding between the bounding box of `U` and the lattice edge.
const PAD: i64 = 2;

/// Simple solids used to build condenser masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Cube with the corner `x_0 > c_0, x_1 > c_1` removed.
    LShape {
        center: Vec<f64>,
        half_side: f64,
    },
    Union {
        parts: Vec<Shape>,
    },
}

impl Shape {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Shape::Ball { center, radius }
    }

    pub fn cube(center: &[f64], half_side: f64) -> Self {
        Shape::Box {
            lower: center.iter().map(|c| c - half_side).collect(),
            upper: center.iter().map(|c| c + half_side).collect(),
        }
    }

    /// Thin along the last axis.
    pub fn slab(center: &[f64], half_side: f64, half_thickness: f64) -> Self {
        let d = center.len();
        let half = |a: usize| if a + 1 == d { half_thickness } else { half_side };
        Shape::Box {
            lower: (0..d).map(|a| center[a] - half(a)).collect(),
            upper: (0..d).map(|a| center[a] + half(a)).collect(),
        }
    }

    pub fn l_shape(center: Vec<f64>, half_side: f64) -> Self {
        Shape::LShape { center, half_side }
    }

    pub fn union(parts: Vec<Shape>) -> Self {
        Shape::Union { parts }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Ball { .. } => "ball",
            Shape::Box { .. } => "box",
            Shape::LShape { .. } => "l_shape",
            Shape::Union { .. } => "union",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball { center, .. } | Shape::LShape { center, .. } => center.len(),
            Shape::Box { lower, .. } => lower.len(),
            Shape::Union { parts } => parts.first().map_or(0, Shape::dim),
        }
    }

    /// Closed membership, with a tiny slack so nodes on the boundary count.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.test(x, 1e-12)
    }

    /// Open membership: nodes on the boundary do not count.
    pub fn contains_open(&self, x: &[f64]) -> bool {
        self.test(x, -1e-12)
    }

    fn test(&self, x: &[f64], slack: f64) -> bool {
        match self {
            Shape::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= radius * radius * (1.0 + 2.0 * slack)
            }
            Shape::Box { lower, upper } => x.iter().zip(lower.iter().zip(upper)).all(|(&v, (&lo, &hi))| {
                let s = slack * (hi - lo).abs().max(1.0);
                v >= lo - s && v <= hi + s
            }),
            Shape::LShape { center, half_side } => {
                let s = slack * half_side.max(1.0);
                let in_cube = x.iter().zip(center).all(|(a, c)| (a - c).abs() <= half_side + s);
                let in_notch = x.len() >= 2 && x[0] > center[0] - s && x[1] > center[1] - s;
                in_cube && !in_notch
            }
            Shape::Union { parts } => parts.iter().any(|p| p.test(x, slack)),
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Shape::Box { lower, upper } => (lower.clone(), upper.clone()),
            Shape::LShape { center, half_side } => (
                center.iter().map(|c| c - half_side).collect(),
                center.iter().map(|c| c + half_side).collect(),
            ),
            Shape::Union { parts } => {
                let d = self.dim();
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for p in parts {
                    let (l, h) = p.bounds();
                    for a in 0..d {
                        lo[a] = lo[a].min(l[a]);
                        hi[a] = hi[a].max(h[a]);
                    }
                }
                (lo, hi)
            }
        }
    }
}

/// A condenser `(K, U)` as node masks on a uniform lattice.
///
/// Nodes of `K` hold temperature 1, nodes outside `U` hold 0, and the nodes of `U \ K`
/// are free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condenser {
    pub lattice: TensorLattice,
    pub k: Vec<bool>,
    pub u: Vec<bool>,
}

impl Condenser {
    /// Checks the masks: `U` nonempty and away from the lattice edge, `K` at least
    /// [`MIN_SEPARATION`] nodes inside `U`, and `K` nonempty unless `allow_empty_k`.
    pub fn new(lattice: TensorLattice, k: Vec<bool>, u: Vec<bool>, allow_empty_k: bool) -> Result<Self> {
        let n = lattice.len();
        if k.len() != n || u.len() != n {
            return invalid("condenser masks do not match the lattice");
        }
        let h = lattice.spacing[0];
        if !(h > 0.0) || lattice.spacing.iter().any(|&s| (s - h).abs() > 1e-12 * h) {
            return invalid("condenser lattice must have one positive spacing on every axis");
        }
        if !u.iter().any(|&b| b) {
            return invalid("condenser U is empty");
        }
        if !allow_empty_k && !k.iter().any(|&b| b) {
            return invalid("condenser K is empty");
        }
        let c = Condenser { lattice, k, u };
        let shape = &c.lattice.shape;
        let d = shape.len();
        let strides = c.lattice.strides();
        for f in 0..n {
            let idx = unflatten(f, shape);
            if c.u[f] && idx.iter().zip(shape).any(|(&i, &m)| i == 0 || i + 1 == m) {
                return invalid("condenser U touches the lattice edge");
            }
            if !c.k[f] {
                continue;
            }
            if !c.u[f] {
                return invalid("condenser K is not inside U");
            }
            // every node within MIN_SEPARATION steps (sup norm) must lie in U
            let s = MIN_SEPARATION as i64;
            let window = vec![2 * MIN_SEPARATION + 1; d];
            let mut off = vec![0usize; d];
            loop {
                let mut g = f as i64;
                for a in 0..d {
                    let i = idx[a] as i64 + off[a] as i64 - s;
                    g = if (0..shape[a] as i64).contains(&i) {
                        g + (off[a] as i64 - s) * strides[a] as i64
                    } else {
                        -1
                    };
                    if g < 0 {
                        break;
                    }
                }
                if g < 0 || !c.u[g as usize] {
                    return invalid(format!("condenser K is closer than {MIN_SEPARATION} nodes to the boundary of U"));
                }
                if !advance(&mut off, &window) {
                    break;
                }
            }
        }
        Ok(c)
    }

    /// Masks of `k` (closed) and `u` (open) on the lattice of spacing `h` aligned with the
    /// integer multiples of `h`, covering the bounding box of `u` plus a margin.
    pub fn from_shapes(k: &Shape, u: &Shape, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return invalid("condenser spacing must be positive");
        }
        if k.dim() != u.dim() || u.dim() == 0 {
            return invalid("condenser shapes differ in dimension");
        }
        let (lo, hi) = u.bounds();
        let first: Vec<i64> = lo.iter().map(|&v| (v / h).floor() as i64 - PAD).collect();
        let last: Vec<i64> = hi.iter().map(|&v| (v / h).ceil() as i64 + PAD).collect();
        let lattice = TensorLattice::new(
            first.iter().map(|&i| i as f64 * h).collect(),
            vec![h; lo.len()],
            first.iter().zip(&last).map(|(&a, &b)| (b - a + 1) as usize).collect(),
        );
        let mut km = Vec::with_capacity(lattice.len());
        let mut um = Vec::with_capacity(lattice.len());
        for f in 0..lattice.len() {
            let p = lattice.point(f);
            let inu = u.contains_open(&p);
            um.push(inu);
            km.push(inu && k.contains(&p));
        }
        Self::new(lattice, km, um, false)
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn spacing(&self) -> f64 {
        self.lattice.spacing[0]
    }

    pub fn is_free(&self, f: usize) -> bool {
        self.u[f] && !self.k[f]
    }

    pub fn k_count(&self) -> usize {
        self.k.iter().filter(|&&b| b).count()
    }

    /// `#K * h^d`.
    pub fn k_volume(&self) -> f64 {
        self.k_count() as f64 * self.lattice.cell_volume()
    }

    /// Lattice node nearest to `x`, if inside the lattice.
    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for a in 0..self.dim() {
            let i = ((x[a] - self.lattice.origin[a]) / self.lattice.spacing[a]).round();
            if i < 0.0 || i >= self.lattice.shape[a] as f64 {
                return None;
            }
            flat = flat * self.lattice.shape[a] + i as usize;
        }
        Some(flat)
    }

    /// Midpoints of the lattice edges joining a `K` node to a non-`K` node.
    pub fn boundary_faces(&self) -> Vec<Vec<f64>> {
        let strides = self.lattice.strides();
        let h = self.spacing();
        let mut out = Vec::new();
        for f in (0..self.k.len()).filter(|&f| self.k[f]) {
            let p = self.lattice.point(f);
            for a in 0..self.dim() {
                for dir in [-1.0, 1.0] {
                    let g = if dir < 0.0 { f - strides[a] } else { f + strides[a] };
                    if !self.k[g] {
                        let mut m = p.clone();
                        m[a] += 0.5 * dir * h;
                        out.push(m);
                    }
                }
            }
        }
        out
    }
}

/// Balls of radii `a < b` about the center of the unit box, on the lattice of spacing `1/resolution`.
pub fn concentric_spheres(dim: usize, a: f64, b: f64, resolution: usize) -> Result<Condenser> {
    if !(0.0 < a && a < b && b < 0.5) {
        return invalid(format!("concentric spheres need 0 < a < b < 1/2, got a={a}, b={b}"));
    }
    let c = vec![0.5; dim];
    Condenser::from_shapes(&Shape::ball(c.clone(), a), &Shape::ball(c, b), 1.0 / resolution as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_nest() {
        let c = concentric_spheres(2, 0.1, 0.3, 64).unwrap();
        assert!(c.k.iter().zip(&c.u).all(|(&k, &u)| !k || u));
        let area = c.k_volume();
        assert!((area - std::f64::consts::PI * 0.01).abs() < 0.1 * area);
        assert!(!c.boundary_faces().is_empty());
    }

    #[test]
    fn rejects_k_near_boundary() {
        let u = Shape::cube(&[0.5, 0.5], 0.3);
        let err = Condenser::from_shapes(&Shape::cube(&[0.5, 0.5], 0.29), &u, 0.02).unwrap_err();
        assert!(err.to_string().contains("closer than"), "{err}");
        assert!(Condenser::from_shapes(&Shape::cube(&[0.5, 0.5], 0.2), &u, 0.02).is_ok());
        assert!(Condenser::from_shapes(&Shape::ball(vec![0.0, 0.0], 0.01), &u, 0.02).is_err());
    }

    #[test]
    fn shapes_contain_their_centers() {
        let c = [0.5, 0.5, 0.5];
        assert!(Shape::slab(&c, 0.2, 0.05).contains(&c));
        assert!(!Shape::slab(&c, 0.2, 0.05).contains(&[0.5, 0.5, 0.6]));
        let l = Shape::l_shape(c.to_vec(), 0.2);
        assert!(l.contains(&[0.4, 0.4, 0.5]) && !l.contains(&[0.6, 0.6, 0.5]));
        let two = Shape::union(vec![Shape::ball(vec![0.3; 3], 0.05), Shape::ball(vec![0.7; 3], 0.05)]);
        assert!(two.contains(&[0.3; 3]) && !two.contains(&c));
        assert_eq!(two.bounds(), (vec![0.25; 3], vec![0.75; 3]));
    }
}
