use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    DirichletBox,
    FlatTorus,
}

/// A flat model geometry: the box `[0, L_1] x ... x [0, L_d]`, either with
/// Dirichlet walls or with opposite faces identified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub kind: GeometryKind,
    #[serde(rename = "d")]
    pub dim: usize,
    pub sides: Vec<f64>,
}

impl Geometry {
    pub fn new(kind: GeometryKind, dim: usize, sides: Vec<f64>) -> Result<Self> {
        let g = Geometry { kind, dim, sides };
        g.validate()?;
        Ok(g)
    }

    pub fn unit_box(dim: usize) -> Self {
        Geometry {
            kind: GeometryKind::DirichletBox,
            dim,
            sides: vec![1.0; dim],
        }
    }

    pub fn unit_torus(dim: usize) -> Self {
        Geometry {
            kind: GeometryKind::FlatTorus,
            dim,
            sides: vec![1.0; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.dim) {
            return invalid(format!("dimension must be 2 or 3, got {}", self.dim));
        }
        if self.sides.len() != self.dim {
            return invalid(format!("expected {} side lengths, got {}", self.dim, self.sides.len()));
        }
        if self.sides.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return invalid("side lengths must be positive and finite");
        }
        Ok(())
    }

    pub fn is_torus(&self) -> bool {
        self.kind == GeometryKind::FlatTorus
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    /// Stand-in for the injectivity radius: half the smallest side.
    pub fn r0(&self) -> f64 {
        0.5 * self.sides.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn has_unit_sides(&self) -> bool {
        self.sides.iter().all(|&l| l == 1.0)
    }

    /// Componentwise displacement `b - a`, taking the shortest representative on a torus.
    pub fn displacement(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .zip(&self.sides)
            .map(|((&ai, &bi), &l)| {
                let mut d = bi - ai;
                if self.is_torus() {
                    d -= l * (d / l).round();
                }
                d
            })
            .collect()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.displacement(a, b).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// Whether the closed ball `B(center, radius)` is usable as a whole: inside the
    /// box, or not wrapping onto itself on the torus.
    pub fn ball_fits(&self, center: &[f64], radius: f64) -> bool {
        match self.kind {
            GeometryKind::DirichletBox => center
                .iter()
                .zip(&self.sides)
                .all(|(&c, &l)| c - radius >= -1e-12 && c + radius <= l + 1e-12),
            GeometryKind::FlatTorus => radius <= self.r0() + 1e-12,
        }
    }

    /// Same as [`ball_fits`](Self::ball_fits) for the axis-aligned cube of the given half side.
    pub fn cube_fits(&self, center: &[f64], half_side: f64) -> bool {
        match self.kind {
            GeometryKind::DirichletBox => self.ball_fits(center, half_side),
            GeometryKind::FlatTorus => half_side <= self.r0() + 1e-12,
        }
    }
}
