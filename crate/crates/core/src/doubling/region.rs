use serde::{Deserialize, Serialize};

use crate::spectra::Geometry;

/// A ball or an axis-aligned cube. Coordinates are unwrapped: on a torus the region
/// is the set of points near `center` in the covering space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Cube { center: Vec<f64>, half_side: f64 },
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn cube(center: Vec<f64>, half_side: f64) -> Self {
        Region::Cube { center, half_side }
    }

    pub fn center(&self) -> &[f64] {
        match self {
            Region::Ball { center, .. } | Region::Cube { center, .. } => center,
        }
    }

    /// Radius of a ball, half side of a cube.
    pub fn half_width(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => *radius,
            Region::Cube { half_side, .. } => *half_side,
        }
    }

    pub fn dim(&self) -> usize {
        self.center().len()
    }

    /// Concentric copy with the half width multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Region::Ball { center, radius } => Region::Ball {
                center: center.clone(),
                radius: radius * factor,
            },
            Region::Cube { center, half_side } => Region::Cube {
                center: center.clone(),
                half_side: half_side * factor,
            },
        }
    }

    /// Closed membership, with a relative slack so lattice points on the boundary count.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= radius * radius * (1.0 + 1e-12)
            }
            Region::Cube { center, half_side } => x.iter().zip(center).all(|(a, b)| (a - b).abs() <= half_side * (1.0 + 1e-12)),
        }
    }

    pub fn fits(&self, geometry: &Geometry) -> bool {
        match self {
            Region::Ball { center, radius } => geometry.ball_fits(center, *radius),
            Region::Cube { center, half_side } => geometry.cube_fits(center, *half_side),
        }
    }

    pub fn volume(&self) -> f64 {
        let d = self.dim() as i32;
        match self {
            Region::Ball { radius, .. } => {
                let unit = match d {
                    1 => 2.0,
                    2 => std::f64::consts::PI,
                    3 => 4.0 * std::f64::consts::PI / 3.0,
                    _ => f64::NAN,
                };
                unit * radius.powi(d)
            }
            Region::Cube { half_side, .. } => (2.0 * half_side).powi(d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_points_are_inside() {
        let b = Region::ball(vec![0.5, 0.5], 0.2);
        assert!(b.contains(&[0.7, 0.5]));
        assert!(!b.contains(&[0.7, 0.51]));
        let c = Region::cube(vec![0.0, 0.0], 0.1);
        assert!(c.contains(&[0.1, -0.1]));
        assert!(!c.contains(&[0.1000001, 0.0]));
        assert_eq!(c.scaled(2.0).half_width(), 0.2);
    }

    #[test]
    fn doubled_ball_must_fit_the_box() {
        let g = Geometry::unit_box(2);
        let b = Region::ball(vec![0.5, 0.5], 0.2);
        assert!(b.scaled(2.0).fits(&g));
        assert!(!b.scaled(3.0).fits(&g));
        let t = Geometry::unit_torus(2);
        assert!(Region::ball(vec![0.0, 0.0], 0.25).scaled(2.0).fits(&t));
        assert!(!Region::ball(vec![0.0, 0.0], 0.3).scaled(2.0).fits(&t));
    }
}
