use serde::{Deserialize, Serialize};

use super::index::doubling_index;
use super::oracle::FieldOracle;
use super::region::Region;
use crate::error::{invalid, LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemezWitness {
    pub sup_b: f64,
    pub sup_e: f64,
    /// `|B| / |E|` by lattice point count.
    pub vol_ratio: f64,
    /// Doubling index of `B`.
    pub n: f64,
    /// Smallest `C >= 1` with `sup_B <= C sup_E (C vol_ratio)^{C N}`.
    pub implied_constant: f64,
}

/// One lattice sample inside the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSample {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Remez witness for the subset `E` of `ball` chosen by `select` from the ball's samples.
///
/// Needs `radius < lambda^{-1/2}` when the field is a mode.
pub fn remez_witness(oracle: &dyn FieldOracle, ball: &Region, select: impl FnOnce(&[BallSample]) -> Vec<bool>) -> Result<RemezWitness> {
    if let Some(lambda) = oracle.eigenvalue() {
        if lambda > 0.0 && ball.half_width() >= lambda.powf(-0.5) {
            return invalid(format!(
                "radius {} is not below lambda^(-1/2) = {}",
                ball.half_width(),
                lambda.powf(-0.5)
            ));
        }
    }
    let n = doubling_index(oracle, ball)?;
    let mut samples = Vec::new();
    oracle.for_each_in(ball, &mut |x, v| {
        samples.push(BallSample {
            point: x.to_vec(),
            value: v,
        })
    });
    let mask = select(&samples);
    if mask.len() != samples.len() {
        return invalid("subset mask length differs from the ball sample count");
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return invalid("subset E has no lattice points");
    }
    let sup_e = samples
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(s, _)| s.value.abs())
        .fold(0.0, f64::max);
    if sup_e == 0.0 {
        return Err(LabError::VanishingInnerRegion);
    }
    let sup_b = n.sup_inner;
    let vol_ratio = samples.len() as f64 / count as f64;
    let implied_constant = solve_constant(sup_b / sup_e, vol_ratio, n.value);
    Ok(RemezWitness {
        sup_b,
        sup_e,
        vol_ratio,
        n: n.value,
        implied_constant,
    })
}

/// Smallest `C >= 1` with `ratio <= C (C v)^{C N}`, by bisection on the increasing log form.
pub fn solve_constant(ratio: f64, v: f64, n: f64) -> f64 {
    let target = ratio.ln();
    let g = |c: f64| c.ln() + c * n.max(0.0) * (c * v).ln();
    if g(1.0) >= target {
        return 1.0;
    }
    let mut hi = 2.0;
    while g(hi) < target {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    hi
}

/// Samples with `|u|` at most the median of `|u|` over the ball.
pub fn lower_median_mask(samples: &[BallSample]) -> Vec<bool> {
    let mut a: Vec<f64> = samples.iter().map(|s| s.value.abs()).collect();
    a.sort_by(f64::total_cmp);
    let med = a[(a.len() - 1) / 2];
    samples.iter().map(|s| s.value.abs() <= med).collect()
}

/// Samples on the side `(x - center) . normal >= 0`.
pub fn half_space_mask<'a>(center: &'a [f64], normal: &'a [f64]) -> impl Fn(&[BallSample]) -> Vec<bool> + 'a {
    move |samples| {
        samples
            .iter()
            .map(|s| s.point.iter().zip(center).zip(normal).map(|((x, c), n)| (x - c) * n).sum::<f64>() >= 0.0)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doubling::{GridOracle, ModeOracle};
    use crate::spectra::{random_combination, torus_eigenspace, Geometry, ScalarGrid};

    #[test]
    fn whole_ball_gives_one() {
        let mode = random_combination(&torus_eigenspace(&Geometry::unit_torus(2), 25).unwrap(), 3).unwrap();
        let o = ModeOracle::new(&mode, 1e-3).unwrap();
        let w = remez_witness(&o, &Region::ball(vec![0.4, 0.4], 0.03), |s| vec![true; s.len()]).unwrap();
        assert_eq!(w.implied_constant, 1.0);
        assert_eq!(w.vol_ratio, 1.0);
    }

    #[test]
    fn constant_field_half_ball_gives_one() {
        let g = ScalarGrid::from_fn(&Geometry::unit_torus(2), 128, "const", |_| 1.0).unwrap();
        let o = GridOracle::new(&g);
        let c = [0.5, 0.5];
        let w = remez_witness(&o, &Region::ball(c.to_vec(), 0.2), half_space_mask(&c, &[1.0, 0.0])).unwrap();
        assert_eq!(w.implied_constant, 1.0);
        assert!((w.vol_ratio - 2.0).abs() < 0.05);
    }

    #[test]
    fn constant_solves_its_equation() {
        for (ratio, v, n) in [(5.0, 2.0, 1.5), (100.0, 4.0, 3.0), (2.0, 1.0, 0.0)] {
            let c = solve_constant(ratio, v, n);
            let rhs = c * (c * v).powf(c * n);
            assert!((rhs - ratio).abs() < 1e-9 * ratio, "{ratio} {v} {n}: {c} -> {rhs}");
        }
    }

    #[test]
    fn scale_condition_is_enforced() {
        let mode = random_combination(&torus_eigenspace(&Geometry::unit_torus(2), 25).unwrap(), 3).unwrap();
        let o = ModeOracle::new(&mode, 1e-3).unwrap();
        assert!(remez_witness(&o, &Region::ball(vec![0.5, 0.5], 0.1), lower_median_mask).is_err());
    }
}
