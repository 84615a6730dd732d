use serde::{Deserialize, Serialize};

use super::oracle::FieldOracle;
use super::region::Region;
use crate::error::{invalid, LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientRatio {
    /// `r sup_{B(x, r/2)} |grad u| / sup_{B(x, r)} |u|`.
    pub ratio: f64,
    pub sup_gradient: f64,
    pub sup_value: f64,
}

pub fn gradient_check(oracle: &dyn FieldOracle, center: &[f64], r: f64) -> Result<GradientRatio> {
    if !(r > 0.0) {
        return invalid("radius must be positive");
    }
    if let Some(lambda) = oracle.eigenvalue() {
        if lambda > 0.0 && r >= lambda.powf(-0.5) {
            return invalid(format!("radius {r} is not below lambda^(-1/2) = {}", lambda.powf(-0.5)));
        }
    }
    let ball = Region::ball(center.to_vec(), r);
    if !ball.fits(oracle.geometry()) {
        return Err(LabError::OutsideGeometry(format!("ball of radius {r} around {center:?}")));
    }
    let sup_value = oracle.sup(&ball).value;
    if sup_value == 0.0 {
        return Err(LabError::VanishingInnerRegion);
    }
    let mut sup_gradient: f64 = 0.0;
    oracle.for_each_gradient_in(&ball.scaled(0.5), &mut |_, g| sup_gradient = sup_gradient.max(g))?;
    Ok(GradientRatio {
        ratio: r * sup_gradient / sup_value,
        sup_gradient,
        sup_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doubling::{GridOracle, ModeOracle};
    use crate::spectra::{sample_field, torus_eigenspace, Geometry, Phase};

    #[test]
    fn sine_wave_matches_closed_form() {
        let geo = Geometry::unit_torus(2);
        let basis = torus_eigenspace(&geo, 1).unwrap();
        let sin_x = basis
            .iter()
            .find(|b| b.terms[0].k == vec![1, 0] && b.terms[0].phase == Phase::Sin)
            .unwrap();
        let expected = 0.1 * 2.0 * std::f64::consts::PI / (0.2 * std::f64::consts::PI).sin();
        let o = ModeOracle::new(sin_x, 1e-4).unwrap();
        let got = gradient_check(&o, &[0.0, 0.0], 0.1).unwrap();
        assert!((got.ratio - expected).abs() < 1e-6, "{} vs {expected}", got.ratio);
        // grid samples with exact gradients agree when the grid hits the extremal points
        let grid = sample_field(sin_x, 200, true).unwrap();
        let got = gradient_check(&GridOracle::for_mode(&grid, sin_x), &[0.0, 0.0], 0.1).unwrap();
        assert!((got.ratio - expected).abs() < 1e-9);
    }

    #[test]
    fn constant_mode_ratio_is_zero() {
        let geo = Geometry::unit_torus(3);
        let c = &torus_eigenspace(&geo, 0).unwrap()[0];
        let o = ModeOracle::new(c, 0.01).unwrap();
        assert_eq!(gradient_check(&o, &[0.1, 0.2, 0.3], 0.2).unwrap().ratio, 0.0);
    }
}
