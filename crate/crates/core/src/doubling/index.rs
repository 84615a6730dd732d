use serde::{Deserialize, Serialize};

use super::oracle::FieldOracle;
use super::region::Region;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingIndex {
    /// `log2(sup_{2B} |f| / sup_B |f|)` over lattice points.
    pub value: f64,
    pub sup_inner: f64,
    pub sup_outer: f64,
    /// Bound on `|N_true - value|` from the oracle's certified sup error (log2 units).
    pub error: f64,
}

/// Doubling index of a field on `region`. The doubled region must fit the geometry.
pub fn doubling_index(oracle: &dyn FieldOracle, region: &Region) -> Result<DoublingIndex> {
    let outer = region.scaled(2.0);
    if !outer.fits(oracle.geometry()) {
        return Err(LabError::OutsideGeometry(format!(
            "doubled region of half width {} around {:?}",
            outer.half_width(),
            region.center()
        )));
    }
    let sup_inner = oracle.sup(region).value;
    if sup_inner == 0.0 {
        return Err(LabError::VanishingInnerRegion);
    }
    let sup_outer = oracle.sup(&outer).value;
    Ok(DoublingIndex {
        value: (sup_outer / sup_inner).log2(),
        sup_inner,
        sup_outer,
        error: log_error(oracle.sup_error(), sup_inner),
    })
}

/// `log2(1 + eps / sup)`, infinite when the error swamps the sup.
pub(crate) fn log_error(eps: f64, sup: f64) -> f64 {
    if eps == 0.0 {
        0.0
    } else if sup <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 + eps / sup).log2()
    }
}
