//! Nodal domains of sampled fields: labeling, inner radii, almost-inscribed
//! ball deficiency and the classical two-sided bounds.

mod edt;
mod labeling;
mod local;
mod measure;
mod union_find;

pub use edt::squared_edt;
pub use labeling::{label_nodal_domains, DomainLabeling, DEFAULT_ZERO_TOLERANCE};
pub use local::{centered_lattice, local_domain, LocalDomain};
pub use measure::{
    centered_inradius_search, classical_bounds_report, deficiency_profile, deficiency_ratio, distance_to_complement, faber_krahn_constant,
    inradius_report, radii_from_distances, refined_centered_inradius, ClassicalBounds, DomainRadii, BESSEL_J0_FIRST_ZERO, MAX_LOCAL_POINTS,
};
pub use union_find::UnionFind;

use serde::{Deserialize, Serialize};

use crate::spectra::ScalarGrid;

/// One CSV row of the per-field domain table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainRow {
    pub lambda: f64,
    pub domain_id: u32,
    pub sign: i8,
    pub volume: f64,
    pub inradius: f64,
    pub centered_inradius: f64,
    pub argmax: Vec<f64>,
    pub faber_krahn: f64,
}

pub fn domain_rows(lambda: f64, labeling: &DomainLabeling, grid: &ScalarGrid, radii: &[DomainRadii]) -> Vec<DomainRow> {
    let d = grid.dim() as f64;
    radii
        .iter()
        .map(|r| DomainRow {
            lambda,
            domain_id: r.id,
            sign: labeling.sign(r.id),
            volume: labeling.volume(r.id),
            inradius: r.inradius,
            centered_inradius: r.centered_inradius,
            argmax: grid.point(labeling.argmax_of(r.id)),
            faber_krahn: labeling.volume(r.id) * lambda.powf(d / 2.0),
        })
        .collect()
}

/// Column names for [`domain_rows`] output in dimension `dim`.
pub fn domain_csv_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["lambda", "domain_id", "sign", "volume", "inradius", "centered_inradius"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..dim).map(|a| format!("argmax_x{a}")));
    h.push("faber_krahn".into());
    h
}

pub fn domain_csv_record(row: &DomainRow) -> Vec<String> {
    let mut r = vec![
        format!("{}", row.lambda),
        row.domain_id.to_string(),
        row.sign.to_string(),
        format!("{}", row.volume),
        format!("{}", row.inradius),
        format!("{}", row.centered_inradius),
    ];
    r.extend(row.argmax.iter().map(|x| format!("{x}")));
    r.push(format!("{}", row.faber_krahn));
    r
}
