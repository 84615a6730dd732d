//! Exact Laplace eigenfunctions on Dirichlet boxes and flat tori, and their
//! samples on corner lattices.

mod geometry;
mod grid;
mod lattice;
mod mode;
pub mod rng;

pub use geometry::{Geometry, GeometryKind};
pub use grid::{grid_shape, sample_field, sampling_floor, ScalarGrid, SAMPLES_PER_WAVELENGTH};
pub use lattice::{advance, flatten, strides, unflatten, TensorLattice};
pub use mode::{
    box_mode, lattice_representations, normal_coefficients, random_combination, random_eigenfunction, term_eigenvalue, torus_eigenspace,
    EigenMode, ModeTerm, Phase,
};

/// Resolution meeting the sampling floor with at least `samples_per_wavelength`
/// samples, rounded up to a multiple of `multiple`.
pub fn resolution_for(mode: &EigenMode, samples_per_wavelength: f64, multiple: usize) -> usize {
    let k = mode.eigenvalue.max(0.0).sqrt() / (2.0 * std::f64::consts::PI);
    let spw = samples_per_wavelength.max(SAMPLES_PER_WAVELENGTH);
    let raw = mode
        .geometry
        .sides
        .iter()
        .map(|&l| (spw * l * k).ceil() as usize)
        .max()
        .unwrap_or(1)
        .max(sampling_floor(mode))
        .max(multiple);
    raw.div_ceil(multiple) * multiple
}
