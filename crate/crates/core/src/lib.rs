//! A numerical laboratory for the inner radius of nodal domains of Laplace
//! eigenfunctions on flat boxes and tori.
//!
//! Modules follow the pipeline: [`spectra`] builds and samples exact
//! eigenfunctions, [`nodal`] labels nodal domains and measures them,
//! [`doubling`] computes doubling indices and the cube-chain procedure,
//! [`heat`] provides exact heat kernels and condenser heat flow,
//! [`capacity`] computes condenser capacities, and [`experiment`] runs
//! configured sweeps and scaling fits.

pub mod capacity;
pub mod doubling;
pub mod error;
pub mod experiment;
pub mod heat;
pub mod nodal;
pub mod spectra;

pub use error::{LabError, Result};
