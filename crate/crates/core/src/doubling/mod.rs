//! Doubling indices over balls and cubes, the subcube chain around a domain's
//! max point, and witnesses for the growth, Remez and gradient bounds.

mod chain;
mod gradient;
mod index;
mod oracle;
mod region;
mod remez;
mod sweep;

pub use chain::{fit_growth, run_chain, run_chain_with, ChainReport, ChainWitnesses, Hypothesis, DEFAULT_POINTS_PER_SIDE};
pub use gradient::{gradient_check, GradientRatio};
pub use index::{doubling_index, DoublingIndex};
pub use oracle::{FieldOracle, GridOracle, ModeOracle, RegionSup};
pub use region::Region;
pub use remez::{half_space_mask, lower_median_mask, remez_witness, solve_constant, BallSample, RemezWitness};
pub use sweep::*;
