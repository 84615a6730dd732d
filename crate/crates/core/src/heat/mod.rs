//! Exact heat kernels on flat tori and Dirichlet boxes, implicit heat flow on
//! condensers, and checks of the kernel bounds and heat identities.

mod bounds;
mod cg;
mod flow;
mod intersection;
mod kernel;

pub use bounds::*;
pub use cg::{conjugate_gradient, iteration_limit, CgStats};
pub(crate) use flow::equilibrium_free;
pub use flow::{
    deficit_identity_check, equilibrium_potential, heat_flow_psi, step_plan, write_checkpoint, DeficitReport, FreeOperator, HeatFlow,
    HeatFlowState, Potential, EQUILIBRIUM_TOLERANCE, STEP_TOLERANCE, STEP_TOLERANCE_LOOSE,
};
pub use intersection::*;
pub use kernel::{gaussian, kernel_eval, KernelSpec, KernelValue, KernelVariant, DEFAULT_TRUNCATION};
