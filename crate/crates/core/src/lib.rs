//! Multiscale simulation of controlled leader-follower dynamics in one space
//! dimension.
//!
//! Three descriptions of the same dynamics are provided:
//!
//! * [`micro`]: leaders and followers are both particles,
//! * [`hybrid`]: leader particles coupled to a pressureless follower fluid,
//! * [`macmac`]: leader fluids, one per target point, coupled to a follower fluid,
//!
//! together with the diagnostics in [`metrics`] that measure how far apart two
//! neighbouring descriptions are.

pub mod error;
pub mod fluid;
pub mod hybrid;
pub mod kernels;
pub mod macmac;
pub mod metrics;
pub mod micro;
pub mod ode;
pub mod pairwise;
pub mod sampling;

pub use error::{Error, Result};
pub use fluid::{CflConfig, FluidState, Grid1D};
pub use hybrid::HybridSystem;
pub use kernels::{KernelSpec, WeightSpec};
pub use macmac::{MacMacSystem, TargetMixture};
pub use micro::{ControlParams, Interactions, MicroSystem, ParticleState};
