//! Persistence of populations governed by integrodifference equations on a
//! habitat patch that moves at a constant speed and is kicked by random
//! shifts each generation.
//!
//! The building blocks are a [`DispersalKernel`], a [`GrowthMap`], a
//! [`Suitability`] profile and an [`EnvironmentModel`]. An [`IdeOperator`]
//! couples them on a uniform grid; [`spectral`] and [`persistence`] turn the
//! operator into eigenvalues, stochastic growth rates and critical speeds,
//! and [`simulate`] runs the nonlinear model forward.

pub mod environment;
pub mod error;
pub mod growth;
pub mod habitat;
pub mod kernels;
pub mod operator;
pub mod optimize;
mod par;
pub mod persistence;
pub mod simulate;
pub mod spectral;

pub use environment::{Atom, Draw, EnvironmentModel, EnvironmentStream, SpreadTarget};
pub use error::{ModelError, Result};
pub use growth::{GrowthFamily, GrowthLaw, GrowthMap};
pub use habitat::{DiscretizedHabitat, Interval, Suitability};
pub use kernels::{DispersalKernel, KernelFamily};
pub use operator::{IdeOperator, ShiftedKernelMatrix};
pub use persistence::{
    CriticalSpeedResult, InitialDensity, LambdaEstimate, LambdaOptions, SpreadingSpeed,
};
pub use simulate::{ClassificationRules, Outcome, SimulationOptions, TrajectoryRecord};
pub use spectral::{EigenResult, PowerOptions};
