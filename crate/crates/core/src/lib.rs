//! Exact active-subspace Metropolis–Hastings.
//!
//! The chain moves only in a low-dimensional active subspace. The marginal
//! density of each active coordinate is estimated by importance sampling over
//! the complementary inactive directions, and the estimate is recycled in the
//! acceptance ratio so the chain targets the exact active marginal.

pub mod diagnostics;
pub mod linalg;
pub mod ode;
pub mod rng;
pub mod samplers;
pub mod subspace;
pub mod targets;

pub use linalg::{LinalgError, Matrix};
pub use rng::StreamKey;
pub use samplers::{ChainOutput, SamplerError};
pub use subspace::{ActiveSubspace, SubspaceError};
pub use targets::{DensityModel, TargetError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Ode(#[from] ode::OdeError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Diagnostics(#[from] diagnostics::DiagnosticsError),
}
