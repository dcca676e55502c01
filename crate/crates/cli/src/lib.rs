//! Experiment pipelines behind the `easmh` command.

pub mod compare;
pub mod config;
pub mod pipeline;

use std::path::PathBuf;

use thiserror::Error;

pub use compare::compare_runs;
pub use config::{parse_config, RunConfig};
pub use pipeline::{run_experiment, Reuse, RunReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] config::ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] easmh::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 1 for validation problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Usage(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}

macro_rules! core_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Core(e.into())
            }
        }
    )*};
}

core_error!(
    easmh::LinalgError,
    easmh::ode::OdeError,
    easmh::TargetError,
    easmh::SubspaceError,
    easmh::SamplerError,
    easmh::diagnostics::DiagnosticsError
);

pub type Result<T> = std::result::Result<T, CliError>;
