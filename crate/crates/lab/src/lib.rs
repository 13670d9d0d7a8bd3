//! Experiment runner around `gamehomog-core`: configuration files, a rayon
//! worker pool for Monte-Carlo fan-out, CSV/JSON artifacts and the
//! subcommands behind the `gamehomog` binary.

pub mod config;
pub mod exec;
pub mod io;
pub mod run;

pub use config::ExperimentConfig;
pub use exec::Pool;
pub use run::{run, Command, Outcome};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },
    #[error(transparent)]
    Core(#[from] gamehomog_core::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl LabError {
    /// Process exit code: 2 when a sample broke an asserted bound, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(gamehomog_core::Error::AprioriBound { .. }) => 2,
            _ => 1,
        }
    }
}
