//! Batch experiments, plot-ready tables, and the live teleoperation service.
//!
//! A TOML [`RunConfig`] names a scenario, the architectures to compare, and
//! optionally a stressor sweep. [`run::execute`] simulates it and persists
//! traces, metric records, and the performance surface; [`plot`] turns those
//! files into CSV tables; [`teleop`] lets a person drive an episode over TCP.

pub mod complete;
pub mod config;
pub mod plot;
pub mod run;
pub mod teleop;

pub use config::{PlotConfig, RunConfig, ScenarioConfig, SweepConfig, TeleopConfig};

use irt_sim::SimError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Core(#[from] irt_core::Error),
    #[error("malformed result file {path}: {message}")]
    Data { path: String, message: String },
    #[error("no episode finished successfully ({failures} failed)")]
    NoEpisodes { failures: usize },
}

impl HarnessError {
    /// Process exit status: 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type HarnessResult<T> = Result<T, HarnessError>;
