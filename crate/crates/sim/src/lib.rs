//! Teaming scenarios and their evaluation.
//!
//! A [`ScenarioSpec`] describes one world (corridor, crowd, or elevator lobby)
//! and its stressor levels. [`simulate_episode`] runs it under one fusion
//! architecture and returns an [`EpisodeTrace`]; the [`metrics`] module scores
//! traces, checks the lower-bound property, sweeps stressor grids, and
//! estimates epsilon-delta gaps between architectures.

pub mod beliefs;
pub mod crowd;
pub mod episode;
pub mod error;
pub mod metrics;
pub mod operator;
pub mod route;
pub mod scenario;
pub mod spec;

pub use episode::{simulate_episode, Episode, EpisodeTrace, FusionParams, StepContext, Termination};
pub use error::{SimError, SimResult};
pub use operator::{OperatorInput, SimulatedOperator};
pub use scenario::{build_scenario, Scenario, WorldState};
pub use spec::{Arena, PlannerParams, RobotParams, ScenarioKind, ScenarioSpec, SimParams};
