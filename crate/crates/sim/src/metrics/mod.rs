//! Episode scoring, the lower-bound verdict, stressor sweeps and
//! epsilon-delta estimates.

mod epsilon;
mod report;
mod sweep;
mod verdict;

pub use epsilon::{epsilon_delta, epsilon_delta_from_gaps, episode_gap, EpsilonDeltaEstimate, GapMetric, GapMode};
pub use report::{inf_as_null, score_episode, MetricReport};
pub use sweep::{
    aggregate, score_seed, simulated_architectures, stressor_sweep, ArchitectureAggregate, CellResult,
    EpisodeFailure, EpisodeRecord, PerformanceSurface, Stats, Stressors, StressorGrid, SweepOutput,
};
pub use verdict::{lower_bound_verdict, Metric, MetricVerdict, Verdict};
