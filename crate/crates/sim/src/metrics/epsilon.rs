use serde::{Deserialize, Serialize};

use super::report::score_episode;
use crate::episode::EpisodeTrace;
use crate::error::{SimError, SimResult};

/// What counts as the gap between a candidate episode and its reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum GapMode {
    /// Mean distance between the two action sequences over their common steps.
    ActionDistance,
    /// Absolute difference of one metric; two infinite values differ by zero.
    Metric { metric: GapMetric },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMetric {
    PathRatio,
    TimeToGoal,
    MinDistance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonDeltaEstimate {
    pub epsilon: f64,
    /// Fraction of episodes whose gap exceeds `epsilon`.
    pub delta: f64,
    /// Number of episode pairs behind `delta`.
    pub samples: usize,
}

fn metric_gap(a: f64, b: f64) -> f64 {
    if a == b { 0.0 } else { (a - b).abs() }
}

/// Gap between one candidate trace and the reference trace of the same seed.
pub fn episode_gap(candidate: &EpisodeTrace, reference: &EpisodeTrace, mode: GapMode) -> SimResult<f64> {
    if candidate.spec.seed != reference.spec.seed || candidate.spec.kind != reference.spec.kind {
        return Err(SimError::Mismatch(format!(
            "candidate seed {} vs reference seed {}",
            candidate.spec.seed, reference.spec.seed
        )));
    }
    match mode {
        GapMode::ActionDistance => {
            let n = candidate.decisions.len().min(reference.decisions.len());
            if n == 0 {
                return Ok(0.0);
            }
            let total: f64 = candidate.decisions[..n]
                .iter()
                .zip(&reference.decisions[..n])
                .map(|(c, r)| (c.action - r.action).norm())
                .sum();
            Ok(total / n as f64)
        }
        GapMode::Metric { metric } => {
            let (c, r) = (score_episode(candidate)?, score_episode(reference)?);
            Ok(match metric {
                GapMetric::PathRatio => metric_gap(c.path_ratio, r.path_ratio),
                GapMetric::TimeToGoal => metric_gap(c.time_to_goal, r.time_to_goal),
                GapMetric::MinDistance => metric_gap(c.min_distance, r.min_distance),
            })
        }
    }
}

/// `delta(eps)` for each `eps`, from precomputed per-episode gaps.
pub fn epsilon_delta_from_gaps(gaps: &[f64], epsilons: &[f64]) -> SimResult<Vec<EpsilonDeltaEstimate>> {
    if gaps.is_empty() {
        return Err(SimError::Mismatch("epsilon-delta needs at least one episode".into()));
    }
    if gaps.iter().chain(epsilons).any(|v| v.is_nan()) {
        return Err(SimError::Mismatch("gaps and epsilons must not be NaN".into()));
    }
    let n = gaps.len();
    Ok(epsilons
        .iter()
        .map(|&epsilon| EpsilonDeltaEstimate {
            epsilon,
            delta: gaps.iter().filter(|g| **g > epsilon).count() as f64 / n as f64,
            samples: n,
        })
        .collect())
}

/// Empirical exceedance probabilities over `(candidate, reference)` pairs.
pub fn epsilon_delta(
    pairs: &[(EpisodeTrace, EpisodeTrace)],
    epsilons: &[f64],
    mode: GapMode,
) -> SimResult<Vec<EpsilonDeltaEstimate>> {
    let gaps = pairs
        .iter()
        .map(|(c, r)| episode_gap(c, r, mode))
        .collect::<SimResult<Vec<_>>>()?;
    epsilon_delta_from_gaps(&gaps, epsilons)
}
