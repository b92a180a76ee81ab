use irt_core::Architecture;
use serde::{Deserialize, Serialize};

use crate::episode::{EpisodeTrace, Termination};
use crate::error::{SimError, SimResult};
use crate::spec::ScenarioKind;

/// Serializes non-finite values as `null` and reads `null` back as `+inf`,
/// since JSON has no infinity.
pub mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() { s.serialize_f64(*v) } else { s.serialize_none() }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Safety and efficiency of one episode. Unreached goals score infinite
/// time and path ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub architecture: Architecture,
    /// Closest approach to any crowd agent center or obstacle surface.
    #[serde(with = "inf_as_null")]
    pub min_distance: f64,
    pub collision: bool,
    #[serde(with = "inf_as_null")]
    pub path_ratio: f64,
    /// Seconds.
    #[serde(with = "inf_as_null")]
    pub time_to_goal: f64,
    pub frozen: bool,
    pub reached_goal: bool,
    pub termination: Termination,
    pub steps: usize,
}

/// Extracts the metrics of a finished, valid trace.
pub fn score_episode(trace: &EpisodeTrace) -> SimResult<MetricReport> {
    if let Some(why) = &trace.invalid {
        return Err(SimError::InvalidTrace(format!("episode was aborted: {why}")));
    }
    if trace.states.is_empty() || trace.decisions.len() + 1 != trace.states.len() {
        return Err(SimError::InvalidTrace(format!(
            "{} states need {} decisions, found {}",
            trace.states.len(),
            trace.states.len().saturating_sub(1),
            trace.decisions.len()
        )));
    }
    let r = &trace.params.robot;
    let mut min_distance = f64::INFINITY;
    for s in &trace.states {
        for c in &s.crowd_positions {
            min_distance = min_distance.min((c - s.robot_pos).norm());
        }
        for o in &trace.obstacles {
            min_distance = min_distance.min(o.surface_distance(&s.robot_pos));
        }
    }
    let collision = min_distance < r.collision_radius;
    if collision != (trace.termination == Termination::Collision) {
        return Err(SimError::InvalidTrace(format!(
            "termination {:?} disagrees with closest approach {min_distance}",
            trace.termination
        )));
    }
    let reached_goal = trace.termination == Termination::ReachedGoal;
    let path: Vec<_> = trace.robot_path();
    let (path_ratio, time_to_goal) = if reached_goal {
        let length: f64 = path.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let straight = (path[path.len() - 1] - path[0]).norm();
        (length / straight, (path.len() - 1) as f64 * r.dt)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(MetricReport {
        kind: trace.spec.kind,
        seed: trace.spec.seed,
        architecture: trace.architecture,
        min_distance,
        collision,
        path_ratio,
        time_to_goal,
        frozen: trace.termination == Termination::Frozen,
        reached_goal,
        termination: trace.termination,
        steps: path.len() - 1,
    })
}
