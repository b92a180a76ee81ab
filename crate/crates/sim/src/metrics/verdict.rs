use serde::{Deserialize, Serialize};

use super::report::{inf_as_null, MetricReport};
use crate::error::{SimError, SimResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Collision,
    PathRatio,
    TimeToGoal,
}

impl Metric {
    /// Metrics the verdict checks, all larger-is-worse.
    pub const CHECKED: [Metric; 3] = [Metric::Collision, Metric::PathRatio, Metric::TimeToGoal];

    pub fn of(self, r: &MetricReport) -> f64 {
        match self {
            Metric::Collision => f64::from(u8::from(r.collision)),
            Metric::PathRatio => r.path_ratio,
            Metric::TimeToGoal => r.time_to_goal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricVerdict {
    pub metric: Metric,
    #[serde(with = "inf_as_null")]
    pub team: f64,
    /// The better of the two solo values.
    #[serde(with = "inf_as_null")]
    pub best_solo: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub metrics: Vec<MetricVerdict>,
    pub pass: bool,
}

/// Checks that the team is no worse than the better solo run on every
/// metric, up to a relative `tolerance`. Collisions compare as booleans: the
/// team may only collide if both solos did too. An infinite solo value is
/// beaten by anything; an infinite team value loses to any finite one.
pub fn lower_bound_verdict(
    team: &MetricReport,
    human_alone: &MetricReport,
    autonomy_alone: &MetricReport,
    tolerance: f64,
) -> SimResult<Verdict> {
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(SimError::Mismatch(format!("tolerance must be finite and >= 0, got {tolerance}")));
    }
    for solo in [human_alone, autonomy_alone] {
        if solo.seed != team.seed || solo.kind != team.kind {
            return Err(SimError::Mismatch(format!(
                "team run is {} seed {} but a solo run is {} seed {}",
                team.kind, team.seed, solo.kind, solo.seed
            )));
        }
    }
    let metrics: Vec<MetricVerdict> = Metric::CHECKED
        .iter()
        .map(|&metric| {
            let t = metric.of(team);
            let best = metric.of(human_alone).min(metric.of(autonomy_alone));
            let pass = match metric {
                Metric::Collision => t <= best,
                _ => t <= best * (1.0 + tolerance),
            };
            MetricVerdict { metric, team: t, best_solo: best, pass }
        })
        .collect();
    let pass = metrics.iter().all(|m| m.pass);
    Ok(Verdict { metrics, pass })
}
