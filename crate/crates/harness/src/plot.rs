//! Plot-ready CSV tables built from a result directory.

use std::path::{Path, PathBuf};

use irt_sim::metrics::{epsilon_delta, GapMetric, GapMode, PerformanceSurface};
use irt_sim::EpisodeTrace;
use serde::{Deserialize, Serialize};

use crate::config::PlotConfig;
use crate::run::{read_lines, read_surface, SURFACE_FILE, TRACES_FILE};
use crate::HarnessResult;

pub const OVERLAY_HEADER: [&str; 4] = ["step", "x", "y", "agent_id"];
pub const EPSILON_HEADER: [&str; 6] = ["epsilon", "delta", "samples", "candidate", "reference", "gap"];
const STRESSOR_COLUMNS: [&str; 4] = ["crowd_density", "operator_fidelity_sigma", "operator_noise_std", "autonomy_reliability"];
const SURFACE_METRICS: [&str; 8] = [
    "episodes",
    "reached_rate",
    "collision_rate",
    "frozen_rate",
    "violation_rate",
    "path_ratio_mean",
    "time_to_goal_mean",
    "min_distance_mean",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    TrajectoryOverlay,
    PerformanceSurface,
    EpsilonDeltaCurve,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::TrajectoryOverlay, PlotKind::PerformanceSurface, PlotKind::EpsilonDeltaCurve];
}

fn writer(path: &Path) -> HarnessResult<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| std::io::Error::other(e).into())
}

fn flush(mut w: csv::Writer<std::fs::File>) -> HarnessResult<()> {
    w.flush()?;
    Ok(())
}

fn row<I: IntoIterator<Item = String>>(w: &mut csv::Writer<std::fs::File>, fields: I) -> HarnessResult<()> {
    w.write_record(fields).map_err(std::io::Error::other)?;
    Ok(())
}

/// Writes the tables of `kind` for the results in `dir` and returns the
/// files written. Missing results give header-only files.
pub fn emit_plot_data(dir: &Path, kind: PlotKind, cfg: &PlotConfig) -> HarnessResult<Vec<PathBuf>> {
    match kind {
        PlotKind::TrajectoryOverlay => {
            let traces: Vec<EpisodeTrace> = read_lines(&dir.join(TRACES_FILE))?;
            overlay_tables(dir, &traces)
        }
        PlotKind::PerformanceSurface => {
            let path = dir.join("surface.csv");
            surface_table(&path, read_surface(&dir.join(SURFACE_FILE))?.as_ref())?;
            Ok(vec![path])
        }
        PlotKind::EpsilonDeltaCurve => {
            let traces: Vec<EpisodeTrace> = read_lines(&dir.join(TRACES_FILE))?;
            let path = dir.join("epsilon_delta.csv");
            epsilon_table(&path, &traces, cfg)?;
            Ok(vec![path])
        }
    }
}

/// One `overlay_<index>_<architecture>_seed<seed>.csv` per trace, rows for
/// the robot (`agent_id` = `robot`) and every crowd agent (`crowd_<i>`) at
/// every step. With no traces, a header-only `overlay.csv`.
pub fn overlay_tables(dir: &Path, traces: &[EpisodeTrace]) -> HarnessResult<Vec<PathBuf>> {
    if traces.is_empty() {
        let path = dir.join("overlay.csv");
        let mut w = writer(&path)?;
        row(&mut w, OVERLAY_HEADER.map(String::from))?;
        flush(w)?;
        return Ok(vec![path]);
    }
    let mut paths = Vec::with_capacity(traces.len());
    for (i, t) in traces.iter().enumerate() {
        let path = dir.join(format!("overlay_{i:04}_{}_seed{}.csv", t.architecture, t.spec.seed));
        let mut w = writer(&path)?;
        row(&mut w, OVERLAY_HEADER.map(String::from))?;
        for s in &t.states {
            row(&mut w, [s.step.to_string(), s.robot_pos.x.to_string(), s.robot_pos.y.to_string(), "robot".into()])?;
            for (j, c) in s.crowd_positions.iter().enumerate() {
                row(&mut w, [s.step.to_string(), c.x.to_string(), c.y.to_string(), format!("crowd_{j}")])?;
            }
        }
        flush(w)?;
        paths.push(path);
    }
    Ok(paths)
}

/// One row per cell: the four stressor values, then for every simulated
/// architecture `<architecture>_<metric>` for the metrics in
/// [`SURFACE_METRICS`]. Infinite means are written as `inf`.
pub fn surface_table(path: &Path, surface: Option<&PerformanceSurface>) -> HarnessResult<()> {
    let mut w = writer(path)?;
    let archs = surface.map(|s| s.architectures.clone()).unwrap_or_default();
    let mut header: Vec<String> = STRESSOR_COLUMNS.map(String::from).to_vec();
    for a in &archs {
        header.extend(SURFACE_METRICS.iter().map(|m| format!("{a}_{m}")));
    }
    row(&mut w, header)?;
    if let Some(s) = surface {
        for (c, cell) in s.cells.iter().enumerate() {
            let st = cell.stressors;
            let mut fields: Vec<String> = [st.crowd_density, st.operator_fidelity_sigma, st.operator_noise_std, st.autonomy_reliability]
                .iter()
                .map(f64::to_string)
                .collect();
            for &a in &archs {
                match s.aggregate(c, a) {
                    Some(g) => fields.extend([
                        g.episodes.to_string(),
                        g.reached_rate.to_string(),
                        g.collision_rate.to_string(),
                        g.frozen_rate.to_string(),
                        g.lower_bound_violation_rate.to_string(),
                        g.path_ratio.mean.to_string(),
                        g.time_to_goal.mean.to_string(),
                        g.min_distance.mean.to_string(),
                    ]),
                    None => fields.extend(std::iter::repeat_n(String::new(), SURFACE_METRICS.len())),
                }
            }
            row(&mut w, fields)?;
        }
    }
    flush(w)
}

fn gap_name(mode: GapMode) -> &'static str {
    match mode {
        GapMode::ActionDistance => "action_distance",
        GapMode::Metric { metric: GapMetric::PathRatio } => "path_ratio",
        GapMode::Metric { metric: GapMetric::TimeToGoal } => "time_to_goal",
        GapMode::Metric { metric: GapMetric::MinDistance } => "min_distance",
    }
}

/// Pairs every candidate trace with the reference trace of the identical
/// spec (same cell and seed) and writes one row per epsilon. Without pairs,
/// only the header.
pub fn epsilon_table(path: &Path, traces: &[EpisodeTrace], cfg: &PlotConfig) -> HarnessResult<()> {
    let pairs: Vec<(EpisodeTrace, EpisodeTrace)> = traces
        .iter()
        .filter(|t| t.architecture == cfg.candidate)
        .filter_map(|c| {
            traces
                .iter()
                .find(|r| r.architecture == cfg.reference && r.spec == c.spec)
                .map(|r| (c.clone(), r.clone()))
        })
        .collect();
    let mut w = writer(path)?;
    row(&mut w, EPSILON_HEADER.map(String::from))?;
    if !pairs.is_empty() {
        let mut epsilons = cfg.epsilons.clone();
        epsilons.sort_by(f64::total_cmp);
        for e in epsilon_delta(&pairs, &epsilons, cfg.gap)? {
            row(
                &mut w,
                [
                    e.epsilon.to_string(),
                    e.delta.to_string(),
                    e.samples.to_string(),
                    cfg.candidate.to_string(),
                    cfg.reference.to_string(),
                    gap_name(cfg.gap).to_string(),
                ],
            )?;
        }
    }
    flush(w)
}
