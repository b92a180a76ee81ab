use irt_core::Architecture;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{inf_as_null, score_episode, MetricReport};
use super::verdict::{lower_bound_verdict, Verdict};
use crate::episode::{simulate_episode, EpisodeTrace, FusionParams, Termination};
use crate::error::{SimError, SimResult};
use crate::spec::{ScenarioSpec, SimParams};

/// Values swept for each stressor. The cross product gives the cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressorGrid {
    pub crowd_density: Vec<f64>,
    pub operator_fidelity_sigma: Vec<f64>,
    pub operator_noise_std: Vec<f64>,
    pub autonomy_reliability: Vec<f64>,
    pub seeds_per_cell: usize,
    pub base_seed: u64,
    /// Upper bound on the number of simulated episodes.
    pub budget: usize,
}

/// One cell of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stressors {
    pub crowd_density: f64,
    pub operator_fidelity_sigma: f64,
    pub operator_noise_std: f64,
    pub autonomy_reliability: f64,
}

impl Stressors {
    pub fn of(spec: &ScenarioSpec) -> Self {
        Self {
            crowd_density: spec.crowd_density,
            operator_fidelity_sigma: spec.operator_fidelity_sigma,
            operator_noise_std: spec.operator_noise_std,
            autonomy_reliability: spec.autonomy_reliability,
        }
    }

    pub fn apply(&self, base: &ScenarioSpec) -> ScenarioSpec {
        ScenarioSpec {
            crowd_density: self.crowd_density,
            operator_fidelity_sigma: self.operator_fidelity_sigma,
            operator_noise_std: self.operator_noise_std,
            autonomy_reliability: self.autonomy_reliability,
            ..base.clone()
        }
    }
}

impl StressorGrid {
    /// A one-cell grid at the stressor values of `spec`.
    pub fn single(spec: &ScenarioSpec, seeds_per_cell: usize, budget: usize) -> Self {
        Self {
            crowd_density: vec![spec.crowd_density],
            operator_fidelity_sigma: vec![spec.operator_fidelity_sigma],
            operator_noise_std: vec![spec.operator_noise_std],
            autonomy_reliability: vec![spec.autonomy_reliability],
            seeds_per_cell,
            base_seed: spec.seed,
            budget,
        }
    }

    /// Cells in row-major order: density outermost, reliability innermost.
    pub fn cells(&self) -> Vec<Stressors> {
        let mut out = Vec::new();
        for &crowd_density in &self.crowd_density {
            for &operator_fidelity_sigma in &self.operator_fidelity_sigma {
                for &operator_noise_std in &self.operator_noise_std {
                    for &autonomy_reliability in &self.autonomy_reliability {
                        out.push(Stressors {
                            crowd_density,
                            operator_fidelity_sigma,
                            operator_noise_std,
                            autonomy_reliability,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.seeds_per_cell as u64).map(move |i| self.base_seed.wrapping_add(i))
    }

    pub fn validate(&self) -> SimResult<()> {
        let axes = [
            ("crowd_density", &self.crowd_density),
            ("operator_fidelity_sigma", &self.operator_fidelity_sigma),
            ("operator_noise_std", &self.operator_noise_std),
            ("autonomy_reliability", &self.autonomy_reliability),
        ];
        for (name, axis) in axes {
            if axis.is_empty() {
                return Err(SimError::InvalidSpec(format!("stressor `{name}` has no values")));
            }
        }
        if self.seeds_per_cell == 0 {
            return Err(SimError::InvalidSpec("seeds_per_cell must be at least 1".into()));
        }
        Ok(())
    }
}

/// Architectures actually simulated: the requested ones plus both solo
/// baselines, in canonical order.
pub fn simulated_architectures(requested: &[Architecture]) -> Vec<Architecture> {
    Architecture::ALL
        .iter()
        .copied()
        .filter(|a| {
            requested.contains(a) || matches!(a, Architecture::HumanOnly | Architecture::AutonomyOnly)
        })
        .collect()
}

/// Mean and spread of one metric. Infinite samples (unreached goals) are
/// counted apart so the moments stay finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    #[serde(with = "inf_as_null")]
    pub mean: f64,
    #[serde(with = "inf_as_null")]
    pub std: f64,
    pub finite: usize,
    pub infinite: usize,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut finite, mut infinite) = (Vec::new(), 0);
        for v in values {
            if v.is_finite() { finite.push(v) } else { infinite += 1 }
        }
        let n = finite.len();
        if n == 0 {
            return Self { mean: f64::INFINITY, std: f64::INFINITY, finite: 0, infinite };
        }
        let mean = finite.iter().sum::<f64>() / n as f64;
        let var = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        Self { mean, std: var.sqrt(), finite: n, infinite }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureAggregate {
    pub architecture: Architecture,
    pub episodes: usize,
    pub path_ratio: Stats,
    pub time_to_goal: Stats,
    pub min_distance: Stats,
    pub reached_rate: f64,
    pub collision_rate: f64,
    pub frozen_rate: f64,
    pub timeout_rate: f64,
    pub lower_bound_violation_rate: f64,
}

/// One scored episode and, when both baselines exist, its verdict against them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub report: MetricReport,
    pub verdict: Option<Verdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFailure {
    pub seed: u64,
    pub architecture: Architecture,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub stressors: Stressors,
    pub aggregates: Vec<ArchitectureAggregate>,
    pub episodes: Vec<EpisodeRecord>,
    pub failures: Vec<EpisodeFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceSurface {
    pub base: ScenarioSpec,
    pub grid: StressorGrid,
    pub architectures: Vec<Architecture>,
    pub tolerance: f64,
    pub cells: Vec<CellResult>,
}

impl PerformanceSurface {
    pub fn aggregate(&self, cell: usize, architecture: Architecture) -> Option<&ArchitectureAggregate> {
        self.cells.get(cell)?.aggregates.iter().find(|a| a.architecture == architecture)
    }
}

/// Aggregates per architecture, in the order given, over the records of one cell.
pub fn aggregate(records: &[EpisodeRecord], architectures: &[Architecture]) -> Vec<ArchitectureAggregate> {
    architectures
        .iter()
        .map(|&architecture| {
            let rs: Vec<&EpisodeRecord> = records.iter().filter(|r| r.report.architecture == architecture).collect();
            let n = rs.len();
            let rate = |f: &dyn Fn(&EpisodeRecord) -> bool| {
                if n == 0 { 0.0 } else { rs.iter().filter(|r| f(r)).count() as f64 / n as f64 }
            };
            ArchitectureAggregate {
                architecture,
                episodes: n,
                path_ratio: Stats::of(rs.iter().map(|r| r.report.path_ratio)),
                time_to_goal: Stats::of(rs.iter().map(|r| r.report.time_to_goal)),
                min_distance: Stats::of(rs.iter().map(|r| r.report.min_distance)),
                reached_rate: rate(&|r| r.report.reached_goal),
                collision_rate: rate(&|r| r.report.collision),
                frozen_rate: rate(&|r| r.report.frozen),
                timeout_rate: rate(&|r| r.report.termination == Termination::Timeout),
                lower_bound_violation_rate: rate(&|r| r.verdict.as_ref().is_some_and(|v| !v.pass)),
            }
        })
        .collect()
}

/// Scores the traces of one seed and attaches verdicts against the solo
/// runs among them.
pub fn score_seed(
    traces: &[Result<EpisodeTrace, EpisodeFailure>],
    tolerance: f64,
) -> SimResult<(Vec<EpisodeRecord>, Vec<EpisodeFailure>)> {
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for t in traces {
        match t {
            Ok(trace) => match score_episode(trace) {
                Ok(r) => reports.push(r),
                Err(e) => failures.push(EpisodeFailure {
                    seed: trace.spec.seed,
                    architecture: trace.architecture,
                    error: e.to_string(),
                }),
            },
            Err(f) => failures.push(f.clone()),
        }
    }
    let find = |a: Architecture| reports.iter().find(|r| r.architecture == a).cloned();
    let (human, autonomy) = (find(Architecture::HumanOnly), find(Architecture::AutonomyOnly));
    let mut records = Vec::with_capacity(reports.len());
    for report in &reports {
        let verdict = match (&human, &autonomy) {
            (Some(h), Some(a)) => Some(lower_bound_verdict(report, h, a, tolerance)?),
            _ => None,
        };
        records.push(EpisodeRecord { report: report.clone(), verdict });
    }
    Ok((records, failures))
}

/// Output of [`stressor_sweep`]. Traces are kept only on request.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub surface: PerformanceSurface,
    pub traces: Vec<EpisodeTrace>,
}

/// Runs every architecture (plus both solo baselines) on every seed of every
/// cell and aggregates per cell. Seeds are shared across cells. Results do
/// not depend on the thread count.
pub fn stressor_sweep(
    base: &ScenarioSpec,
    grid: &StressorGrid,
    architectures: &[Architecture],
    fusion: &FusionParams,
    params: &SimParams,
    tolerance: f64,
    keep_traces: bool,
) -> SimResult<SweepOutput> {
    grid.validate()?;
    fusion.validate()?;
    params.validate()?;
    if architectures.is_empty() {
        return Err(SimError::InvalidSpec("no architectures requested".into()));
    }
    let archs = simulated_architectures(architectures);
    let cells = grid.cells();
    let total = cells.len() * grid.seeds_per_cell * archs.len();
    if total > grid.budget {
        return Err(SimError::InvalidSpec(format!(
            "sweep needs {total} episodes but the budget is {}",
            grid.budget
        )));
    }
    for c in &cells {
        c.apply(base).validate()?;
    }
    let jobs: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| grid.seeds().map(move |s| (c, s))).collect();
    let done: Vec<Vec<Result<EpisodeTrace, EpisodeFailure>>> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let spec = cells[c].apply(base).with_seed(seed);
            archs
                .iter()
                .map(|&a| {
                    simulate_episode(&spec, a, fusion, params).map_err(|e| EpisodeFailure {
                        seed,
                        architecture: a,
                        error: e.to_string(),
                    })
                })
                .collect()
        })
        .collect();

    let mut out_cells: Vec<CellResult> = cells
        .iter()
        .map(|&stressors| CellResult { stressors, aggregates: Vec::new(), episodes: Vec::new(), failures: Vec::new() })
        .collect();
    let mut traces = Vec::new();
    for ((c, _), results) in jobs.iter().zip(done) {
        let (records, failures) = score_seed(&results, tolerance)?;
        out_cells[*c].episodes.extend(records);
        out_cells[*c].failures.extend(failures);
        if keep_traces {
            traces.extend(results.into_iter().filter_map(Result::ok));
        }
    }
    for cell in &mut out_cells {
        cell.aggregates = aggregate(&cell.episodes, &archs);
    }
    Ok(SweepOutput {
        surface: PerformanceSurface {
            base: base.clone(),
            grid: grid.clone(),
            architectures: archs,
            tolerance,
            cells: out_cells,
        },
        traces,
    })
}
