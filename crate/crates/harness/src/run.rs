//! Batch runs and their files.
//!
//! A run writes three files into the output directory:
//!
//! * `traces.jsonl`: one [`EpisodeTrace`] per line, requested architectures only;
//! * `metrics.jsonl`: one [`MetricsLine`] per line, same episodes and order;
//! * `surface.json`: the [`PerformanceSurface`], baselines and failures included.
//!
//! Lines follow the sweep order (cell, then seed, then architecture), so the
//! same config always produces the same bytes.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use irt_core::Architecture;
use irt_sim::metrics::{stressor_sweep, MetricReport, PerformanceSurface, Stressors, Verdict};
use irt_sim::EpisodeTrace;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{HarnessError, HarnessResult};

pub const TRACES_FILE: &str = "traces.jsonl";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const SURFACE_FILE: &str = "surface.json";

/// One record of `metrics.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsLine {
    /// Index of the sweep cell.
    pub cell: usize,
    pub stressors: Stressors,
    pub report: MetricReport,
    pub verdict: Option<Verdict>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub episodes: usize,
    pub failures: usize,
    pub surface: PerformanceSurface,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// One cell at the scenario's stressor levels.
    Single,
    /// The config's `[sweep]` grid.
    Sweep,
}

/// Simulates `cfg` and writes the result files into `out`. Fails with
/// [`HarnessError::NoEpisodes`] (after writing) when nothing succeeded.
pub fn execute(cfg: &RunConfig, mode: Mode, out: &Path) -> HarnessResult<RunSummary> {
    let spec = cfg.spec()?;
    let grid = match (mode, &cfg.sweep) {
        (Mode::Single, _) => cfg.single_grid()?,
        (Mode::Sweep, Some(s)) => cfg.sweep_grid(s)?,
        (Mode::Sweep, None) => return Err(HarnessError::Config("`sweep` needs a [sweep] section".into())),
    };
    let fusion = cfg.fusion_params()?;
    let result = stressor_sweep(&spec, &grid, &cfg.architectures, &fusion, &cfg.sim, cfg.tolerance, true)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let surface = result.surface;
    let wanted = |a: Architecture| cfg.architectures.contains(&a);

    fs::create_dir_all(out)?;
    let traces: Vec<&EpisodeTrace> = result.traces.iter().filter(|t| wanted(t.architecture)).collect();
    write_lines(&out.join(TRACES_FILE), traces)?;
    let lines: Vec<MetricsLine> = surface
        .cells
        .iter()
        .enumerate()
        .flat_map(|(cell, c)| {
            c.episodes.iter().filter(|e| wanted(e.report.architecture)).map(move |e| MetricsLine {
                cell,
                stressors: c.stressors,
                report: e.report.clone(),
                verdict: e.verdict.clone(),
            })
        })
        .collect();
    write_lines(&out.join(METRICS_FILE), &lines)?;
    let mut f = BufWriter::new(File::create(out.join(SURFACE_FILE))?);
    serde_json::to_writer_pretty(&mut f, &surface).map_err(std::io::Error::other)?;
    f.write_all(b"\n")?;
    f.flush()?;

    let failures = surface
        .cells
        .iter()
        .flat_map(|c| &c.failures)
        .filter(|f| wanted(f.architecture))
        .count();
    if lines.is_empty() {
        return Err(HarnessError::NoEpisodes { failures });
    }
    Ok(RunSummary { episodes: lines.len(), failures, surface })
}

pub fn write_lines<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> HarnessResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a JSON-lines file; a missing file reads as empty.
pub fn read_lines<T: DeserializeOwned>(path: &Path) -> HarnessResult<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| HarnessError::Data {
            path: path.display().to_string(),
            message: format!("line {}: {e}", n + 1),
        })?);
    }
    Ok(out)
}

/// Reads `surface.json`; a missing file reads as `None`.
pub fn read_surface(path: &Path) -> HarnessResult<Option<PerformanceSurface>> {
    match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| HarnessError::Data { path: path.display().to_string(), message: e.to_string() }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}
