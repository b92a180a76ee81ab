use std::path::Path;

use irt_core::completion::{matrix_complete_with, CompletionOptions, PreferenceMatrix};
use serde::Serialize;

use crate::{HarnessError, HarnessResult};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletionSummary {
    pub rows: usize,
    pub cols: usize,
    pub observed: usize,
    pub rank_used: usize,
    pub relative_error_train: f64,
    pub converged: bool,
    pub iterations: usize,
    pub unrecoverable_rows: Vec<usize>,
    pub unrecoverable_cols: Vec<usize>,
}

/// Completes the preference matrix stored in `input` (see
/// [`PreferenceMatrix::from_text`]) at `rank`, or at the file's rank hint.
/// Returns the completed rows and a summary.
pub fn complete_file(input: &Path, rank: Option<usize>, seed: u64) -> HarnessResult<(Vec<Vec<f64>>, CompletionSummary)> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", input.display())))?;
    let m = PreferenceMatrix::<f64>::from_text(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", input.display())))?;
    let rank = rank.unwrap_or(m.rank_hint()).max(1);
    let opts = CompletionOptions { seed, ..CompletionOptions::default() };
    let r = matrix_complete_with(&m, rank, &opts).map_err(|e| HarnessError::Config(e.to_string()))?;
    let rows = (0..m.rows()).map(|i| (0..m.cols()).map(|j| r.completed[(i, j)]).collect()).collect();
    let summary = CompletionSummary {
        rows: m.rows(),
        cols: m.cols(),
        observed: m.observed_count(),
        rank_used: r.rank_used,
        relative_error_train: r.relative_error_train,
        converged: r.converged,
        iterations: r.iterations,
        unrecoverable_rows: r.unrecoverable_rows,
        unrecoverable_cols: r.unrecoverable_cols,
    };
    Ok((rows, summary))
}

pub fn write_matrix_csv(path: &Path, rows: &[Vec<f64>]) -> HarnessResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(std::io::Error::other)?;
    for r in rows {
        w.write_record(r.iter().map(f64::to_string)).map_err(std::io::Error::other)?;
    }
    w.flush()?;
    Ok(())
}
