//! Collective operator intent as a partially observed low-rank matrix.
//!
//! Rows are operators, columns are platforms (or items). Sparse inputs from a
//! new operator are completed against the history by alternating ridge least
//! squares and lifted back to trajectory particles for fusion.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fusion::ParticleIntent;
use crate::rng::seeded;
use crate::scalar::Real;
use crate::trajectory::{gp_posterior_with_mean, GoalConstraint, KernelSpec, ObservationSet, Point, TimeGrid, Trajectory};

/// Partially observed `n1 x N` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceMatrix<T: Real> {
    values: DMatrix<T>,
    mask: DMatrix<bool>,
    rank_hint: usize,
}

impl<T: Real> PreferenceMatrix<T> {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid(format!("preference matrix must be at least 1x1, got {rows}x{cols}"));
        }
        Ok(Self {
            values: DMatrix::zeros(rows, cols),
            mask: DMatrix::from_element(rows, cols, false),
            rank_hint: 1,
        })
    }

    /// Every entry observed.
    pub fn from_dense(values: DMatrix<T>) -> Result<Self> {
        let mut m = Self::new(values.nrows(), values.ncols())?;
        for i in 0..values.nrows() {
            for j in 0..values.ncols() {
                m.observe(i, j, values[(i, j)])?;
            }
        }
        Ok(m)
    }

    pub fn with_rank_hint(mut self, rank_hint: usize) -> Self {
        self.rank_hint = rank_hint;
        self
    }

    pub fn observe(&mut self, row: usize, col: usize, value: T) -> Result<()> {
        if row >= self.rows() || col >= self.cols() {
            return invalid(format!("entry ({row}, {col}) outside {}x{}", self.rows(), self.cols()));
        }
        if !value.is_finite_real() {
            return invalid(format!("entry ({row}, {col}) is not finite"));
        }
        self.values[(row, col)] = value;
        self.mask[(row, col)] = true;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn rank_hint(&self) -> usize {
        self.rank_hint
    }

    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        self.mask[(row, col)].then(|| self.values[(row, col)])
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.mask[(row, col)]
    }

    /// Number of observed entries `k`.
    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Observed entries in row-major order.
    pub fn entries(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.observed_count());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                if self.mask[(i, j)] {
                    out.push((i, j, self.values[(i, j)]));
                }
            }
        }
        out
    }

    /// Copy with one extra (empty) row appended.
    pub fn with_new_row(&self) -> Self {
        let (n, c) = (self.rows(), self.cols());
        let values = self.values.clone().insert_row(n, T::zero());
        let mask = DMatrix::from_fn(n + 1, c, |i, j| i < n && self.mask[(i, j)]);
        Self { values, mask, rank_hint: self.rank_hint }
    }

    /// Header line `n1 N rank_hint`, then one `row col value` line per
    /// observed entry in row-major order.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.rows(), self.cols(), self.rank_hint);
        for (i, j, v) in self.entries() {
            let _ = writeln!(s, "{i} {j} {v:?}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| Error::InvalidArgument("empty preference matrix file".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 {
            return invalid("line 1: expected header `n1 N rank_hint`");
        }
        let parse_usize = |s: &str, line: usize| {
            s.parse::<usize>()
                .map_err(|e| Error::InvalidArgument(format!("line {line}: bad integer `{s}`: {e}")))
        };
        let mut m = Self::new(parse_usize(head[0], 1)?, parse_usize(head[1], 1)?)?;
        m.rank_hint = parse_usize(head[2], 1)?;
        for (line, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 3 {
                return invalid(format!("line {line}: expected `row col value`"));
            }
            let v: f64 = parts[2]
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("line {line}: bad value `{}`: {e}", parts[2])))?;
            m.observe(parse_usize(parts[0], line)?, parse_usize(parts[1], line)?, T::lit(v))
                .map_err(|e| Error::InvalidArgument(format!("line {line}: {e}")))?;
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionOptions {
    pub max_iters: usize,
    /// Stop once the training error improves by less than this.
    pub tol: f64,
    pub ridge: f64,
    /// Seeds the initial column factors.
    pub seed: u64,
    /// Unregularized sweeps after the ridge phase, removing its shrinkage.
    pub refine_iters: usize,
}

impl Default for CompletionOptions {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-14, ridge: 1e-6, seed: 0, refine_iters: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct CompletionResult<T: Real> {
    pub completed: DMatrix<T>,
    pub rank_used: usize,
    /// `||P(X - UV')|| / ||P(X)||` over observed entries.
    pub relative_error_train: T,
    pub converged: bool,
    pub iterations: usize,
    /// Regularized objective after every sweep of the ridge phase.
    pub objective_history: Vec<T>,
    /// Rows with no observation, filled from column means.
    pub unrecoverable_rows: Vec<usize>,
    /// Columns with no observation, filled from row means.
    pub unrecoverable_cols: Vec<usize>,
}

pub fn matrix_complete<T: Real>(m: &PreferenceMatrix<T>, rank: usize, max_iters: usize, tol: f64) -> Result<CompletionResult<T>> {
    matrix_complete_with(m, rank, &CompletionOptions { max_iters, tol, ..CompletionOptions::default() })
}

pub fn matrix_complete_with<T: Real>(
    m: &PreferenceMatrix<T>,
    rank: usize,
    opts: &CompletionOptions,
) -> Result<CompletionResult<T>> {
    let (n1, n) = (m.rows(), m.cols());
    if rank == 0 || rank > n1.min(n) {
        return invalid(format!("rank {rank} outside 1..={}", n1.min(n)));
    }
    if m.observed_count() == 0 {
        return invalid("matrix has no observed entries");
    }
    if !(opts.ridge >= 0.0) || !(opts.tol >= 0.0) {
        return invalid("ridge and tolerance must be non-negative");
    }
    let row_obs: Vec<Vec<usize>> = (0..n1).map(|i| (0..n).filter(|&j| m.mask[(i, j)]).collect()).collect();
    let col_obs: Vec<Vec<usize>> = (0..n).map(|j| (0..n1).filter(|&i| m.mask[(i, j)]).collect()).collect();

    let mut v = spectral_init(m, rank, opts.seed);
    let mut u = DMatrix::<T>::zeros(n1, rank);
    let ridge = T::lit(opts.ridge);

    let mut history = Vec::new();
    let mut prev_err = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iters {
        iterations += 1;
        solve_side(&mut u, &v, &row_obs, |i, j| m.values[(i, j)], ridge);
        solve_side(&mut v, &u, &col_obs, |j, i| m.values[(i, j)], ridge);
        let err = train_residual(m, &u, &v);
        history.push(err + ridge * (u.norm_squared() + v.norm_squared()));
        let err = err.as_f64();
        if prev_err - err < opts.tol {
            converged = true;
            break;
        }
        prev_err = err;
    }
    for _ in 0..opts.refine_iters {
        let before = train_residual(m, &u, &v);
        let (u0, v0) = (u.clone(), v.clone());
        let ok = solve_side(&mut u, &v, &row_obs, |i, j| m.values[(i, j)], T::zero())
            && solve_side(&mut v, &u, &col_obs, |j, i| m.values[(i, j)], T::zero());
        let after = train_residual(m, &u, &v);
        if !ok || !(after <= before) {
            u = u0;
            v = v0;
            break;
        }
        if before - after <= T::zero() {
            break;
        }
    }

    let mut completed = &u * v.transpose();
    let unrecoverable_rows: Vec<usize> = (0..n1).filter(|&i| row_obs[i].is_empty()).collect();
    let unrecoverable_cols: Vec<usize> = (0..n).filter(|&j| col_obs[j].is_empty()).collect();
    if !unrecoverable_rows.is_empty() || !unrecoverable_cols.is_empty() {
        let mean = |idx: &mut dyn Iterator<Item = T>| {
            let (s, c) = idx.fold((T::zero(), 0usize), |(s, c), x| (s + x, c + 1));
            (c > 0).then(|| s / T::lit(c as f64))
        };
        let all: Vec<T> = m.entries().into_iter().map(|e| e.2).collect();
        let global = mean(&mut all.into_iter()).unwrap_or_else(T::zero);
        for &i in &unrecoverable_rows {
            for j in 0..n {
                completed[(i, j)] = mean(&mut col_obs[j].iter().map(|&r| m.values[(r, j)])).unwrap_or(global);
            }
        }
        for &j in &unrecoverable_cols {
            for i in 0..n1 {
                if row_obs[i].is_empty() {
                    continue;
                }
                completed[(i, j)] = mean(&mut row_obs[i].iter().map(|&c| m.values[(i, c)])).unwrap_or(global);
            }
        }
    }

    let observed_norm = m.entries().iter().fold(T::zero(), |a, e| a + e.2 * e.2);
    let resid = train_residual(m, &u, &v);
    let relative_error_train = if observed_norm > T::zero() { (resid / observed_norm).sqrt() } else { resid.sqrt() };
    Ok(CompletionResult {
        completed,
        rank_used: rank,
        relative_error_train,
        converged,
        iterations,
        objective_history: history,
        unrecoverable_rows,
        unrecoverable_cols,
    })
}

/// Column factors from the top singular pairs of the zero-filled matrix
/// rescaled by the observed fraction, plus a small seeded perturbation so no
/// column starts exactly orthogonal to the signal.
fn spectral_init<T: Real>(m: &PreferenceMatrix<T>, rank: usize, seed: u64) -> DMatrix<T> {
    let (n1, n) = (m.rows(), m.cols());
    let frac = T::lit(m.observed_count() as f64 / (n1 * n) as f64);
    let filled = DMatrix::from_fn(n1, n, |i, j| if m.mask[(i, j)] { m.values[(i, j)] / frac } else { T::zero() });
    let svd = filled.svd(false, true);
    let mut rng = seeded(seed);
    let scale = svd.singular_values.max().max(T::one()) * T::lit(1e-3);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap_or(std::cmp::Ordering::Equal));
    let vt = svd.v_t.expect("v_t requested");
    DMatrix::from_fn(n, rank, |j, c| {
        let noise = T::lit(rng.sample::<f64, _>(StandardNormal)) * scale;
        match order.get(c) {
            Some(&k) => vt[(k, j)] * svd.singular_values[k].sqrt() + noise,
            None => noise,
        }
    })
}

/// Ridge least squares for every row of `target` against the fixed factor.
/// Returns false if some unregularized system was singular.
fn solve_side<T: Real>(
    target: &mut DMatrix<T>,
    fixed: &DMatrix<T>,
    obs: &[Vec<usize>],
    value: impl Fn(usize, usize) -> T,
    ridge: T,
) -> bool {
    let r = fixed.ncols();
    let mut ok = true;
    for (a, idx) in obs.iter().enumerate() {
        if idx.is_empty() {
            target.row_mut(a).fill(T::zero());
            continue;
        }
        let mut gram = DMatrix::<T>::identity(r, r) * ridge;
        let mut rhs = DVector::<T>::zeros(r);
        for &b in idx {
            let f = fixed.row(b).transpose();
            gram += &f * f.transpose();
            rhs += f * value(a, b);
        }
        match gram.cholesky() {
            Some(ch) => target.row_mut(a).copy_from(&ch.solve(&rhs).transpose()),
            None => ok = false,
        }
    }
    ok
}

fn train_residual<T: Real>(m: &PreferenceMatrix<T>, u: &DMatrix<T>, v: &DMatrix<T>) -> T {
    let mut s = T::zero();
    for (i, j, x) in m.entries() {
        let pred = u.row(i).dot(&v.row(j));
        s += (x - pred) * (x - pred);
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleComplexityReport {
    pub required_n: u64,
    pub provided_n: u64,
    pub constant_c: f64,
    pub feasible: bool,
}

/// `required_n = max(0, ceil(C * n1^1.2 * r * ln N - k))`.
pub fn sample_complexity(n1: usize, n: usize, r: usize, k: usize, c: f64, provided_n: u64) -> Result<SampleComplexityReport> {
    if n < 2 {
        return invalid(format!("need at least 2 columns, got {n}"));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return invalid(format!("constant C must be finite and non-negative, got {c}"));
    }
    let bound = c * (n1 as f64).powf(1.2) * r as f64 * (n as f64).ln() - k as f64;
    let required_n = bound.ceil().max(0.0) as u64;
    Ok(SampleComplexityReport { required_n, provided_n, constant_c: c, feasible: provided_n >= required_n })
}

/// Completed intent of one new operator.
#[derive(Clone, Debug)]
pub struct OperatorIntent<T: Real> {
    pub intent: ParticleIntent<T>,
    /// One waypoint per platform.
    pub waypoints: Vec<Point<T>>,
    pub report: SampleComplexityReport,
    pub completions: [CompletionResult<T>; 2],
}

/// How completed waypoints become trajectories.
#[derive(Clone, Copy, Debug)]
pub struct LiftSpec<T: Real> {
    pub grid: TimeGrid<T>,
    pub start: Point<T>,
    pub kernel: KernelSpec<T>,
    pub constant_c: f64,
}

/// Appends the new operator's sparse inputs as a row of the per-axis history
/// matrices, completes both, and lifts each platform's waypoint to a particle.
///
/// Inputs of the new operator are kept verbatim in the completed row. Each
/// particle is the goal-conditioned GP posterior mean from `start` to the
/// waypoint; particles are equally weighted.
pub fn complete_operator_intent<T: Real>(
    history: &[PreferenceMatrix<T>; 2],
    new_row_inputs: &[(usize, Point<T>)],
    rank: usize,
    lift: &LiftSpec<T>,
) -> Result<OperatorIntent<T>> {
    if history[0].rows() != history[1].rows() || history[0].cols() != history[1].cols() {
        return invalid("per-axis history matrices differ in shape");
    }
    if new_row_inputs.is_empty() {
        return invalid("new operator row needs at least one input");
    }
    let n = history[0].cols();
    let mut mats = [history[0].with_new_row(), history[1].with_new_row()];
    let row = mats[0].rows() - 1;
    for &(col, p) in new_row_inputs {
        if col >= n {
            return invalid(format!("platform index {col} outside 0..{n}"));
        }
        mats[0].observe(row, col, p.x)?;
        mats[1].observe(row, col, p.y)?;
    }
    let provided = (0..n).filter(|&j| mats[0].is_observed(row, j)).count() as u64;
    // k counts every observed entry, the new operator's inputs included.
    let k = mats[0].observed_count();
    let report = if n >= 2 {
        sample_complexity(mats[0].rows(), n, rank, k, lift.constant_c, provided)?
    } else {
        SampleComplexityReport { required_n: 0, provided_n: provided, constant_c: lift.constant_c, feasible: true }
    };
    let opts = CompletionOptions::default();
    let cx = matrix_complete_with(&mats[0], rank, &opts)?;
    let cy = matrix_complete_with(&mats[1], rank, &opts)?;
    let waypoints: Vec<Point<T>> = (0..n)
        .map(|j| match (mats[0].get(row, j), mats[1].get(row, j)) {
            (Some(x), Some(y)) => Point::new(x, y),
            _ => Point::new(cx.completed[(row, j)], cy.completed[(row, j)]),
        })
        .collect();
    let particles = waypoints
        .iter()
        .map(|w| lift_waypoint(lift, *w))
        .collect::<Result<Vec<_>>>()?;
    Ok(OperatorIntent {
        intent: ParticleIntent::uniform(particles)?,
        waypoints,
        report,
        completions: [cx, cy],
    })
}

fn lift_waypoint<T: Real>(lift: &LiftSpec<T>, waypoint: Point<T>) -> Result<Trajectory<T>> {
    let grid = lift.grid;
    let (t0, t_end) = (grid.t0, grid.end());
    let start = lift.start;
    let line = move |t: T| {
        if t >= t_end {
            waypoint
        } else {
            start + (waypoint - start) * ((t - t0) / (t_end - t0))
        }
    };
    let obs = ObservationSet::single(t0, start, T::lit(0.05))?;
    let goal = GoalConstraint::new(waypoint);
    let belief = gp_posterior_with_mean(&lift.kernel, &obs, &grid, Some(&goal), line)?;
    Ok(belief.mean().clone())
}
