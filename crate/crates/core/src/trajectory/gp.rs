use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::belief::GaussianTrajectoryBelief;
use super::grid::{ObservationSet, Point, TimeGrid, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    SquaredExponential,
}

/// Covariance function of the trajectory prior, shared by both axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct KernelSpec<T: Real> {
    #[serde(default)]
    pub kind: KernelKind,
    /// Seconds.
    pub length_scale: T,
    /// Square meters.
    pub signal_variance: T,
}

impl<T: Real> Default for KernelSpec<T> {
    fn default() -> Self {
        Self {
            kind: KernelKind::SquaredExponential,
            length_scale: T::lit(2.0),
            signal_variance: T::one(),
        }
    }
}

impl<T: Real> KernelSpec<T> {
    pub fn squared_exponential(length_scale: T, signal_variance: T) -> Result<Self> {
        let k = Self { kind: KernelKind::SquaredExponential, length_scale, signal_variance };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale > T::zero()) || !self.length_scale.is_finite_real() {
            return invalid(format!("kernel length scale must be positive, got {}", self.length_scale));
        }
        if !(self.signal_variance > T::zero()) || !self.signal_variance.is_finite_real() {
            return invalid(format!(
                "kernel signal variance must be positive, got {}",
                self.signal_variance
            ));
        }
        Ok(())
    }

    pub fn eval(&self, a: T, b: T) -> T {
        match self.kind {
            KernelKind::SquaredExponential => {
                let d = (a - b) / self.length_scale;
                self.signal_variance * (-(d * d) / T::lit(2.0)).exp()
            }
        }
    }

    pub fn matrix(&self, rows: &[T], cols: &[T]) -> DMatrix<T> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.eval(rows[i], cols[j]))
    }
}

/// Goal position entered as a pseudo-observation at the final grid time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalConstraint<T: Real> {
    pub position: Point<T>,
    pub noise_std: T,
}

impl<T: Real> GoalConstraint<T> {
    pub const DEFAULT_NOISE_STD: f64 = 0.1;

    pub fn new(position: Point<T>) -> Self {
        Self { position, noise_std: T::lit(Self::DEFAULT_NOISE_STD) }
    }

    pub fn with_noise(position: Point<T>, noise_std: T) -> Self {
        Self { position, noise_std }
    }
}

/// Zero-mean GP regression of a trajectory on `grid`, each axis independent.
pub fn gp_posterior<T: Real>(
    kernel: &KernelSpec<T>,
    obs: &ObservationSet<T>,
    grid: &TimeGrid<T>,
    goal: Option<&GoalConstraint<T>>,
) -> Result<GaussianTrajectoryBelief<T>> {
    gp_posterior_with_mean(kernel, obs, grid, goal, |_| Point::zeros())
}

/// GP regression around an arbitrary prior mean function of time.
pub fn gp_posterior_with_mean<T: Real>(
    kernel: &KernelSpec<T>,
    obs: &ObservationSet<T>,
    grid: &TimeGrid<T>,
    goal: Option<&GoalConstraint<T>>,
    prior_mean: impl Fn(T) -> Point<T>,
) -> Result<GaussianTrajectoryBelief<T>> {
    kernel.validate()?;
    grid.validate()?;
    let end = grid.end();
    if let Some(&last) = obs.times().last() {
        if last > end + grid.dt * T::lit(1e-9) {
            return invalid(format!("observation at t={last} lies beyond the grid end {end}"));
        }
    }
    if let Some(g) = goal {
        if !(g.noise_std > T::zero()) {
            return invalid("goal pseudo-observation noise must be positive");
        }
    }

    let grid_times = grid.times();
    let mut train_t: Vec<T> = obs.times().to_vec();
    let mut train_y: Vec<Point<T>> = obs.values().to_vec();
    let mut noise: Vec<T> = obs.noise_std().to_vec();
    if let Some(g) = goal {
        train_t.push(end);
        train_y.push(g.position);
        noise.push(g.noise_std);
    }

    let prior_on_grid: Vec<Point<T>> = grid_times.iter().map(|&t| prior_mean(t)).collect();
    let k_ss = kernel.matrix(&grid_times, &grid_times);

    let (mean_points, cov) = if train_t.is_empty() {
        (prior_on_grid, k_ss)
    } else {
        let n = train_t.len();
        let jitter = T::lit(T::JITTER);
        let mut k_tt = kernel.matrix(&train_t, &train_t);
        for i in 0..n {
            k_tt[(i, i)] += noise[i] * noise[i] + jitter;
        }
        let chol = Cholesky::new(k_tt).ok_or_else(|| {
            Error::SingularModel("training covariance is not positive definite after jitter".into())
        })?;
        let k_st = kernel.matrix(&grid_times, &train_t);

        let mut means = prior_on_grid;
        for axis in 0..2 {
            let resid = DVector::from_fn(n, |i, _| train_y[i][axis] - prior_mean(train_t[i])[axis]);
            let alpha = chol.solve(&resid);
            let shift = &k_st * alpha;
            for (k, p) in means.iter_mut().enumerate() {
                p[axis] += shift[k];
            }
        }
        // K_ss - K_st K_tt^-1 K_ts, via the triangular factor.
        let v = chol.l().solve_lower_triangular(&k_st.transpose()).ok_or_else(|| {
            Error::SingularModel("triangular solve failed on the training factor".into())
        })?;
        let cov = k_ss - v.transpose() * v;
        (means, cov)
    };

    let mean = Trajectory::new(*grid, mean_points)?;
    GaussianTrajectoryBelief::new(mean, [cov.clone(), cov], goal.map(|g| g.position))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid<f64> {
        TimeGrid::new(0.0, 0.5, 4).unwrap()
    }

    #[test]
    fn no_observations_returns_prior() {
        let k = KernelSpec::default();
        let b = gp_posterior(&k, &ObservationSet::empty(), &grid(), None).unwrap();
        let times = grid().times();
        for p in b.mean().points() {
            assert_eq!(*p, Point::zeros());
        }
        let prior = k.matrix(&times, &times);
        assert!((b.covariance(0) - &prior).abs().max() < 1e-15);
        assert!((b.covariance(1) - &prior).abs().max() < 1e-15);
    }

    #[test]
    fn nearly_noiseless_observation_is_interpolated() {
        let obs = ObservationSet::single(0.0, Point::new(1.0, 2.0), 1e-6).unwrap();
        let b = gp_posterior(&KernelSpec::default(), &obs, &grid(), None).unwrap();
        let p = b.mean().point(0);
        assert!((p - Point::new(1.0, 2.0)).norm() < 1e-4);
    }

    #[test]
    fn goal_pulls_final_point() {
        let goal = GoalConstraint::with_noise(Point::new(3.0, -1.0), 1e-3);
        let b = gp_posterior(&KernelSpec::default(), &ObservationSet::empty(), &grid(), Some(&goal)).unwrap();
        assert!((b.mean().point(4) - goal.position).norm() < 1e-3);
        assert_eq!(b.goal_bias(), Some(goal.position));
    }

    #[test]
    fn observation_past_grid_end_is_rejected() {
        let obs = ObservationSet::single(5.0, Point::new(0.0, 0.0), 0.1).unwrap();
        let err = gp_posterior(&KernelSpec::default(), &obs, &grid(), None).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn invalid_kernel_is_rejected() {
        let k = KernelSpec { kind: KernelKind::SquaredExponential, length_scale: 0.0, signal_variance: 1.0 };
        assert!(gp_posterior(&k, &ObservationSet::empty(), &grid(), None).is_err());
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        let g = TimeGrid { t0: 0.0, dt: 0.5, horizon_steps: 0 };
        let err = gp_posterior(&KernelSpec::default(), &ObservationSet::empty(), &g, None).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn prior_mean_is_respected() {
        let obs = ObservationSet::single(0.0, Point::new(1.0, 1.0), 0.01).unwrap();
        let b = gp_posterior_with_mean(&KernelSpec::default(), &obs, &grid(), None, |t| {
            Point::new(1.0 + t, 1.0)
        })
        .unwrap();
        // Observation agrees with the prior mean, so the mean is unchanged.
        for k in 0..grid().len() {
            let t = grid().time(k);
            assert!((b.mean().point(k) - Point::new(1.0 + t, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let g = TimeGrid::new(0.0_f32, 0.5, 4).unwrap();
        let obs = ObservationSet::single(0.0_f32, Point::new(1.0, 2.0), 0.01).unwrap();
        let b = gp_posterior(&KernelSpec::default(), &obs, &g, None).unwrap();
        assert!((b.mean().point(0) - Point::new(1.0, 2.0)).norm() < 1e-3);
    }
}
