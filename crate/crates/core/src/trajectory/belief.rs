use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::{ObservationSet, Point, TimeGrid, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Value of a trajectory log density, with a flag for singular covariances
/// evaluated through the pseudo-inverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDensity<T> {
    pub value: T,
    pub rank_deficient: bool,
}

/// Eigen-factorization of one axis covariance restricted to its numerical range.
#[derive(Clone, Debug)]
struct AxisFactor<T: Real> {
    /// Orthonormal basis of the retained eigenspace, `n x rank`.
    basis: DMatrix<T>,
    sqrt_eig: Vec<T>,
    inv_eig: Vec<T>,
    log_pdet: T,
    null_tol: T,
}

impl<T: Real> AxisFactor<T> {
    fn new(cov: &DMatrix<T>) -> Result<Self> {
        let n = cov.nrows();
        let eig = SymmetricEigen::new(cov.clone());
        let max_eig = eig.eigenvalues.iter().copied().fold(T::zero(), |a, b| a.max(b));
        let min_eig = eig.eigenvalues.iter().copied().fold(T::zero(), |a, b| a.min(b));
        let psd_tol = T::lit(1e-9).max(T::default_epsilon() * T::lit(100.0) * max_eig);
        if min_eig < -psd_tol {
            return Err(Error::InvalidArgument(format!(
                "covariance is not positive semidefinite (min eigenvalue {min_eig})"
            )));
        }
        let rel_cut = if T::default_epsilon() < T::lit(1e-10) { T::lit(1e-10) } else { T::lit(1e-5) };
        let cut = rel_cut * max_eig;
        let keep: Vec<usize> = (0..n)
            .filter(|&i| eig.eigenvalues[i] > cut && eig.eigenvalues[i] > T::zero())
            .collect();
        let mut basis = DMatrix::zeros(n, keep.len());
        let mut sqrt_eig = Vec::with_capacity(keep.len());
        let mut inv_eig = Vec::with_capacity(keep.len());
        let mut log_pdet = T::zero();
        for (c, &i) in keep.iter().enumerate() {
            let lam = eig.eigenvalues[i];
            basis.set_column(c, &eig.eigenvectors.column(i));
            sqrt_eig.push(lam.sqrt());
            inv_eig.push(T::one() / lam);
            log_pdet += lam.ln();
        }
        let null_tol = T::lit(10.0) * (cut.max(T::zero())).sqrt();
        Ok(Self { basis, sqrt_eig, inv_eig, log_pdet, null_tol })
    }

    fn rank(&self) -> usize {
        self.sqrt_eig.len()
    }

    /// `(quadratic form, inside support)` for a residual vector.
    fn quad(&self, resid: &DVector<T>) -> (T, bool) {
        let coeffs = self.basis.tr_mul(resid);
        let mut quad = T::zero();
        for (c, inv) in coeffs.iter().zip(&self.inv_eig) {
            quad += *c * *c * *inv;
        }
        let scale = resid.iter().fold(T::zero(), |a, b| a.max(b.abs()));
        let tol = self.null_tol + T::lit(1e-9) * (T::one() + scale);
        let in_support = if self.rank() == resid.len() {
            true
        } else {
            let null = resid - &self.basis * coeffs;
            null.norm() <= tol
        };
        (quad, in_support)
    }
}

/// Gaussian posterior over one agent's trajectory: a mean path plus one
/// covariance matrix per coordinate axis (axes independent).
#[derive(Clone, Debug)]
pub struct GaussianTrajectoryBelief<T: Real> {
    mean: Trajectory<T>,
    covariance: [DMatrix<T>; 2],
    goal_bias: Option<Point<T>>,
    factors: [AxisFactor<T>; 2],
}

impl<T: Real> GaussianTrajectoryBelief<T> {
    pub fn new(mean: Trajectory<T>, covariance: [DMatrix<T>; 2], goal_bias: Option<Point<T>>) -> Result<Self> {
        let n = mean.len();
        let [cx, cy] = covariance;
        let cx = symmetrized(cx, n, "x")?;
        let cy = symmetrized(cy, n, "y")?;
        let factors = [AxisFactor::new(&cx)?, AxisFactor::new(&cy)?];
        Ok(Self { mean, covariance: [cx, cy], goal_bias, factors })
    }

    /// Point mass on `mean`.
    pub fn degenerate(mean: Trajectory<T>) -> Self {
        let n = mean.len();
        Self::new(mean, [DMatrix::zeros(n, n), DMatrix::zeros(n, n)], None)
            .expect("zero covariance is valid")
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.mean.grid()
    }

    pub fn mean(&self) -> &Trajectory<T> {
        &self.mean
    }

    pub fn covariance(&self, axis: usize) -> &DMatrix<T> {
        &self.covariance[axis]
    }

    pub fn goal_bias(&self) -> Option<Point<T>> {
        self.goal_bias
    }

    /// Same covariance, new mean path.
    pub fn with_mean(&self, mean: Trajectory<T>) -> Result<Self> {
        if !mean.grid().same_as(self.grid()) {
            return invalid("replacement mean must share the belief grid");
        }
        Ok(Self { mean, ..self.clone() })
    }

    pub fn trace(&self) -> T {
        self.covariance[0].trace() + self.covariance[1].trace()
    }

    /// Variance of the marginal position at grid index `k`, averaged over axes.
    pub fn marginal_variance(&self, k: usize) -> T {
        (self.covariance[0][(k, k)] + self.covariance[1][(k, k)]) / T::lit(2.0)
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.factors.iter().any(|f| f.rank() < self.mean.len())
    }

    pub fn log_density(&self, traj: &Trajectory<T>) -> Result<LogDensity<T>> {
        if !traj.grid().same_as(self.grid()) {
            return invalid("trajectory is not on the belief grid");
        }
        let n = self.mean.len();
        let log_2pi = T::two_pi().ln();
        let mut total = T::zero();
        for (axis, factor) in self.factors.iter().enumerate() {
            let resid = DVector::from_fn(n, |k, _| traj.point(k)[axis] - self.mean.point(k)[axis]);
            let (quad, in_support) = factor.quad(&resid);
            if !in_support {
                total = T::neg_infinity();
                break;
            }
            let rank = T::lit(factor.rank() as f64);
            total += -(rank * log_2pi + factor.log_pdet + quad) / T::lit(2.0);
        }
        Ok(LogDensity { value: total, rank_deficient: self.is_rank_deficient() })
    }

    /// Differential entropy on the support of the belief.
    pub fn entropy(&self) -> T {
        let log_2pi_e = T::two_pi().ln() + T::one();
        self.factors
            .iter()
            .map(|f| (T::lit(f.rank() as f64) * log_2pi_e + f.log_pdet) / T::lit(2.0))
            .fold(T::zero(), |a, b| a + b)
    }

    /// Draws one trajectory. Consumes exactly `2 * grid.len()` normals.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Trajectory<T> {
        let n = self.mean.len();
        let mut points: Vec<Point<T>> = self.mean.points().to_vec();
        for (axis, factor) in self.factors.iter().enumerate() {
            let z: Vec<T> = (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
            for (c, s) in factor.sqrt_eig.iter().enumerate() {
                let w = z[c] * *s;
                let col = factor.basis.column(c);
                for k in 0..n {
                    points[k][axis] += col[k] * w;
                }
            }
        }
        Trajectory::from_parts_unchecked(*self.grid(), points)
    }

    /// Exact linear-Gaussian update on observations of the trajectory.
    ///
    /// Observation times must lie on the grid span; off-grid times observe
    /// the linear interpolation of the neighbouring grid points. Returns the
    /// posterior and the log marginal likelihood of `obs`.
    pub fn condition(&self, obs: &ObservationSet<T>) -> Result<(Self, T)> {
        if obs.is_empty() {
            return Ok((self.clone(), T::zero()));
        }
        let n = self.mean.len();
        let m = obs.len();
        let grid = self.grid();
        let mut h = DMatrix::zeros(m, n);
        for (i, &t) in obs.times().iter().enumerate() {
            let (k, frac) = grid
                .bracket(t)
                .ok_or_else(|| Error::InvalidArgument(format!("observation at t={t} is outside the belief grid")))?;
            h[(i, k)] += T::one() - frac;
            h[(i, k + 1)] += frac;
        }
        let log_2pi = T::two_pi().ln();
        let mut log_ml = T::zero();
        let mut means: Vec<Point<T>> = self.mean.points().to_vec();
        let mut covs: Vec<DMatrix<T>> = Vec::with_capacity(2);
        for axis in 0..2 {
            let sigma = &self.covariance[axis];
            let sh = sigma * h.transpose(); // n x m
            let mut s = &h * &sh;
            for i in 0..m {
                let r = obs.noise_std()[i];
                s[(i, i)] += r * r;
            }
            let chol = Cholesky::new(s)
                .ok_or_else(|| Error::SingularModel("innovation covariance is not positive definite".into()))?;
            let mu = DVector::from_fn(n, |k, _| self.mean.point(k)[axis]);
            let z = DVector::from_fn(m, |i, _| obs.values()[i][axis]);
            let innov = z - &h * &mu;
            let alpha = chol.solve(&innov);
            let gain_innov = &sh * &alpha;
            for k in 0..n {
                means[k][axis] += gain_innov[k];
            }
            let log_det: T = chol.l().diagonal().iter().fold(T::zero(), |a, d| a + d.ln()) * T::lit(2.0);
            log_ml += -(innov.dot(&alpha) + log_det + T::lit(m as f64) * log_2pi) / T::lit(2.0);
            let v = chol
                .l()
                .solve_lower_triangular(&sh.transpose())
                .ok_or_else(|| Error::SingularModel("triangular solve failed".into()))?;
            covs.push(sigma - v.transpose() * v);
        }
        let cy = covs.pop().expect("two axes");
        let cx = covs.pop().expect("two axes");
        let mean = Trajectory::new(*grid, means)?;
        Ok((Self::new(mean, [cx, cy], self.goal_bias)?, log_ml))
    }
}

fn symmetrized<T: Real>(c: DMatrix<T>, n: usize, axis: &str) -> Result<DMatrix<T>> {
    if c.nrows() != n || c.ncols() != n {
        return invalid(format!(
            "{axis}-covariance is {}x{}, expected {n}x{n}",
            c.nrows(),
            c.ncols()
        ));
    }
    if c.iter().any(|v| !v.is_finite_real()) {
        return invalid(format!("{axis}-covariance has non-finite entries"));
    }
    let scale = c.iter().fold(T::zero(), |a, b| a.max(b.abs()));
    let asym = (&c - c.transpose()).abs().max();
    if asym > T::lit(1e-8) * (T::one() + scale) {
        return invalid(format!("{axis}-covariance is not symmetric (max asymmetry {asym})"));
    }
    Ok((&c + c.transpose()) / T::lit(2.0))
}
