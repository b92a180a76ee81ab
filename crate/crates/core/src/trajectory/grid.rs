use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// A 2-D position in meters.
pub type Point<T> = Vector2<T>;

/// Uniform time grid `t0 + k*dt` for `k in 0..=horizon_steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    pub t0: T,
    pub dt: T,
    pub horizon_steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t0: T, dt: T, horizon_steps: usize) -> Result<Self> {
        let grid = Self { t0, dt, horizon_steps };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite_real() || !self.t0.is_finite_real() {
            return invalid(format!("time grid needs finite t0 and dt > 0 (dt = {})", self.dt));
        }
        if self.horizon_steps == 0 {
            return invalid("time grid needs at least one step");
        }
        Ok(())
    }

    /// Number of grid points (`horizon_steps + 1`).
    pub fn len(&self) -> usize {
        self.horizon_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> T {
        self.t0 + self.dt * T::lit(k as f64)
    }

    pub fn end(&self) -> T {
        self.time(self.horizon_steps)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// True when both grids index the same instants (up to rounding).
    pub fn same_as(&self, other: &Self) -> bool {
        let tol = T::lit(1e-9) * (T::one() + self.t0.abs());
        self.horizon_steps == other.horizon_steps
            && (self.t0 - other.t0).abs() <= tol
            && (self.dt - other.dt).abs() <= T::lit(1e-9) * self.dt
    }

    /// Locates `t` for linear interpolation: returns `(k, frac)` with
    /// `t = (1 - frac) * time(k) + frac * time(k + 1)`. `None` outside the grid.
    pub(crate) fn bracket(&self, t: T) -> Option<(usize, T)> {
        let slack = self.dt * T::lit(1e-9);
        if t < self.t0 - slack || t > self.end() + slack {
            return None;
        }
        let u = ((t - self.t0) / self.dt).max(T::zero());
        let k = u.floor().as_f64() as usize;
        if k >= self.horizon_steps {
            return Some((self.horizon_steps - 1, T::one()));
        }
        let frac = (u - T::lit(k as f64)).max(T::zero()).min(T::one());
        Some((k, frac))
    }
}

/// Positions of one agent over a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T: Real> {
    grid: TimeGrid<T>,
    points: Vec<Point<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(grid: TimeGrid<T>, points: Vec<Point<T>>) -> Result<Self> {
        grid.validate()?;
        if points.len() != grid.len() {
            return invalid(format!(
                "trajectory has {} points but its grid has {}",
                points.len(),
                grid.len()
            ));
        }
        if points.iter().any(|p| !p.x.is_finite_real() || !p.y.is_finite_real()) {
            return invalid("trajectory coordinates must be finite");
        }
        Ok(Self { grid, points })
    }

    pub(crate) fn from_parts_unchecked(grid: TimeGrid<T>, points: Vec<Point<T>>) -> Self {
        debug_assert_eq!(points.len(), grid.len());
        Self { grid, points }
    }

    pub fn constant(grid: TimeGrid<T>, p: Point<T>) -> Result<Self> {
        Self::new(grid, vec![p; grid.len()])
    }

    pub fn from_fn(grid: TimeGrid<T>, mut f: impl FnMut(usize, T) -> Point<T>) -> Result<Self> {
        let points = (0..grid.len()).map(|k| f(k, grid.time(k))).collect();
        Self::new(grid, points)
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn point(&self, k: usize) -> Point<T> {
        self.points[k]
    }

    /// The point one grid step ahead of `t0`.
    pub fn next_point(&self) -> Point<T> {
        self.points[1]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Timestamped noisy position measurements of one trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet<T: Real> {
    times: Vec<T>,
    values: Vec<Point<T>>,
    noise_std: Vec<T>,
}

impl<T: Real> ObservationSet<T> {
    pub fn empty() -> Self {
        Self { times: Vec::new(), values: Vec::new(), noise_std: Vec::new() }
    }

    pub fn new(times: Vec<T>, values: Vec<Point<T>>, noise_std: Vec<T>) -> Result<Self> {
        if times.len() != values.len() || times.len() != noise_std.len() {
            return invalid("observation times, values and noise must have equal length");
        }
        let mut set = Self::empty();
        for ((t, v), s) in times.into_iter().zip(values).zip(noise_std) {
            set.push(t, v, s)?;
        }
        Ok(set)
    }

    pub fn single(time: T, value: Point<T>, noise_std: T) -> Result<Self> {
        let mut set = Self::empty();
        set.push(time, value, noise_std)?;
        Ok(set)
    }

    pub fn push(&mut self, time: T, value: Point<T>, noise_std: T) -> Result<()> {
        if !time.is_finite_real() || !value.x.is_finite_real() || !value.y.is_finite_real() {
            return invalid("observations must be finite");
        }
        if !(noise_std > T::zero()) {
            return invalid(format!("observation noise must be positive, got {noise_std}"));
        }
        if let Some(&last) = self.times.last() {
            if time <= last {
                return invalid(format!("observation times must increase strictly ({time} after {last})"));
            }
        }
        self.times.push(time);
        self.values.push(value);
        self.noise_std.push(noise_std);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[Point<T>] {
        &self.values
    }

    pub fn noise_std(&self) -> &[T] {
        &self.noise_std
    }
}

/// A static circular obstacle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc<T: Real> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Real> Disc<T> {
    /// Distance from `p` to the disc surface, zero inside.
    pub fn surface_distance(&self, p: &Point<T>) -> T {
        ((p - self.center).norm() - self.radius).max(T::zero())
    }
}
