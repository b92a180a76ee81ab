//! Probabilistic beliefs over 2-D agent trajectories.
//!
//! Beliefs are Gaussian processes on a time grid (one independent GP per
//! coordinate axis) or finite mixtures of them. They are built from online
//! measurements with [`gp_posterior`], updated with [`mixture_posterior`],
//! and consumed by the fusion layer through [`sample_trajectories`] and
//! [`log_density`].

mod belief;
mod gp;
mod grid;
mod mixture;

use rand::Rng;

pub use belief::{GaussianTrajectoryBelief, LogDensity};
pub use gp::{gp_posterior, gp_posterior_with_mean, GoalConstraint, KernelKind, KernelSpec};
pub use grid::{Disc, ObservationSet, Point, TimeGrid, Trajectory};
pub use mixture::{mixture_posterior, MixturePosterior, MixtureTrajectoryBelief};
pub(crate) use mixture::weight_tolerance as mixture_weight_tolerance;

use crate::error::{invalid, Result};
use crate::rng::seeded;
use crate::scalar::Real;

/// Anything trajectories can be drawn from and scored against.
pub trait TrajectoryDistribution<T: Real> {
    fn grid(&self) -> &TimeGrid<T>;
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Trajectory<T>;
    fn log_density(&self, traj: &Trajectory<T>) -> Result<LogDensity<T>>;
}

impl<T: Real> TrajectoryDistribution<T> for GaussianTrajectoryBelief<T> {
    fn grid(&self) -> &TimeGrid<T> {
        GaussianTrajectoryBelief::grid(self)
    }
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Trajectory<T> {
        self.sample(rng)
    }
    fn log_density(&self, traj: &Trajectory<T>) -> Result<LogDensity<T>> {
        GaussianTrajectoryBelief::log_density(self, traj)
    }
}

impl<T: Real> TrajectoryDistribution<T> for MixtureTrajectoryBelief<T> {
    fn grid(&self) -> &TimeGrid<T> {
        MixtureTrajectoryBelief::grid(self)
    }
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Trajectory<T> {
        self.sample(rng)
    }
    fn log_density(&self, traj: &Trajectory<T>) -> Result<LogDensity<T>> {
        MixtureTrajectoryBelief::log_density(self, traj)
    }
}

/// Draws `count` trajectories; the `i`-th draw depends only on `seed` and `i`,
/// so a longer draw extends a shorter one with the same seed.
pub fn sample_trajectories<T: Real, B: TrajectoryDistribution<T>>(
    belief: &B,
    count: usize,
    seed: u64,
) -> Result<Vec<Trajectory<T>>> {
    if count == 0 {
        return invalid("sample count must be at least 1");
    }
    let mut rng = seeded(seed);
    Ok((0..count).map(|_| belief.draw(&mut rng)).collect())
}

pub fn log_density<T: Real, B: TrajectoryDistribution<T>>(belief: &B, traj: &Trajectory<T>) -> Result<LogDensity<T>> {
    belief.log_density(traj)
}

/// Beliefs over every physical agent other than the human: the machines the
/// team controls and the environment agents around them.
///
/// Machine 0 is the platform the human operator steers.
#[derive(Clone, Debug)]
pub struct AgentSet<T: Real> {
    pub machines: Vec<MixtureTrajectoryBelief<T>>,
    pub environment: Vec<MixtureTrajectoryBelief<T>>,
    /// Static obstacles, known exactly.
    pub obstacles: Vec<Disc<T>>,
}

impl<T: Real> AgentSet<T> {
    pub fn new(
        machines: Vec<MixtureTrajectoryBelief<T>>,
        environment: Vec<MixtureTrajectoryBelief<T>>,
        obstacles: Vec<Disc<T>>,
    ) -> Result<Self> {
        if machines.is_empty() {
            return invalid("agent set needs at least one machine");
        }
        let grid = *machines[0].grid();
        if machines.iter().chain(&environment).any(|b| !b.grid().same_as(&grid)) {
            return invalid("all agent beliefs must share one time grid");
        }
        Ok(Self { machines, environment, obstacles })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.machines[0].grid()
    }
}
