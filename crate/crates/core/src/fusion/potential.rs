use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::trajectory::{Disc, Point, Trajectory};

/// Coupling between the agents of one joint sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct InteractionParams<T: Real> {
    /// Meters.
    pub safety_radius: T,
    /// In `[0, 1]`; 1 makes coincident agents impossible.
    pub repulsion_strength: T,
    /// Pull between the operator's intended path and machine 0, per m^2.
    pub cohesion_strength: T,
}

impl<T: Real> Default for InteractionParams<T> {
    fn default() -> Self {
        Self {
            safety_radius: T::lit(0.6),
            repulsion_strength: T::lit(0.99),
            cohesion_strength: T::lit(0.5),
        }
    }
}

impl<T: Real> InteractionParams<T> {
    pub fn new(safety_radius: T, repulsion_strength: T, cohesion_strength: T) -> Result<Self> {
        let p = Self { safety_radius, repulsion_strength, cohesion_strength };
        p.validate()?;
        Ok(p)
    }

    /// No coupling at all: the joint posterior factorizes.
    pub fn uncoupled() -> Self {
        Self { safety_radius: T::one(), repulsion_strength: T::zero(), cohesion_strength: T::zero() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.safety_radius > T::zero()) || !self.safety_radius.is_finite_real() {
            return invalid(format!("safety radius must be positive, got {}", self.safety_radius));
        }
        if !(self.repulsion_strength >= T::zero() && self.repulsion_strength <= T::one()) {
            return invalid(format!("repulsion strength {} outside [0, 1]", self.repulsion_strength));
        }
        if !(self.cohesion_strength >= T::zero()) || !self.cohesion_strength.is_finite_real() {
            return invalid(format!("cohesion strength must be non-negative, got {}", self.cohesion_strength));
        }
        Ok(())
    }

    /// `log(1 - alpha * exp(-d^2 / 2r^2))` for a squared distance.
    #[inline]
    pub fn pair_term(&self, dist_sq: T) -> T {
        if self.repulsion_strength == T::zero() {
            return T::zero();
        }
        let r2 = self.safety_radius * self.safety_radius;
        (-(self.repulsion_strength * (-dist_sq / (r2 + r2)).exp())).ln_1p()
    }

    /// Log of the pair factor averaged over an isotropic Gaussian position of
    /// the other agent with per-axis variance `var`.
    #[inline]
    pub fn expected_pair_factor(&self, dist_sq: T, var: T) -> T {
        let r2 = self.safety_radius * self.safety_radius;
        let spread = r2 + var;
        T::one() - self.repulsion_strength * (r2 / spread) * (-dist_sq / (spread + spread)).exp()
    }
}

/// Log interaction potential of one joint sample.
///
/// Repulsion acts between every pair of physical agents (machines and
/// environment) at every grid step; cohesion pulls the human's intended path
/// towards machine 0.
pub fn interaction_potential<T: Real>(
    human: &Trajectory<T>,
    machines: &[Trajectory<T>],
    env: &[Trajectory<T>],
    params: &InteractionParams<T>,
) -> Result<T> {
    let grid = human.grid();
    if machines.iter().chain(env).any(|t| !t.grid().same_as(grid)) {
        return invalid("all trajectories must share one time grid");
    }
    let physical: Vec<&Trajectory<T>> = machines.iter().chain(env).collect();
    let first_machine = machines.first();
    Ok(log_potential(Some(human), first_machine, &physical, params))
}

pub(crate) fn log_potential<T: Real>(
    human: Option<&Trajectory<T>>,
    own_machine: Option<&Trajectory<T>>,
    physical: &[&Trajectory<T>],
    params: &InteractionParams<T>,
) -> T {
    let mut total = T::zero();
    if params.repulsion_strength > T::zero() {
        for a in 0..physical.len() {
            for b in (a + 1)..physical.len() {
                let (pa, pb) = (physical[a].points(), physical[b].points());
                for (x, y) in pa.iter().zip(pb) {
                    total += params.pair_term((x - y).norm_squared());
                }
            }
        }
    }
    if let (Some(h), Some(m)) = (human, own_machine) {
        total += cohesion(h, m, params);
    }
    total
}

pub(crate) fn cohesion<T: Real>(human: &Trajectory<T>, machine: &Trajectory<T>, params: &InteractionParams<T>) -> T {
    if params.cohesion_strength == T::zero() {
        return T::zero();
    }
    let sq = human
        .points()
        .iter()
        .zip(machine.points())
        .fold(T::zero(), |acc, (a, b)| acc + (a - b).norm_squared());
    -params.cohesion_strength * sq
}

/// Repulsion of machine trajectories from static obstacles, using the
/// distance to the obstacle surface.
pub fn obstacle_potential<T: Real>(machines: &[&Trajectory<T>], obstacles: &[Disc<T>], params: &InteractionParams<T>) -> T {
    let mut total = T::zero();
    if params.repulsion_strength == T::zero() {
        return total;
    }
    for m in machines {
        for p in m.points() {
            for o in obstacles {
                let d = o.surface_distance(p);
                total += params.pair_term(d * d);
            }
        }
    }
    total
}

pub(crate) fn dist_sq<T: Real>(a: &Point<T>, b: &Point<T>) -> T {
    (a - b).norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TimeGrid;

    fn line(grid: TimeGrid<f64>, y: f64) -> Trajectory<f64> {
        Trajectory::from_fn(grid, |k, _| Point::new(k as f64, y)).unwrap()
    }

    #[test]
    fn far_agents_leave_only_cohesion() {
        let g = TimeGrid::new(0.0, 1.0, 3).unwrap();
        let p = InteractionParams::new(0.5, 0.9, 0.5).unwrap();
        let h = line(g, 1.0);
        let m = vec![line(g, 0.0)];
        let e = vec![line(g, 1e6), line(g, -1e6)];
        let v = interaction_potential(&h, &m, &e, &p).unwrap();
        // 4 steps, unit offset each: -0.5 * 4.
        assert!((v - (-2.0)).abs() < 1e-12);
    }

    #[test]
    fn coincident_step_contributes_log_one_percent() {
        let g = TimeGrid::new(0.0, 1.0, 1).unwrap();
        let p = InteractionParams::new(0.5, 0.99, 0.0).unwrap();
        let a = Trajectory::new(g, vec![Point::new(0.0, 0.0), Point::new(1e6, 0.0)]).unwrap();
        let b = Trajectory::new(g, vec![Point::new(0.0, 0.0), Point::new(-1e6, 0.0)]).unwrap();
        let v = interaction_potential(&a, std::slice::from_ref(&a), &[b], &p).unwrap();
        assert!((v - 0.01f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let g1 = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let g2 = TimeGrid::new(0.0, 0.5, 2).unwrap();
        let p = InteractionParams::default();
        assert!(interaction_potential(&line(g1, 0.0), &[line(g1, 0.0)], &[line(g2, 1.0)], &p).is_err());
    }

    #[test]
    fn params_validated() {
        assert!(InteractionParams::new(0.0, 0.5, 0.0).is_err());
        assert!(InteractionParams::new(1.0, 1.5, 0.0).is_err());
        assert!(InteractionParams::new(1.0, 0.5, -1.0).is_err());
    }

    #[test]
    fn expected_factor_reduces_to_point_factor() {
        let p = InteractionParams::<f64>::new(0.7, 0.8, 0.0).unwrap();
        let d2 = 0.3;
        let point = p.pair_term(d2).exp();
        assert!((p.expected_pair_factor(d2, 0.0) - point).abs() < 1e-14);
    }
}
