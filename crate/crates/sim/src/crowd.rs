//! Goal-driven pedestrians with velocity-level social forces.
//!
//! Each agent heads for its goal at up to `v_max`; neighbours within
//! `interaction_range` push it away with an exponential falloff, and an agent
//! closing in on someone ahead also sidesteps to its right. The robot pushes
//! agents the same way, scaled by the scenario's cooperation level, so
//! `cooperation = 0` gives a crowd that ignores the robot entirely.

use irt_core::rng::SimRng;
use irt_core::Point64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::route::heading;
use crate::spec::Arena;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrowdParams {
    pub v_max: f64,
    /// Body radius used by the repulsion falloff, meters.
    pub agent_radius: f64,
    /// Peak push between agents at contact, m/s.
    pub repulsion: f64,
    /// Falloff length of the push, meters.
    pub repulsion_range: f64,
    /// Peak push from the robot at full cooperation, m/s.
    pub robot_repulsion: f64,
    /// Falloff length of the robot's push, meters.
    pub robot_repulsion_range: f64,
    /// Share of an agent-agent push turned into a rightward sidestep.
    pub keep_right: f64,
    pub interaction_range: f64,
    pub goal_tolerance: f64,
    /// Minimum spacing between spawned agents, meters.
    pub spawn_spacing: f64,
    /// Steps between the semantic event and the crowd reacting to it.
    pub reaction_delay: usize,
}

impl Default for CrowdParams {
    fn default() -> Self {
        Self {
            v_max: 1.2,
            agent_radius: 0.25,
            repulsion: 2.0,
            repulsion_range: 0.3,
            robot_repulsion: 3.0,
            robot_repulsion_range: 1.0,
            keep_right: 0.5,
            interaction_range: 3.0,
            goal_tolerance: 0.3,
            spawn_spacing: 0.7,
            reaction_delay: 0,
        }
    }
}

impl CrowdParams {
    pub fn validate(&self) -> SimResult<()> {
        let vals = [
            ("crowd.v_max", self.v_max),
            ("crowd.agent_radius", self.agent_radius),
            ("crowd.repulsion_range", self.repulsion_range),
            ("crowd.robot_repulsion_range", self.robot_repulsion_range),
            ("crowd.interaction_range", self.interaction_range),
            ("crowd.goal_tolerance", self.goal_tolerance),
            ("crowd.spawn_spacing", self.spawn_spacing),
        ];
        for (name, v) in vals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidSpec(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("crowd.repulsion", self.repulsion), ("crowd.robot_repulsion", self.robot_repulsion), ("crowd.keep_right", self.keep_right)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::InvalidSpec(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrowdAgent {
    pub pos: Point64,
    pub goal: Point64,
    /// Draws a fresh goal from the crowd region on arrival.
    pub wanders: bool,
}

#[derive(Clone, Debug)]
pub struct Crowd {
    pub agents: Vec<CrowdAgent>,
    pub params: CrowdParams,
    /// Where wandering agents pick their goals.
    pub region: Option<Arena>,
    rng: SimRng,
}

impl Crowd {
    pub fn new(agents: Vec<CrowdAgent>, params: CrowdParams, region: Option<Arena>, rng: SimRng) -> Self {
        Self { agents, params, region, rng }
    }

    pub fn empty(params: CrowdParams, rng: SimRng) -> Self {
        Self::new(Vec::new(), params, None, rng)
    }

    pub fn positions(&self) -> Vec<Point64> {
        self.agents.iter().map(|a| a.pos).collect()
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Advances every agent by `dt` seconds. All velocities are computed from
    /// the current positions before any agent moves.
    pub fn step(&mut self, robot: Option<Point64>, cooperation: f64, dt: f64, arena: &Arena) {
        let p = self.params;
        let velocities: Vec<Point64> = (0..self.agents.len())
            .map(|i| self.velocity(i, robot, cooperation, dt))
            .collect();
        for (a, v) in self.agents.iter_mut().zip(velocities) {
            a.pos = arena.clamp(a.pos + v * dt);
        }
        if let Some(region) = self.region {
            for i in 0..self.agents.len() {
                let a = &self.agents[i];
                if a.wanders && (a.goal - a.pos).norm() < p.goal_tolerance {
                    let goal = crossing_goal(&region, a.pos, &mut self.rng);
                    self.agents[i].goal = goal;
                }
            }
        }
    }

    fn velocity(&self, i: usize, robot: Option<Point64>, cooperation: f64, dt: f64) -> Point64 {
        let p = &self.params;
        let me = &self.agents[i];
        let to_goal = me.goal - me.pos;
        let dir = heading(me.pos, me.goal);
        let mut v = dir * p.v_max.min(to_goal.norm() / dt);
        let contact = 2.0 * p.agent_radius;
        for (j, other) in self.agents.iter().enumerate() {
            if j == i {
                continue;
            }
            let away = me.pos - other.pos;
            let d = away.norm();
            if d >= p.interaction_range || d == 0.0 {
                continue;
            }
            let n = away / d;
            let push = p.repulsion * ((contact - d) / p.repulsion_range).exp();
            v += n * push;
            if -n.dot(&dir) > 0.0 {
                v += Point64::new(dir.y, -dir.x) * (p.keep_right * push);
            }
        }
        if let Some(r) = robot {
            let away = me.pos - r;
            let d = away.norm();
            if cooperation > 0.0 && d < p.interaction_range && d > 0.0 {
                let push = cooperation * p.robot_repulsion * ((contact - d) / p.robot_repulsion_range).exp();
                v += away / d * push;
            }
        }
        let speed = v.norm();
        if speed > p.v_max {
            v *= p.v_max / speed;
        }
        v
    }
}

/// A goal in the half of `region` across the horizontal midline from `pos`.
pub fn crossing_goal(region: &Arena, pos: Point64, rng: &mut SimRng) -> Point64 {
    let mid = 0.5 * (region.min.y + region.max.y);
    let x = rng.random_range(region.min.x..=region.max.x);
    let y = if pos.y >= mid {
        rng.random_range(region.min.y..=mid - 0.25 * region.height())
    } else {
        rng.random_range(mid + 0.25 * region.height()..=region.max.y)
    };
    Point64::new(x, y)
}

/// Dart-throwing Poisson-disk placement of `count` points in `region`, each
/// at least `spacing` from the others and accepted by `allowed`.
pub fn poisson_disk(
    region: &Arena,
    count: usize,
    spacing: f64,
    allowed: impl Fn(&Point64) -> bool,
    rng: &mut SimRng,
) -> SimResult<Vec<Point64>> {
    const ATTEMPTS: usize = 2000;
    let mut pts: Vec<Point64> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let c = Point64::new(
                rng.random_range(region.min.x..=region.max.x),
                rng.random_range(region.min.y..=region.max.y),
            );
            let clear = allowed(&c) && pts.iter().all(|q| (c - q).norm() >= spacing);
            if clear {
                pts.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SimError::Placement { requested: count, placed: pts.len() });
        }
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use irt_core::rng::seeded;

    #[test]
    fn lone_agent_walks_straight_at_top_speed() {
        let params = CrowdParams::default();
        let agent = CrowdAgent { pos: Point64::new(0.0, 0.0), goal: Point64::new(10.0, 0.0), wanders: false };
        let mut crowd = Crowd::new(vec![agent], params, None, seeded(0));
        let arena = Arena::new(-1.0, -1.0, 11.0, 1.0);
        for k in 1..=10 {
            crowd.step(None, 1.0, 0.25, &arena);
            let p = crowd.agents[0].pos;
            assert!((p.x - 0.3 * k as f64).abs() < 1e-12 && p.y == 0.0);
        }
    }

    #[test]
    fn zero_cooperation_ignores_robot() {
        let agent = CrowdAgent { pos: Point64::new(0.0, 0.0), goal: Point64::new(5.0, 0.0), wanders: false };
        let arena = Arena::new(-1.0, -2.0, 6.0, 2.0);
        let mut a = Crowd::new(vec![agent.clone()], CrowdParams::default(), None, seeded(0));
        let mut b = Crowd::new(vec![agent], CrowdParams::default(), None, seeded(0));
        for _ in 0..10 {
            a.step(Some(Point64::new(1.0, 0.1)), 0.0, 0.25, &arena);
            b.step(None, 0.0, 0.25, &arena);
        }
        assert_eq!(a.positions(), b.positions());
    }

    #[test]
    fn packing_beyond_capacity_fails() {
        let region = Arena::new(0.0, 0.0, 2.0, 2.0);
        let err = poisson_disk(&region, 50, 0.7, |_| true, &mut seeded(1)).unwrap_err();
        assert!(matches!(err, SimError::Placement { requested: 50, .. }));
        let ok = poisson_disk(&region, 4, 0.7, |_| true, &mut seeded(1)).unwrap();
        for i in 0..4 {
            for j in 0..i {
                assert!((ok[i] - ok[j]).norm() >= 0.7);
            }
        }
    }
}
