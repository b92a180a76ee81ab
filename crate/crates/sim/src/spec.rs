use irt_core::Point64;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    BimodalCorridor,
    CrowdNavigation,
    ElevatorSemantic,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] =
        [ScenarioKind::BimodalCorridor, ScenarioKind::CrowdNavigation, ScenarioKind::ElevatorSemantic];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::BimodalCorridor => "bimodal_corridor",
            ScenarioKind::CrowdNavigation => "crowd_navigation",
            ScenarioKind::ElevatorSemantic => "elevator_semantic",
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = SimError;

    fn from_str(s: &str) -> SimResult<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SimError::InvalidSpec(format!("unknown scenario kind `{s}`")))
    }
}

/// Axis-aligned rectangle in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arena {
    pub min: Point64,
    pub max: Point64,
}

impl Arena {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { min: Point64::new(x0, y0), max: Point64::new(x1, y1) }
    }

    pub fn contains(&self, p: &Point64) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Point64) -> Point64 {
        Point64::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// One episode's world: geometry, stressor levels, and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Agents per square meter of the crowd region.
    pub crowd_density: f64,
    /// Spread of the human intent model around each route, meters.
    pub operator_fidelity_sigma: f64,
    /// Standard deviation of the operator's intent observations, meters.
    pub operator_noise_std: f64,
    /// Probability that the autonomy's goal estimate is the true goal.
    pub autonomy_reliability: f64,
    pub semantic_event_step: Option<usize>,
    pub seed: u64,
    pub arena: Arena,
    pub start: Point64,
    pub goal: Point64,
    /// How readily crowd agents yield to the robot, in `[0, 1]`.
    pub cooperation: f64,
    pub max_steps: usize,
}

impl ScenarioSpec {
    /// The reference layout of each scenario kind.
    pub fn default_for(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::BimodalCorridor => Self {
                kind,
                crowd_density: 0.0,
                operator_fidelity_sigma: 0.5,
                operator_noise_std: 0.1,
                autonomy_reliability: 1.0,
                semantic_event_step: None,
                seed: 0,
                arena: Arena::new(0.0, -5.0, 12.0, 5.0),
                start: Point64::new(1.0, 0.0),
                goal: Point64::new(11.0, 0.0),
                cooperation: 1.0,
                max_steps: 160,
            },
            ScenarioKind::CrowdNavigation => Self {
                kind,
                crowd_density: 0.3,
                operator_fidelity_sigma: 1.0,
                operator_noise_std: 0.1,
                autonomy_reliability: 1.0,
                semantic_event_step: None,
                seed: 0,
                arena: Arena::new(0.0, -6.0, 16.0, 6.0),
                start: Point64::new(1.0, 0.0),
                goal: Point64::new(15.0, 0.0),
                cooperation: 1.0,
                max_steps: 240,
            },
            ScenarioKind::ElevatorSemantic => Self {
                kind,
                crowd_density: 0.0,
                operator_fidelity_sigma: 0.5,
                operator_noise_std: 0.1,
                autonomy_reliability: 1.0,
                semantic_event_step: Some(2),
                seed: 0,
                arena: Arena::new(0.0, -4.0, 14.0, 4.0),
                start: Point64::new(1.0, 0.0),
                goal: Point64::new(13.0, 0.0),
                cooperation: 0.5,
                max_steps: 200,
            },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> SimResult<()> {
        let bad = |m: String| Err(SimError::InvalidSpec(m));
        let a = &self.arena;
        if !(a.width() > 0.0 && a.height() > 0.0) || !a.min.iter().chain(a.max.iter()).all(|v| v.is_finite()) {
            return bad(format!("arena {:?}..{:?} is degenerate", a.min, a.max));
        }
        if !(self.crowd_density >= 0.0 && self.crowd_density.is_finite()) {
            return bad(format!("crowd_density must be >= 0, got {}", self.crowd_density));
        }
        if !(self.operator_fidelity_sigma > 0.0 && self.operator_fidelity_sigma.is_finite()) {
            return bad(format!("operator_fidelity_sigma must be > 0, got {}", self.operator_fidelity_sigma));
        }
        if !(self.operator_noise_std >= 0.0 && self.operator_noise_std.is_finite()) {
            return bad(format!("operator_noise_std must be >= 0, got {}", self.operator_noise_std));
        }
        for (name, v) in [("autonomy_reliability", self.autonomy_reliability), ("cooperation", self.cooperation)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        for (name, p) in [("start", self.start), ("goal", self.goal)] {
            if !a.contains(&p) {
                return bad(format!("{name} {p:?} lies outside the arena"));
            }
        }
        if (self.goal - self.start).norm() < 1.0 {
            return bad("start and goal must be at least 1 m apart".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        Ok(())
    }
}

/// Robot kinematics and episode termination thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotParams {
    pub v_max: f64,
    pub dt: f64,
    pub collision_radius: f64,
    pub freeze_epsilon: f64,
    pub freeze_window: usize,
    pub goal_radius: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self { v_max: 1.5, dt: 0.25, collision_radius: 0.4, freeze_epsilon: 0.2, freeze_window: 12, goal_radius: 0.3 }
    }
}

/// How the episode loop turns the world into trajectory beliefs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerParams {
    pub horizon_steps: usize,
    /// Kernel length scale shared by every belief, seconds.
    pub length_scale: f64,
    /// Signal variance of the autonomy's own route components.
    pub machine_variance: f64,
    /// Signal variance of predicted crowd motion.
    pub crowd_variance: f64,
    /// Noise on the pseudo-observation pinning each belief to the present.
    pub pin_noise: f64,
    /// Prior weight of the autonomy's wait-in-place component.
    pub hold_weight: f64,
    /// Per-step probability mass the route filters leak back to uniform.
    pub machine_hazard: f64,
    pub human_hazard: f64,
    /// Spread of the robot's executed step around each route's prediction.
    pub motion_noise: f64,
    /// How far ahead (steps) the operator's intent observation points.
    pub intent_lookahead: usize,
    /// Lower bound on the observation noise used in likelihoods.
    pub noise_floor: f64,
    pub sensing_radius: f64,
    pub max_crowd_agents: usize,
    /// Lateral spacing of the sidestep variants added near crowd agents, meters.
    pub detour_offset: f64,
    /// Distance ahead at which a sidestep reaches its full offset, meters.
    pub detour_reach: f64,
    /// Share of each route's weight moved onto its sidesteps.
    pub detour_share: f64,
    /// Speed of the creeping variant as a fraction of top speed.
    pub creep_fraction: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            horizon_steps: 16,
            length_scale: 2.0,
            machine_variance: 0.1,
            crowd_variance: 1.0,
            pin_noise: 0.02,
            hold_weight: 0.1,
            machine_hazard: 0.05,
            human_hazard: 0.05,
            motion_noise: 0.2,
            intent_lookahead: 8,
            noise_floor: 0.05,
            sensing_radius: 5.0,
            max_crowd_agents: 6,
            detour_offset: 0.8,
            detour_reach: 2.0,
            detour_share: 0.4,
            creep_fraction: 0.4,
        }
    }
}

/// Everything about the simulated world that is not a stressor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    pub robot: RobotParams,
    pub planner: PlannerParams,
    pub crowd: crate::crowd::CrowdParams,
    /// Speed at which the operator drives when steering alone, m/s.
    pub operator_speed: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            robot: RobotParams::default(),
            planner: PlannerParams::default(),
            crowd: crate::crowd::CrowdParams::default(),
            operator_speed: 1.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> SimResult<()> {
        let r = &self.robot;
        let p = &self.planner;
        let positive = [
            ("robot.v_max", r.v_max),
            ("robot.dt", r.dt),
            ("robot.collision_radius", r.collision_radius),
            ("robot.freeze_epsilon", r.freeze_epsilon),
            ("robot.goal_radius", r.goal_radius),
            ("planner.length_scale", p.length_scale),
            ("planner.machine_variance", p.machine_variance),
            ("planner.crowd_variance", p.crowd_variance),
            ("planner.pin_noise", p.pin_noise),
            ("planner.motion_noise", p.motion_noise),
            ("planner.noise_floor", p.noise_floor),
            ("planner.detour_offset", p.detour_offset),
            ("planner.detour_reach", p.detour_reach),
            ("operator_speed", self.operator_speed),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidSpec(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("planner.hold_weight", p.hold_weight), ("planner.machine_hazard", p.machine_hazard), ("planner.human_hazard", p.human_hazard), ("planner.detour_share", p.detour_share)] {
            if !(0.0..1.0).contains(&v) {
                return Err(SimError::InvalidSpec(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if !(p.creep_fraction > 0.0 && p.creep_fraction <= 1.0) {
            return Err(SimError::InvalidSpec(format!("planner.creep_fraction must lie in (0, 1], got {}", p.creep_fraction)));
        }
        if r.freeze_window == 0 || p.horizon_steps < 2 || p.intent_lookahead == 0 || p.intent_lookahead > p.horizon_steps {
            return Err(SimError::InvalidSpec(
                "need freeze_window >= 1, horizon_steps >= 2 and 1 <= intent_lookahead <= horizon_steps".into(),
            ));
        }
        self.crowd.validate()
    }
}
