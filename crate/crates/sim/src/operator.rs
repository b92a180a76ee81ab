use irt_core::rng::{derive_seed, seeded, SimRng};
use irt_core::{Observations64, Point64};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::scenario::{Scenario, WorldState, OPERATOR_STREAM};
use crate::spec::SimParams;

/// One tick of operator input: a joystick direction with norm at most one,
/// plus the intended position it implies, if any.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorInput {
    pub direction: Point64,
    /// Where the operator wants the robot `intent_lookahead` steps from now.
    pub intent: Option<Point64>,
}

impl OperatorInput {
    pub fn silent() -> Self {
        Self { direction: Point64::zeros(), intent: None }
    }

    /// A live joystick deflection. The implied intent extrapolates the
    /// deflection at full speed over the lookahead; a zero deflection carries
    /// no intent.
    pub fn from_direction(direction: Point64, robot: Point64, params: &SimParams) -> Self {
        let direction = clamp_unit(direction);
        if direction.norm() == 0.0 {
            return Self::silent();
        }
        let reach = params.robot.v_max * params.robot.dt * params.planner.intent_lookahead as f64;
        Self { direction, intent: Some(robot + direction * reach) }
    }

    /// The waypoint the robot would take if the operator drove alone.
    pub fn standalone_action(&self, robot: Point64, params: &SimParams) -> Point64 {
        robot + self.direction * (params.robot.v_max * params.robot.dt)
    }

    /// The intent as a one-point observation set at its target time.
    pub fn observation(&self, step: usize, params: &SimParams, noise_std: f64) -> Observations64 {
        match self.intent {
            Some(z) => {
                let t = (step + params.planner.intent_lookahead) as f64 * params.robot.dt;
                let noise = noise_std.max(params.planner.noise_floor);
                Observations64::single(t, z, noise).expect("finite intent observation")
            }
            None => Observations64::empty(),
        }
    }
}

/// Scales `d` back onto the unit disc; non-finite input becomes zero.
pub fn clamp_unit(d: Point64) -> Point64 {
    if !(d.x.is_finite() && d.y.is_finite()) {
        return Point64::zeros();
    }
    let n = d.norm();
    if n > 1.0 { d / n } else { d }
}

/// The scripted operator: knows which route class is best (including after
/// the semantic event) and reports it with Gaussian noise.
#[derive(Clone, Debug)]
pub struct SimulatedOperator {
    rng: SimRng,
    noise_std: f64,
}

impl SimulatedOperator {
    pub fn new(scenario: &Scenario) -> Self {
        Self {
            rng: seeded(derive_seed(scenario.spec.seed, OPERATOR_STREAM)),
            noise_std: scenario.spec.operator_noise_std,
        }
    }

    /// Intent observation and standalone action for `state`. Two normal draws
    /// are consumed every call, so the noise sequence never depends on the
    /// noise level.
    pub fn act(&mut self, scenario: &Scenario, state: &WorldState, params: &SimParams) -> OperatorInput {
        let route = &scenario.routes[scenario.operator_route_at(state.event_fired)];
        let r = &params.robot;
        let lookahead = params.planner.intent_lookahead;
        let path = route.path(state.robot_pos, scenario.axis, r.v_max, r.dt, lookahead);
        let nx: f64 = StandardNormal.sample(&mut self.rng);
        let ny: f64 = StandardNormal.sample(&mut self.rng);
        let intent = path[lookahead] + Point64::new(nx, ny) * self.noise_std;
        let drive = route.path(state.robot_pos, scenario.axis, params.operator_speed, r.dt, 1)[1];
        let direction = clamp_unit((drive - state.robot_pos) / (r.v_max * r.dt));
        OperatorInput { direction, intent: Some(intent) }
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }
}
