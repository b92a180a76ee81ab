use irt_core::fusion::{
    autonomy_joint_posterior, decoupled_fuse, irt_fuse, irt_joint_posterior, linear_blend, particle_fuse,
};
use irt_core::rng::derive_seed;
use irt_core::trajectory::mixture_posterior;
use irt_core::{
    AgentSet64, Architecture, Decision64, Disc64, FusionDecision, Interaction64, MixtureBelief64, Particles64,
    Point64, Schedule64, TimeGrid64,
};
use serde::{Deserialize, Serialize};

use crate::beliefs::{crowd_belief, detours, leak, nearby_agents, planning_grid, reweigh_by_motion, route_mixture};
use crate::error::{SimError, SimResult};
use crate::operator::{OperatorInput, SimulatedOperator};
use crate::route::{step_toward, Route};
use crate::scenario::{build_scenario, Scenario, WorldState};
use crate::spec::{ScenarioKind, ScenarioSpec, SimParams};

const FUSION_STREAM: u64 = 1 << 41;
const PARTICLE_STREAM: u64 = 1 << 42;
/// Crowd positions kept for each agent's track.
const TRACK_LEN: usize = 3;

/// Parameters of every fusion rule the episode loop can run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionParams {
    pub interaction: Interaction64,
    /// Schedule used by the `linear` architecture.
    pub linear: Schedule64,
    /// Schedule used by the `switching` architecture; every value must be 0 or 1.
    pub switching: Schedule64,
    /// Joint samples drawn per decision.
    pub count: usize,
    /// When set, `irt` replaces the human belief by this many particles.
    pub particles: Option<usize>,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            interaction: Interaction64::default(),
            linear: Schedule64::Constant { k_h: 0.5 },
            switching: Schedule64::playbook(),
            count: 1000,
            particles: None,
        }
    }
}

impl FusionParams {
    /// Defaults tuned per scenario. Dense crowds want a wider, harder
    /// repulsion and almost no pull toward the operator, because the operator
    /// there only knows the rough direction of the goal.
    pub fn default_for(kind: ScenarioKind) -> Self {
        let mut params = Self::default();
        if kind == ScenarioKind::CrowdNavigation {
            params.interaction = Interaction64 { safety_radius: 1.0, repulsion_strength: 0.999, cohesion_strength: 0.01 };
        }
        params
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn validate(&self) -> SimResult<()> {
        self.interaction.validate()?;
        self.linear.validate()?;
        self.switching.validate()?;
        if !matches!(self.switching, Schedule64::Switching { .. }) {
            return Err(SimError::InvalidSpec("the switching architecture needs a switching schedule".into()));
        }
        if self.count == 0 || self.particles == Some(0) {
            return Err(SimError::InvalidSpec("sample and particle counts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedGoal,
    Collision,
    Frozen,
    Timeout,
    /// Stopped early: a fusion error or a lost teleoperation client.
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub spec: ScenarioSpec,
    pub architecture: Architecture,
    pub params: SimParams,
    pub fusion: FusionParams,
    pub obstacles: Vec<Disc64>,
    pub states: Vec<WorldState>,
    pub decisions: Vec<Decision64>,
    pub termination: Termination,
    /// Why the episode was aborted, when it was.
    pub invalid: Option<String>,
}

impl EpisodeTrace {
    pub fn robot_path(&self) -> Vec<Point64> {
        self.states.iter().map(|s| s.robot_pos).collect()
    }

    pub fn is_valid(&self) -> bool {
        self.invalid.is_none()
    }
}

/// Everything one fusion decision sees at one step.
#[derive(Clone, Debug)]
pub struct StepContext {
    pub step: usize,
    pub seed: u64,
    /// `None` until the operator has said anything.
    pub human: Option<MixtureBelief64>,
    pub human_weights: Vec<f64>,
    pub agents: AgentSet64,
    pub human_action: Point64,
}

/// A running episode. Drive it with [`Episode::step`] (scripted operator) or
/// [`Episode::step_with`] (live or replayed input).
#[derive(Clone, Debug)]
pub struct Episode {
    scenario: Scenario,
    params: SimParams,
    fusion: FusionParams,
    architecture: Architecture,
    operator: SimulatedOperator,
    states: Vec<WorldState>,
    decisions: Vec<Decision64>,
    human_weights: Vec<f64>,
    machine_weights: Vec<f64>,
    machine_prior: Vec<f64>,
    heard_operator: bool,
    termination: Option<Termination>,
    invalid: Option<String>,
}

impl Episode {
    pub fn new(spec: &ScenarioSpec, architecture: Architecture, fusion: &FusionParams, params: &SimParams) -> SimResult<Self> {
        fusion.validate()?;
        let mut scenario = build_scenario(spec, params)?;
        scenario.initial.event_fired = spec.semantic_event_step == Some(0);
        let hold = params.planner.hold_weight;
        let mut machine_prior: Vec<f64> = scenario.autonomy_weights.iter().map(|w| w * (1.0 - hold)).collect();
        machine_prior.push(hold);
        let n_routes = scenario.routes.len();
        let mut ep = Self {
            operator: SimulatedOperator::new(&scenario),
            params: *params,
            fusion: fusion.clone(),
            architecture,
            states: vec![scenario.initial.clone()],
            decisions: Vec::new(),
            human_weights: vec![1.0 / n_routes as f64; n_routes],
            machine_weights: machine_prior.clone(),
            machine_prior,
            heard_operator: false,
            termination: None,
            invalid: None,
            scenario,
        };
        if spec.semantic_event_step.is_some_and(|e| e + ep.params.crowd.reaction_delay == 0) {
            ep.release_waiting_crowd();
        }
        ep.termination = ep.check_termination();
        Ok(ep)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn state(&self) -> &WorldState {
        self.states.last().expect("episode has an initial state")
    }

    pub fn states(&self) -> &[WorldState] {
        &self.states
    }

    pub fn decisions(&self) -> &[Decision64] {
        &self.decisions
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn set_architecture(&mut self, architecture: Architecture) {
        self.architecture = architecture;
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    pub fn is_done(&self) -> bool {
        self.termination.is_some()
    }

    /// Advances one step with the scripted operator.
    pub fn step(&mut self) -> Option<Termination> {
        if self.is_done() {
            return self.termination;
        }
        let state = self.state().clone();
        let input = self.operator.act(&self.scenario, &state, &self.params);
        self.step_with(input)
    }

    /// Advances one step with the given operator input.
    pub fn step_with(&mut self, input: OperatorInput) -> Option<Termination> {
        if self.is_done() {
            return self.termination;
        }
        let outcome = self.context(&input).and_then(|ctx| Ok((self.decide(&ctx, self.architecture)?, ctx)));
        let (decision, ctx) = match outcome {
            Ok(v) => v,
            Err(e) => {
                self.invalid = Some(e.to_string());
                self.termination = Some(Termination::Aborted);
                return self.termination;
            }
        };
        let state = self.state().clone();
        let r = self.params.robot;
        let spec = self.scenario.spec.clone();
        let next_pos = spec.arena.clamp(step_toward(state.robot_pos, decision.action, r.v_max * r.dt));

        let moved = reweigh_by_motion(&ctx.agents.machines[0], &self.machine_weights, next_pos, self.params.planner.motion_noise);
        self.machine_weights = leak(&moved, &self.machine_prior, self.params.planner.machine_hazard);
        self.human_weights = ctx.human_weights;
        self.heard_operator |= input.intent.is_some();

        let (cooperation, dt, arena) = (spec.cooperation, r.dt, spec.arena);
        self.scenario.crowd.step(Some(state.robot_pos), cooperation, dt, &arena);
        let step = state.step + 1;
        if let Some(e) = spec.semantic_event_step {
            if step == e + self.params.crowd.reaction_delay {
                self.release_waiting_crowd();
            }
        }
        let event_fired = state.event_fired || spec.semantic_event_step.is_some_and(|e| step >= e);
        self.decisions.push(decision);
        self.states.push(WorldState {
            step,
            robot_pos: next_pos,
            human_intent_obs: input.intent,
            crowd_positions: self.scenario.crowd.positions(),
            event_fired,
        });
        self.termination = self.check_termination();
        self.termination
    }

    /// Sends the waiting group to the elevator queue.
    fn release_waiting_crowd(&mut self) {
        let goals = self.scenario.event_goals.clone();
        for (agent, goal) in self.scenario.crowd.agents.iter_mut().filter(|a| !a.wanders).zip(goals) {
            agent.goal = goal;
        }
    }

    /// Builds the beliefs for the current step given this step's input.
    pub fn context(&self, input: &OperatorInput) -> SimResult<StepContext> {
        let state = self.state();
        let p = &self.params;
        let grid = planning_grid(state.step, p);
        let pos = state.robot_pos;
        let axis = self.scenario.axis;

        let n = self.scenario.routes.len();
        let uniform = vec![1.0 / n as f64; n];
        let prior_w = leak(&self.human_weights, &uniform, p.planner.human_hazard);
        let sigma = self.scenario.spec.operator_fidelity_sigma;
        let prior = route_mixture(&self.scenario.routes, &prior_w, false, &[], pos, axis, &grid, sigma * sigma, p)?;
        let obs = input.observation(state.step, p, self.scenario.spec.operator_noise_std);
        let (belief, human_weights) = if obs.is_empty() {
            (prior, prior_w)
        } else {
            let post = mixture_posterior(&prior, &obs)?.belief;
            let w = post.weights().to_vec();
            (post, w)
        };
        let human = (self.heard_operator || input.intent.is_some()).then_some(belief);

        let near = nearby_agents(pos, &state.crowd_positions, p.planner.sensing_radius, p.planner.max_crowd_agents);
        let machine = self.machine_belief(pos, &grid, !near.is_empty())?;
        let first = self.states.len().saturating_sub(TRACK_LEN);
        let environment = near
            .iter()
            .map(|&i| {
                let track: Vec<(usize, Point64)> =
                    self.states[first..].iter().map(|s| (s.step, s.crowd_positions[i])).collect();
                crowd_belief(&track, &grid, p)
            })
            .collect::<SimResult<Vec<_>>>()?;
        let agents = AgentSet64::new(vec![machine], environment, self.scenario.obstacles.clone())?;
        Ok(StepContext {
            step: state.step,
            seed: derive_seed(self.scenario.spec.seed, FUSION_STREAM + state.step as u64),
            human,
            human_weights,
            agents,
            human_action: input.standalone_action(pos, p),
        })
    }

    /// Autonomy routes and the hold component under the filtered weights.
    /// With agents around, each route also lends part of its weight to
    /// sidestep variants.
    fn machine_belief(&self, pos: Point64, grid: &TimeGrid64, crowded: bool) -> SimResult<MixtureBelief64> {
        let p = &self.params;
        let sc = &self.scenario;
        let mut weights = self.machine_weights.clone();
        let mut extra = Vec::new();
        if crowded && p.planner.detour_share > 0.0 {
            let share = p.planner.detour_share;
            for (route, w) in sc.autonomy_routes.iter().zip(weights.iter_mut()) {
                let side = detours(route, pos, sc.axis, route.goal, &sc.spec.arena, p);
                let each = *w * share / side.len() as f64;
                *w *= 1.0 - share;
                extra.extend(side.into_iter().map(|r| (r, each)));
            }
        }
        let (routes, side_weights): (Vec<(Route, f64)>, Vec<f64>) = extra.into_iter().unzip();
        weights.extend(side_weights);
        route_mixture(&sc.autonomy_routes, &weights, true, &routes, pos, sc.axis, grid, p.planner.machine_variance, p)
    }

    /// The decision `architecture` takes in `ctx`.
    pub fn decide(&self, ctx: &StepContext, architecture: Architecture) -> SimResult<Decision64> {
        self.decide_with(ctx, architecture, &self.fusion)
    }

    /// Like [`Episode::decide`] with other fusion settings, for comparing
    /// approximations at identical states.
    pub fn decide_with(&self, ctx: &StepContext, architecture: Architecture, f: &FusionParams) -> SimResult<Decision64> {
        let autonomy = || -> SimResult<Decision64> {
            let ens = autonomy_joint_posterior(&ctx.agents, &f.interaction, f.count, ctx.seed)?;
            Ok(irt_fuse(&ens, None, &ctx.agents)?)
        };
        let decision = match architecture {
            Architecture::HumanOnly => {
                FusionDecision { action: ctx.human_action, chosen_joint: None, architecture }
            }
            Architecture::AutonomyOnly => autonomy()?,
            Architecture::Linear => linear_blend(ctx.human_action, autonomy()?.action, &f.linear, ctx.step),
            Architecture::Switching => linear_blend(ctx.human_action, autonomy()?.action, &f.switching, ctx.step),
            Architecture::Irt => match (&ctx.human, f.particles) {
                (None, _) => FusionDecision { architecture, ..autonomy()? },
                (Some(h), Some(n)) => {
                    let intent = Particles64::from_belief(h, n, derive_seed(ctx.seed, PARTICLE_STREAM))?;
                    particle_fuse(&intent, &ctx.agents, &f.interaction, f.count, ctx.seed)?
                }
                (Some(h), None) => {
                    let ens = irt_joint_posterior(h, &ctx.agents, &f.interaction, f.count, ctx.seed)?;
                    irt_fuse(&ens, Some(h), &ctx.agents)?
                }
            },
            Architecture::IrtDecoupled => {
                decoupled_fuse(ctx.human.as_ref(), &ctx.agents, &f.interaction, f.count, ctx.seed)?
            }
        };
        Ok(decision)
    }

    fn check_termination(&self) -> Option<Termination> {
        let s = self.state();
        let r = &self.params.robot;
        let spec = &self.scenario.spec;
        let hit_agent = s.crowd_positions.iter().any(|c| (c - s.robot_pos).norm() < r.collision_radius);
        let hit_wall = self.scenario.obstacles.iter().any(|o| o.surface_distance(&s.robot_pos) < r.collision_radius);
        if hit_agent || hit_wall {
            return Some(Termination::Collision);
        }
        if (s.robot_pos - spec.goal).norm() <= r.goal_radius {
            return Some(Termination::ReachedGoal);
        }
        let w = r.freeze_window;
        if self.states.len() > w {
            let then = self.states[self.states.len() - 1 - w].robot_pos;
            if (s.robot_pos - then).norm() < r.freeze_epsilon {
                return Some(Termination::Frozen);
            }
        }
        if s.step >= spec.max_steps {
            return Some(Termination::Timeout);
        }
        None
    }

    /// Runs the scripted operator to termination.
    pub fn run(mut self) -> EpisodeTrace {
        while !self.is_done() {
            self.step();
        }
        self.finish()
    }

    /// Ends the episode where it stands; an unfinished episode is aborted.
    pub fn finish(self) -> EpisodeTrace {
        EpisodeTrace {
            spec: self.scenario.spec.clone(),
            architecture: self.architecture,
            params: self.params,
            fusion: self.fusion,
            obstacles: self.scenario.obstacles.clone(),
            states: self.states,
            decisions: self.decisions,
            termination: self.termination.unwrap_or(Termination::Aborted),
            invalid: self.invalid,
        }
    }
}

/// Runs one episode with the scripted operator. Errors only on an invalid
/// spec; fusion failures end the trace early with `invalid` set.
pub fn simulate_episode(
    spec: &ScenarioSpec,
    architecture: Architecture,
    fusion: &FusionParams,
    params: &SimParams,
) -> SimResult<EpisodeTrace> {
    Ok(Episode::new(spec, architecture, fusion, params)?.run())
}
