use irt_core::{Architecture, Interaction64, Point64};
use irt_sim::beliefs::{leak, planning_grid, route_mixture};
use irt_sim::crowd::{Crowd, CrowdAgent, CrowdParams};
use irt_sim::*;
use irt_core::rng::seeded;
use proptest::prelude::*;

fn corridor() -> ScenarioSpec {
    ScenarioSpec::default_for(ScenarioKind::BimodalCorridor)
}

fn quick(kind: ScenarioKind) -> FusionParams {
    FusionParams::default_for(kind).with_count(200)
}

/// Shortest distance from `c` to the segment `a`-`b`.
fn segment_distance(a: Point64, b: Point64, c: Point64) -> f64 {
    let ab = b - a;
    let t = ((c - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (a + ab * t - c).norm()
}

fn path_length(path: &[Point64]) -> f64 {
    path.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

#[test]
fn empty_crowd_limit() {
    for kind in ScenarioKind::ALL {
        let mut spec = ScenarioSpec::default_for(kind);
        spec.crowd_density = 0.0;
        let sc = build_scenario(&spec, &SimParams::default()).unwrap();
        let expected = if kind == ScenarioKind::ElevatorSemantic { 7 } else { 0 };
        assert_eq!(sc.crowd.len(), expected, "{kind}");
        assert!(sc.initial.crowd_positions.len() == expected);
    }
    let sc = build_scenario(&corridor(), &SimParams::default()).unwrap();
    assert_eq!(sc.obstacles.len(), 1);
}

#[test]
fn corridor_has_two_gaps_around_one_obstacle() {
    let spec = corridor();
    let p = SimParams::default();
    let sc = build_scenario(&spec, &p).unwrap();
    let obstacle = sc.obstacles[0];
    // The obstacle blocks the straight line.
    assert!(segment_distance(spec.start, spec.goal, obstacle.center) < obstacle.radius);
    assert_eq!(sc.routes.len(), 2);
    let mut sides = Vec::new();
    for route in &sc.routes {
        let line = route.polyline(spec.start, sc.axis);
        for w in line.windows(2) {
            let clearance = segment_distance(w[0], w[1], obstacle.center) - obstacle.radius;
            assert!(clearance > p.robot.collision_radius, "{} clears by {clearance}", route.name);
        }
        let via = route.vias[0];
        assert!(spec.arena.contains(&via));
        sides.push((via - obstacle.center).y.signum());
    }
    assert_eq!(sides, vec![1.0, -1.0]);
}

#[test]
fn same_seed_same_layout() {
    let mut spec = ScenarioSpec::default_for(ScenarioKind::CrowdNavigation).with_seed(11);
    spec.crowd_density = 0.3;
    let p = SimParams::default();
    let a = build_scenario(&spec, &p).unwrap();
    let b = build_scenario(&spec, &p).unwrap();
    assert!(!a.initial.crowd_positions.is_empty());
    assert_eq!(a.initial, b.initial);
    assert_eq!(a.crowd.agents, b.crowd.agents);
    let c = build_scenario(&spec.clone().with_seed(12), &p).unwrap();
    assert_ne!(a.initial.crowd_positions, c.initial.crowd_positions);
}

#[test]
fn overcrowding_is_a_placement_error() {
    let mut spec = ScenarioSpec::default_for(ScenarioKind::CrowdNavigation);
    spec.crowd_density = 40.0;
    let err = build_scenario(&spec, &SimParams::default()).unwrap_err();
    assert!(matches!(err, SimError::Placement { .. }), "{err}");
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = corridor();
    spec.autonomy_reliability = 1.5;
    assert!(build_scenario(&spec, &SimParams::default()).is_err());
    let mut spec = corridor();
    spec.crowd_density = -0.1;
    assert!(spec.validate().is_err());
    let mut spec = corridor();
    spec.arena = Arena::new(0.0, 0.0, 0.0, 5.0);
    assert!(spec.validate().is_err());
}

#[test]
fn noiseless_operator_reports_the_intent_path() {
    let mut spec = corridor();
    spec.operator_noise_std = 0.0;
    let p = SimParams::default();
    let sc = build_scenario(&spec, &p).unwrap();
    let mut op = SimulatedOperator::new(&sc);
    let route = &sc.routes[sc.operator_route_at(false)];
    let mut state = sc.initial.clone();
    for step in 0..5 {
        let input = op.act(&sc, &state, &p);
        let path = route.path(state.robot_pos, sc.axis, p.robot.v_max, p.robot.dt, p.planner.intent_lookahead);
        assert_eq!(input.intent, Some(path[p.planner.intent_lookahead]));
        state.robot_pos = input.standalone_action(state.robot_pos, &p);
        state.step = step + 1;
    }
}

#[test]
fn elevator_operator_switches_sides_at_the_event() {
    let spec = ScenarioSpec::default_for(ScenarioKind::ElevatorSemantic);
    let sc = build_scenario(&spec, &SimParams::default()).unwrap();
    let autonomy_pick = (0..sc.autonomy_weights.len())
        .max_by(|&a, &b| sc.autonomy_weights[a].total_cmp(&sc.autonomy_weights[b]))
        .unwrap();
    assert_eq!(sc.routes[autonomy_pick].name, "right");
    assert_eq!(sc.operator_route_at(false), autonomy_pick);
    assert_eq!(sc.routes[sc.operator_route_at(true)].name, "left");

    // The scripted operator follows the switch inside an episode.
    let p = SimParams::default();
    let mut ep = Episode::new(&spec, Architecture::HumanOnly, &quick(spec.kind), &p).unwrap();
    let event = spec.semantic_event_step.unwrap();
    for _ in 0..event + 6 {
        ep.step();
    }
    let states = ep.states();
    let before = states[event].human_intent_obs.unwrap();
    let after = states.last().unwrap().human_intent_obs.unwrap();
    assert!(before.y < 0.0 && after.y > 0.0, "{before:?} then {after:?}");
}

/// Mixture weights after each operator observation, recomputed from the
/// component marginals with the two-dimensional Gaussian likelihood.
#[test]
fn vague_operator_model_keeps_both_modes() {
    let mut spec = corridor();
    spec.operator_fidelity_sigma = 10.0;
    spec.operator_noise_std = 0.0;
    let p = SimParams::default();
    let mut ep = Episode::new(&spec, Architecture::HumanOnly, &quick(spec.kind), &p).unwrap();
    let sc = ep.scenario().clone();
    let look = p.planner.intent_lookahead;
    let n = sc.routes.len();
    let uniform = vec![1.0 / n as f64; n];
    let mut oracle = uniform.clone();
    for _ in 0..5 {
        let state = ep.state().clone();
        let grid = planning_grid(state.step, &p);
        let left = sc.routes[0].path(state.robot_pos, sc.axis, p.robot.v_max, p.robot.dt, look)[look];
        let input = OperatorInput { direction: Point64::new(0.5, 0.5), intent: Some(left) };
        let ctx = ep.context(&input).unwrap();

        let prior = leak(&oracle, &uniform, p.planner.human_hazard);
        let sigma2 = spec.operator_fidelity_sigma.powi(2);
        let comps = route_mixture(&sc.routes, &prior, false, &[], state.robot_pos, sc.axis, &grid, sigma2, &p).unwrap();
        let noise2 = p.planner.noise_floor.powi(2);
        let lik: Vec<f64> = comps
            .components()
            .iter()
            .zip(&prior)
            .map(|(c, w)| {
                let d = left - c.mean().point(look);
                let (vx, vy) = (c.covariance(0)[(look, look)] + noise2, c.covariance(1)[(look, look)] + noise2);
                let density = (-0.5 * (d.x * d.x / vx + d.y * d.y / vy)).exp()
                    / (2.0 * std::f64::consts::PI * (vx * vy).sqrt());
                w * density
            })
            .collect();
        let total: f64 = lik.iter().sum();
        oracle = lik.iter().map(|l| l / total).collect();

        for (got, want) in ctx.human_weights.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-9, "{:?} vs {:?}", ctx.human_weights, oracle);
        }
        ep.step_with(input);
    }
    let top = oracle.iter().copied().fold(0.0, f64::max);
    assert!(top < 0.8, "weights {oracle:?}");
    assert!(oracle[0] > oracle[1]);
}

#[test]
fn lone_agent_walks_straight_at_top_speed() {
    let params = CrowdParams::default();
    let agent = CrowdAgent { pos: Point64::new(1.0, -2.0), goal: Point64::new(9.0, 4.0), wanders: false };
    let mut crowd = Crowd::new(vec![agent], params, None, seeded(3));
    let arena = Arena::new(0.0, -5.0, 12.0, 5.0);
    let dir = Point64::new(0.8, 0.6);
    let dt = 0.25;
    for k in 1..=20 {
        crowd.step(None, 1.0, dt, &arena);
        let want = Point64::new(1.0, -2.0) + dir * (params.v_max * dt * k as f64);
        assert!((crowd.agents[0].pos - want).norm() < 1e-12);
    }
}

#[test]
fn uncooperative_crowd_ignores_the_robot() {
    let agents = vec![
        CrowdAgent { pos: Point64::new(2.0, 0.0), goal: Point64::new(8.0, 0.5), wanders: false },
        CrowdAgent { pos: Point64::new(8.0, 0.2), goal: Point64::new(2.0, 0.0), wanders: false },
    ];
    let arena = Arena::new(0.0, -5.0, 12.0, 5.0);
    let mut with_robot = Crowd::new(agents.clone(), CrowdParams::default(), None, seeded(0));
    let mut without = Crowd::new(agents.clone(), CrowdParams::default(), None, seeded(0));
    let mut yielding = Crowd::new(agents, CrowdParams::default(), None, seeded(0));
    let robot = Point64::new(5.0, 0.1);
    for _ in 0..20 {
        with_robot.step(Some(robot), 0.0, 0.25, &arena);
        without.step(None, 0.0, 0.25, &arena);
        yielding.step(Some(robot), 1.0, 0.25, &arena);
    }
    assert_eq!(with_robot.positions(), without.positions());
    assert_ne!(yielding.positions(), without.positions());
}

/// Minimum separation of two agents walking straight at each other, recorded
/// once from the default crowd model.
const HEAD_ON_SEPARATION: f64 = 0.608_916_021_937_703_2;

#[test]
fn head_on_agents_pass_symmetrically() {
    let a = Point64::new(1.0, 0.0);
    let b = Point64::new(11.0, 0.0);
    let agents = vec![
        CrowdAgent { pos: a, goal: b, wanders: false },
        CrowdAgent { pos: b, goal: a, wanders: false },
    ];
    let mut crowd = Crowd::new(agents, CrowdParams::default(), None, seeded(0));
    let arena = Arena::new(0.0, -5.0, 12.0, 5.0);
    let mut closest = f64::INFINITY;
    let mut lowest = 0.0f64;
    for _ in 0..60 {
        crowd.step(None, 1.0, 0.25, &arena);
        let (p, q) = (crowd.agents[0].pos, crowd.agents[1].pos);
        closest = closest.min((p - q).norm());
        lowest = lowest.min(p.y);
        // Point symmetry about the midpoint.
        let m = Point64::new(6.0, 0.0);
        assert!(((p - m) + (q - m)).norm() < 1e-9);
    }
    // Each sidesteps to its own right, then both arrive.
    assert!(lowest < 0.0);
    assert!(crowd.agents.iter().all(|a| (a.pos - a.goal).norm() < 0.5));
    assert!(closest >= 0.8 * Interaction64::default().safety_radius);
    assert!((closest - HEAD_ON_SEPARATION).abs() < 1e-9, "separation {closest:.17}");
}

#[test]
fn obstacle_free_runs_are_nearly_straight() {
    let mut spec = ScenarioSpec::default_for(ScenarioKind::CrowdNavigation).with_seed(5);
    spec.crowd_density = 0.0;
    let p = SimParams::default();
    let straight = (spec.goal - spec.start).norm();
    for arch in Architecture::ALL {
        let t = simulate_episode(&spec, arch, &quick(spec.kind), &p).unwrap();
        assert_eq!(t.termination, Termination::ReachedGoal, "{arch}");
        let ratio = path_length(&t.robot_path()) / straight;
        assert!(ratio <= 1.05, "{arch}: ratio {ratio}");
    }
}

#[test]
fn linear_blend_hits_the_corridor_obstacle() {
    let p = SimParams::default();
    for seed in 0..3 {
        let spec = corridor().with_seed(seed);
        let t = simulate_episode(&spec, Architecture::Linear, &FusionParams::default_for(spec.kind), &p).unwrap();
        assert_eq!(t.termination, Termination::Collision, "seed {seed}");
        let o = t.obstacles[0];
        assert!(o.surface_distance(&t.states.last().unwrap().robot_pos) < p.robot.collision_radius);
    }
}

#[test]
fn irt_commits_to_one_corridor_gap() {
    let p = SimParams::default();
    for seed in 0..3 {
        let spec = corridor().with_seed(seed);
        let t = simulate_episode(&spec, Architecture::Irt, &FusionParams::default_for(spec.kind), &p).unwrap();
        assert_eq!(t.termination, Termination::ReachedGoal, "seed {seed}");
        let o = t.obstacles[0];
        let beside: Vec<f64> = t
            .robot_path()
            .iter()
            .filter(|q| (q.x - o.center.x).abs() <= o.radius)
            .map(|q| q.y - o.center.y)
            .collect();
        assert!(!beside.is_empty());
        // The operator asked for the left gap.
        assert!(beside.iter().all(|y| *y > o.radius), "seed {seed}: {beside:?}");
    }
}

#[test]
fn episodes_are_deterministic() {
    let mut spec = ScenarioSpec::default_for(ScenarioKind::CrowdNavigation).with_seed(4);
    spec.crowd_density = 0.2;
    spec.max_steps = 40;
    let p = SimParams::default();
    for arch in [Architecture::Irt, Architecture::IrtDecoupled, Architecture::Switching] {
        let a = simulate_episode(&spec, arch, &quick(spec.kind), &p).unwrap();
        let b = simulate_episode(&spec, arch, &quick(spec.kind), &p).unwrap();
        assert_eq!(a, b, "{arch}");
        assert_eq!(a.decisions.len() + 1, a.states.len());
    }
}

#[test]
fn frozen_terminations_are_sound() {
    let p = SimParams::default();
    let w = p.robot.freeze_window;
    let mut frozen = 0;
    for seed in 0..4 {
        let mut spec = ScenarioSpec::default_for(ScenarioKind::CrowdNavigation).with_seed(seed);
        spec.crowd_density = 0.6;
        let t = simulate_episode(&spec, Architecture::IrtDecoupled, &quick(spec.kind), &p).unwrap();
        if t.termination == Termination::Frozen {
            frozen += 1;
            let n = t.states.len();
            assert!(n > w);
            let moved = (t.states[n - 1].robot_pos - t.states[n - 1 - w].robot_pos).norm();
            assert!(moved < p.robot.freeze_epsilon);
        }
    }
    assert!(frozen > 0, "no frozen episode to check");
    // An unobstructed robot never registers as frozen.
    let t = simulate_episode(&corridor(), Architecture::HumanOnly, &quick(ScenarioKind::BimodalCorridor), &p).unwrap();
    assert_eq!(t.termination, Termination::ReachedGoal);
}

#[test]
fn invalid_fusion_params_are_rejected() {
    let spec = corridor();
    let mut fusion = quick(spec.kind);
    fusion.count = 0;
    assert!(simulate_episode(&spec, Architecture::Irt, &fusion, &SimParams::default()).is_err());
}

fn arch_strategy() -> impl Strategy<Value = Architecture> {
    prop::sample::select(Architecture::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nobody_exceeds_top_speed(seed in 0u64..1000, density in 0.0f64..0.5, arch in arch_strategy()) {
        let mut spec = ScenarioSpec::default_for(ScenarioKind::CrowdNavigation).with_seed(seed);
        spec.crowd_density = density;
        spec.max_steps = 25;
        let p = SimParams::default();
        let fusion = FusionParams::default_for(spec.kind).with_count(60);
        let t = simulate_episode(&spec, arch, &fusion, &p).unwrap();
        let robot_step = p.robot.v_max * p.robot.dt + 1e-9;
        let crowd_step = p.crowd.v_max * p.robot.dt + 1e-9;
        for w in t.states.windows(2) {
            prop_assert!((w[1].robot_pos - w[0].robot_pos).norm() <= robot_step);
            for (a, b) in w[0].crowd_positions.iter().zip(&w[1].crowd_positions) {
                prop_assert!((b - a).norm() <= crowd_step);
            }
            prop_assert!(spec.arena.contains(&w[1].robot_pos));
            prop_assert!(w[1].crowd_positions.iter().all(|c| spec.arena.contains(c)));
        }
    }
}
