use irt_core::rng::{derive_seed, seeded};
use irt_core::{Disc64, Point64};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crowd::{crossing_goal, poisson_disk, Crowd, CrowdAgent};
use crate::error::SimResult;
use crate::route::{heading, Route};
use crate::spec::{Arena, ScenarioKind, ScenarioSpec, SimParams};

/// Seed streams of the world itself. Fusion streams live in the episode loop.
pub(crate) const LAYOUT_STREAM: u64 = 1 << 40;
pub(crate) const DECOY_STREAM: u64 = (1 << 40) + 1;
pub(crate) const CROWD_STREAM: u64 = (1 << 40) + 2;
pub(crate) const OPERATOR_STREAM: u64 = (1 << 40) + 3;

/// The time-`t` slice of everything the planners can observe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub step: usize,
    pub robot_pos: Point64,
    /// Operator intent observation received this step.
    pub human_intent_obs: Option<Point64>,
    pub crowd_positions: Vec<Point64>,
    pub event_fired: bool,
}

/// A built world: static geometry, route classes, who prefers what, and the
/// crowd at time zero.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub obstacles: Vec<Disc64>,
    /// Route classes to the true goal, left first.
    pub routes: Vec<Route>,
    /// The autonomy's routes, which lead to a decoy when its goal estimate is wrong.
    pub autonomy_routes: Vec<Route>,
    pub autonomy_weights: Vec<f64>,
    pub decoy: bool,
    /// Operator's route before and after the semantic event.
    pub operator_route: (usize, usize),
    /// Where the waiting crowd heads once the event reaches it.
    pub event_goals: Vec<Point64>,
    /// Unit vector from start toward goal.
    pub axis: Point64,
    pub crowd: Crowd,
    pub initial: WorldState,
}

impl Scenario {
    pub fn operator_route_at(&self, event_fired: bool) -> usize {
        if event_fired { self.operator_route.1 } else { self.operator_route.0 }
    }
}

/// Left-hand unit normal of `axis`.
fn left_of(axis: Point64) -> Point64 {
    Point64::new(-axis.y, axis.x)
}

fn ambient_crowd(
    spec: &ScenarioSpec,
    params: &SimParams,
    band: Arena,
    obstacles: &[Disc64],
    rng: &mut irt_core::rng::SimRng,
) -> SimResult<Vec<CrowdAgent>> {
    let area = band.width() * band.height();
    let count = (spec.crowd_density * area).round() as usize;
    let spacing = params.crowd.spawn_spacing;
    let clear = params.robot.collision_radius + 1.0;
    let allowed = |p: &Point64| {
        (p - spec.start).norm() >= clear
            && (p - spec.goal).norm() >= clear
            && obstacles.iter().all(|o| o.surface_distance(p) >= spacing)
    };
    let pts = poisson_disk(&band, count, spacing, allowed, rng)?;
    Ok(pts
        .into_iter()
        .map(|pos| {
            let goal = crossing_goal(&band, pos, rng);
            CrowdAgent { pos, goal, wanders: true }
        })
        .collect())
}

/// Builds the world for `spec`. Everything random about the layout comes from
/// the spec's seed, so equal specs give equal worlds.
pub fn build_scenario(spec: &ScenarioSpec, params: &SimParams) -> SimResult<Scenario> {
    spec.validate()?;
    params.validate()?;
    let axis = heading(spec.start, spec.goal);
    let normal = left_of(axis);
    let mid = 0.5 * (spec.start + spec.goal);
    let mut layout = seeded(derive_seed(spec.seed, LAYOUT_STREAM));
    let arena = spec.arena;
    let band = Arena::new(
        (mid.x - 3.0).max(arena.min.x),
        arena.min.y + 0.5,
        (mid.x + 3.0).min(arena.max.x),
        arena.max.y - 0.5,
    );

    let (obstacles, routes, autonomy_weights, operator_route) = match spec.kind {
        ScenarioKind::BimodalCorridor => {
            let obstacle = Disc64 { center: mid, radius: 1.5 };
            let offset = obstacle.radius + 1.75;
            let routes = vec![
                Route::new("left", vec![mid + normal * offset], spec.goal),
                Route::new("right", vec![mid - normal * offset], spec.goal),
            ];
            (vec![obstacle], routes, vec![0.2, 0.8], (0, 0))
        }
        ScenarioKind::ElevatorSemantic => {
            let pillar = Disc64 { center: mid, radius: 1.0 };
            let offset = pillar.radius + 1.5;
            let routes = vec![
                Route::new("left", vec![mid + normal * offset], spec.goal),
                Route::new("right", vec![mid - normal * offset], spec.goal),
            ];
            let before = 1;
            let after = if spec.semantic_event_step.is_some() { 0 } else { 1 };
            (vec![pillar], routes, vec![0.2, 0.8], (before, after))
        }
        ScenarioKind::CrowdNavigation => {
            let routes = vec![Route::new("direct", Vec::new(), spec.goal)];
            (Vec::new(), routes, vec![1.0], (0, 0))
        }
    };

    let mut agents = Vec::new();
    let mut event_goals = Vec::new();
    if spec.kind == ScenarioKind::ElevatorSemantic {
        // A group waits off to the right of the far gap; the elevator door
        // sits on the wall beneath that gap and the queue fills the gap.
        let door = Point64::new(mid.x, arena.min.y);
        let wait = mid + axis * 2.5 - normal * 3.0;
        let offsets = [(0.0, 0.0), (0.7, 0.0), (-0.7, 0.0), (0.35, 0.6), (-0.35, 0.6), (0.35, -0.6), (-0.35, -0.6)];
        for (dx, dy) in offsets {
            let jitter = Point64::new(layout.random_range(-0.08..0.08), layout.random_range(-0.08..0.08));
            let pos = arena.clamp(wait + axis * dx + normal * dy + jitter);
            agents.push(CrowdAgent { pos, goal: pos, wanders: false });
        }
        let queue = [(0.0, 0.4), (-0.6, 0.7), (0.6, 0.7), (0.0, 1.2), (-0.6, 1.7), (0.6, 1.7), (0.0, 2.4)];
        event_goals = queue.iter().map(|&(dx, dy)| door + axis * dx + normal * dy).collect();
    }
    if spec.crowd_density > 0.0 {
        let region = if spec.kind == ScenarioKind::CrowdNavigation {
            Arena::new(spec.start.x + 4.0, arena.min.y + 0.5, spec.goal.x - 4.0, arena.max.y - 0.5)
        } else {
            band
        };
        agents.extend(ambient_crowd(spec, params, region, &obstacles, &mut layout)?);
    }
    let region = match spec.kind {
        ScenarioKind::CrowdNavigation => {
            Some(Arena::new(spec.start.x + 4.0, arena.min.y + 0.5, spec.goal.x - 4.0, arena.max.y - 0.5))
        }
        _ => Some(band),
    };

    let mut decoy_rng = seeded(derive_seed(spec.seed, DECOY_STREAM));
    let decoy = decoy_rng.random::<f64>() >= spec.autonomy_reliability;
    let autonomy_routes = if decoy {
        let fake = arena.clamp(spec.goal + normal * 3.0 - axis * 1.0);
        routes.iter().map(|r| r.retargeted(fake)).collect()
    } else {
        routes.clone()
    };

    let crowd = Crowd::new(agents, params.crowd, region, seeded(derive_seed(spec.seed, CROWD_STREAM)));
    let initial = WorldState {
        step: 0,
        robot_pos: spec.start,
        human_intent_obs: None,
        crowd_positions: crowd.positions(),
        event_fired: false,
    };
    Ok(Scenario {
        spec: spec.clone(),
        obstacles,
        routes,
        autonomy_routes,
        autonomy_weights,
        decoy,
        operator_route,
        event_goals,
        axis,
        crowd,
        initial,
    })
}
