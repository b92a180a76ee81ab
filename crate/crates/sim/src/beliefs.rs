//! Turning the world into trajectory beliefs on a grid anchored at "now".
//!
//! Route components share one covariance: a GP pinned to the robot's current
//! position, so only their mean paths differ. Crowd agents get a GP regressed
//! on their last few positions around a constant-velocity mean.

use irt_core::trajectory::gp_posterior_with_mean;
use irt_core::{
    GaussianBelief64, Kernel64, MixtureBelief64, Observations64, Point64, TimeGrid64, Trajectory64,
};

use crate::error::SimResult;
use crate::route::Route;
use crate::spec::{Arena, SimParams};

pub fn planning_grid(step: usize, params: &SimParams) -> TimeGrid64 {
    let dt = params.robot.dt;
    TimeGrid64::new(step as f64 * dt, dt, params.planner.horizon_steps).expect("validated planner params")
}

/// Zero-offset belief pinned at `pos` at the grid origin.
pub fn pinned(grid: &TimeGrid64, pos: Point64, variance: f64, params: &SimParams) -> SimResult<GaussianBelief64> {
    let kernel = Kernel64::squared_exponential(params.planner.length_scale, variance)?;
    let obs = Observations64::single(grid.t0, pos, params.planner.pin_noise)?;
    Ok(gp_posterior_with_mean(&kernel, &obs, grid, None, |_| pos)?)
}

/// One component per route, then an optional wait-in-place component, then
/// one per `extra` route driven at the paired fraction of top speed, all
/// sharing the pinned covariance.
pub fn route_mixture(
    routes: &[Route],
    weights: &[f64],
    hold: bool,
    extra: &[(Route, f64)],
    pos: Point64,
    axis: Point64,
    grid: &TimeGrid64,
    variance: f64,
    params: &SimParams,
) -> SimResult<MixtureBelief64> {
    let base = pinned(grid, pos, variance, params)?;
    let v = params.robot.v_max;
    let follow = |r: &Route, speed: f64| {
        base.with_mean(Trajectory64::new(*grid, r.path(pos, axis, speed, grid.dt, grid.horizon_steps))?)
    };
    let mut comps = routes.iter().map(|r| follow(r, v)).collect::<Result<Vec<_>, _>>()?;
    if hold {
        comps.push(base.clone());
    }
    for (r, fraction) in extra {
        comps.push(follow(r, v * fraction)?);
    }
    Ok(MixtureBelief64::normalized(weights.to_vec(), comps)?)
}

/// Variants of `route` for moving among people, paired with their speed as a
/// fraction of top speed. Four sidesteps first swerve to a point `reach`
/// ahead and `±offset` or `±2 offset` to the side, then rejoin the route;
/// the fifth keeps the route at creeping speed.
pub fn detours(route: &Route, pos: Point64, axis: Point64, goal: Point64, arena: &Arena, params: &SimParams) -> Vec<(Route, f64)> {
    let p = &params.planner;
    let ahead = (goal - pos).dot(&axis).max(0.0);
    let reach = p.detour_reach.min(0.5 * ahead);
    let normal = Point64::new(-axis.y, axis.x);
    [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|k| {
            let swerve = arena.clamp(pos + axis * reach + normal * (k * p.detour_offset));
            let mut vias = vec![swerve];
            vias.extend(route.vias.iter().copied());
            (Route::new(&format!("{}~{k}", route.name), vias, route.goal), 1.0)
        })
        .chain(std::iter::once((route.clone(), p.creep_fraction)))
        .collect()
}

/// GP prediction of one crowd agent from its recent track `(step, position)`,
/// oldest first.
pub fn crowd_belief(track: &[(usize, Point64)], grid: &TimeGrid64, params: &SimParams) -> SimResult<MixtureBelief64> {
    let dt = params.robot.dt;
    let &(now_step, now) = track.last().expect("nonempty track");
    let &(old_step, old) = &track[0];
    let vel = if now_step > old_step { (now - old) / ((now_step - old_step) as f64 * dt) } else { Point64::zeros() };
    let t_now = now_step as f64 * dt;
    let mut obs = Observations64::empty();
    for &(s, p) in track {
        obs.push(s as f64 * dt, p, params.planner.noise_floor)?;
    }
    let kernel = Kernel64::squared_exponential(params.planner.length_scale, params.planner.crowd_variance)?;
    let belief = gp_posterior_with_mean(&kernel, &obs, grid, None, |t| now + vel * (t - t_now))?;
    Ok(MixtureBelief64::single(belief))
}

/// Indices of up to `max` crowd agents within `radius` of `robot`, nearest first.
pub fn nearby_agents(robot: Point64, crowd: &[Point64], radius: f64, max: usize) -> Vec<usize> {
    let mut near: Vec<(f64, usize)> = crowd
        .iter()
        .enumerate()
        .map(|(i, p)| ((p - robot).norm(), i))
        .filter(|(d, _)| *d <= radius)
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    near.truncate(max);
    near.into_iter().map(|(_, i)| i).collect()
}

/// Hazard-style leak toward `prior`: `(1 - h) w + h prior`.
pub fn leak(weights: &[f64], prior: &[f64], hazard: f64) -> Vec<f64> {
    weights.iter().zip(prior).map(|(w, p)| (1.0 - hazard) * w + hazard * p).collect()
}

/// Bayes update of route weights from the robot's executed step: each
/// component predicted its own position one step ahead. Components beyond
/// `weights.len()` are ignored.
pub fn reweigh_by_motion(
    belief: &MixtureBelief64,
    weights: &[f64],
    moved_to: Point64,
    motion_noise: f64,
) -> Vec<f64> {
    let logs: Vec<f64> = weights
        .iter()
        .zip(belief.components())
        .map(|(w, c)| {
            let var = c.marginal_variance(1) + motion_noise * motion_noise;
            let d2 = (moved_to - c.mean().point(1)).norm_squared();
            w.ln() - 0.5 * d2 / var
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return weights.to_vec();
    }
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}
