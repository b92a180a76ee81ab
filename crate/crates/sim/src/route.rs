use irt_core::Point64;
use serde::{Deserialize, Serialize};

/// A homotopy class between start and goal, given by its via points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub name: String,
    pub vias: Vec<Point64>,
    pub goal: Point64,
}

impl Route {
    pub fn new(name: &str, vias: Vec<Point64>, goal: Point64) -> Self {
        Self { name: name.to_string(), vias, goal }
    }

    /// The same class leading to a different goal.
    pub fn retargeted(&self, goal: Point64) -> Self {
        Self { goal, ..self.clone() }
    }

    /// Polyline from `from` through the via points not yet passed. A via
    /// counts as passed once `from` is level with it along `axis`.
    pub fn polyline(&self, from: Point64, axis: Point64) -> Vec<Point64> {
        let here = from.dot(&axis);
        let mut pts = vec![from];
        pts.extend(self.vias.iter().filter(|v| v.dot(&axis) > here + 1e-9).copied());
        pts.push(self.goal);
        pts
    }

    /// Positions reached after `k * dt` seconds at constant `speed`, for
    /// `k in 0..=steps`; the path rests at the goal once it gets there.
    pub fn path(&self, from: Point64, axis: Point64, speed: f64, dt: f64, steps: usize) -> Vec<Point64> {
        let line = self.polyline(from, axis);
        (0..=steps).map(|k| along(&line, speed * dt * k as f64)).collect()
    }

    pub fn length(&self, from: Point64, axis: Point64) -> f64 {
        self.polyline(from, axis).windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// Point at arc length `s` along a polyline, clamped to its end.
pub fn along(line: &[Point64], mut s: f64) -> Point64 {
    for w in line.windows(2) {
        let seg = (w[1] - w[0]).norm();
        if s <= seg {
            if seg == 0.0 {
                return w[0];
            }
            return w[0] + (w[1] - w[0]) * (s / seg);
        }
        s -= seg;
    }
    *line.last().expect("polyline has at least one point")
}

/// Unit vector from `a` toward `b`.
pub fn heading(a: Point64, b: Point64) -> Point64 {
    let d = b - a;
    let n = d.norm();
    if n > 0.0 { d / n } else { Point64::zeros() }
}

/// Displacement toward `target`, capped at `max_step`.
pub fn step_toward(from: Point64, target: Point64, max_step: f64) -> Point64 {
    let d = target - from;
    let n = d.norm();
    if n <= max_step { target } else { from + d * (max_step / n) }
}
