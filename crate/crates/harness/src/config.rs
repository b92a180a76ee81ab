use std::path::{Path, PathBuf};

use irt_core::{Architecture, Point64, Schedule64};
use irt_sim::metrics::{GapMode, StressorGrid};
use irt_sim::{Arena, FusionParams, ScenarioKind, ScenarioSpec, SimParams};
use serde::Deserialize;

use crate::{HarnessError, HarnessResult};

/// Everything one `run`, `sweep`, or `teleop` invocation needs.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub architectures: Vec<Architecture>,
    #[serde(default)]
    pub seeds: SeedPolicy,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub sim: SimParams,
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub teleop: TeleopConfig,
    #[serde(default)]
    pub plot: PlotConfig,
}

fn default_tolerance() -> f64 {
    0.05
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// Overrides on top of the reference layout of `kind`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub crowd_density: Option<f64>,
    pub operator_fidelity_sigma: Option<f64>,
    pub operator_noise_std: Option<f64>,
    pub autonomy_reliability: Option<f64>,
    pub semantic_event_step: Option<EventStep>,
    pub seed: Option<u64>,
    pub arena: Option<Arena>,
    pub start: Option<Point64>,
    pub goal: Option<Point64>,
    pub cooperation: Option<f64>,
    pub max_steps: Option<usize>,
}

/// A step index, or the string `"none"` to disable the event.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum EventStep {
    At(usize),
    Keyword(String),
}

/// Seeds `base, base + 1, ..., base + count - 1`; in a sweep, every cell
/// uses the same seeds.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedPolicy {
    pub base: Option<u64>,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

impl Default for SeedPolicy {
    fn default() -> Self {
        Self { base: None, count: 1 }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionConfig {
    pub count: Option<usize>,
    pub particles: Option<usize>,
    pub interaction: Option<InteractionConfig>,
    pub linear: Option<Schedule64>,
    pub switching: Option<Schedule64>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    pub safety_radius: Option<f64>,
    pub repulsion_strength: Option<f64>,
    pub cohesion_strength: Option<f64>,
}

/// Stressor axes; a missing axis holds the scenario's own value.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub crowd_density: Option<Vec<f64>>,
    pub operator_fidelity_sigma: Option<Vec<f64>>,
    pub operator_noise_std: Option<Vec<f64>>,
    pub autonomy_reliability: Option<Vec<f64>>,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    100_000
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeleopConfig {
    /// Ticks per second, in `[5, 60]`.
    pub tick_rate: f64,
    /// Architecture a new session starts in.
    pub architecture: Architecture,
    /// Capacity of each per-session message queue.
    pub queue_capacity: usize,
    /// Input older than this many seconds counts as released.
    pub stale_after: f64,
}

impl Default for TeleopConfig {
    fn default() -> Self {
        Self { tick_rate: 20.0, architecture: Architecture::Irt, queue_capacity: 64, stale_after: 1.0 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlotConfig {
    pub epsilons: Vec<f64>,
    pub reference: Architecture,
    pub candidate: Architecture,
    pub gap: GapMode,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.05, 0.1, 0.25, 0.5, 1.0],
            reference: Architecture::Irt,
            candidate: Architecture::Linear,
            gap: GapMode::ActionDistance,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

impl RunConfig {
    pub fn parse(text: &str) -> HarnessResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks every derived object so a bad config fails before any episode runs.
    pub fn validate(&self) -> HarnessResult<()> {
        if self.architectures.is_empty() {
            return Err(config_err("`architectures` must name at least one architecture"));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(config_err(format!("`tolerance` must be finite and >= 0, got {}", self.tolerance)));
        }
        if self.seeds.count == 0 {
            return Err(config_err("`seeds.count` must be at least 1"));
        }
        self.spec()?.validate().map_err(config_err)?;
        self.sim.validate().map_err(config_err)?;
        self.fusion_params()?.validate().map_err(config_err)?;
        if let Some(s) = &self.sweep {
            self.sweep_grid(s)?.validate().map_err(config_err)?;
        }
        let t = &self.teleop;
        if !(5.0..=60.0).contains(&t.tick_rate) {
            return Err(config_err(format!("`teleop.tick_rate` must lie in [5, 60], got {}", t.tick_rate)));
        }
        if t.queue_capacity == 0 || !(t.stale_after > 0.0 && t.stale_after.is_finite()) {
            return Err(config_err("`teleop.queue_capacity` and `teleop.stale_after` must be positive"));
        }
        if self.plot.epsilons.iter().any(|e| e.is_nan()) {
            return Err(config_err("`plot.epsilons` must not contain NaN"));
        }
        Ok(())
    }

    /// The scenario with every override applied.
    pub fn spec(&self) -> HarnessResult<ScenarioSpec> {
        let c = &self.scenario;
        let mut s = ScenarioSpec::default_for(c.kind);
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = c.$f { s.$f = v; } )* };
        }
        take!(crowd_density, operator_fidelity_sigma, operator_noise_std, autonomy_reliability, seed, arena, start, goal, cooperation, max_steps);
        match &c.semantic_event_step {
            None => {}
            Some(EventStep::At(k)) => s.semantic_event_step = Some(*k),
            Some(EventStep::Keyword(w)) if w == "none" => s.semantic_event_step = None,
            Some(EventStep::Keyword(w)) => {
                return Err(config_err(format!("`scenario.semantic_event_step` must be a step or \"none\", got \"{w}\"")))
            }
        }
        s.seed = self.base_seed();
        Ok(s)
    }

    pub fn base_seed(&self) -> u64 {
        self.seeds.base.or(self.scenario.seed).unwrap_or(0)
    }

    /// Replaces the base seed, as `--seed` does.
    pub fn override_seed(&mut self, seed: u64) {
        self.seeds.base = Some(seed);
    }

    pub fn fusion_params(&self) -> HarnessResult<FusionParams> {
        let f = &self.fusion;
        let mut p = FusionParams::default_for(self.scenario.kind);
        if let Some(n) = f.count {
            p.count = n;
        }
        p.particles = f.particles;
        if let Some(i) = f.interaction {
            if let Some(v) = i.safety_radius {
                p.interaction.safety_radius = v;
            }
            if let Some(v) = i.repulsion_strength {
                p.interaction.repulsion_strength = v;
            }
            if let Some(v) = i.cohesion_strength {
                p.interaction.cohesion_strength = v;
            }
        }
        if let Some(s) = &f.linear {
            p.linear = s.clone();
        }
        if let Some(s) = &f.switching {
            p.switching = s.clone();
        }
        Ok(p)
    }

    /// The one-cell grid of a plain run.
    pub fn single_grid(&self) -> HarnessResult<StressorGrid> {
        let spec = self.spec()?;
        Ok(StressorGrid::single(&spec, self.seeds.count, usize::MAX))
    }

    pub fn sweep_grid(&self, s: &SweepConfig) -> HarnessResult<StressorGrid> {
        let mut g = self.single_grid()?;
        if let Some(v) = &s.crowd_density {
            g.crowd_density = v.clone();
        }
        if let Some(v) = &s.operator_fidelity_sigma {
            g.operator_fidelity_sigma = v.clone();
        }
        if let Some(v) = &s.operator_noise_std {
            g.operator_noise_std = v.clone();
        }
        if let Some(v) = &s.autonomy_reliability {
            g.autonomy_reliability = v.clone();
        }
        g.budget = s.budget;
        Ok(g)
    }
}
