use rand::Rng;

use super::potential::{cohesion, dist_sq, log_potential, obstacle_potential, InteractionParams};
use super::{Architecture, FusionDecision};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::scalar::{log_sum_exp, Real};
use crate::trajectory::{
    sample_trajectories, AgentSet, MixtureTrajectoryBelief, TimeGrid, Trajectory,
};
use crate::trajectory::mixture_weight_tolerance as weight_tolerance;

/// RNG stream of the human draws.
pub const HUMAN_STREAM: u64 = 0;

/// RNG stream of machine `j`.
pub fn machine_stream(j: usize) -> u64 {
    1 + j as u64
}

/// RNG stream of environment agent `i`.
pub fn environment_stream(i: usize) -> u64 {
    (1u64 << 32) + i as u64
}

/// Weighted joint samples `(h, f^R, f)`.
///
/// `machine_samples[j][s]` is machine `j` in joint sample `s`; likewise for
/// the environment. `human_samples` is empty when no human belief took part.
#[derive(Clone, Debug)]
pub struct JointSampleEnsemble<T: Real> {
    pub human_samples: Vec<Trajectory<T>>,
    pub machine_samples: Vec<Vec<Trajectory<T>>>,
    pub environment_samples: Vec<Vec<Trajectory<T>>>,
    /// Normalized: `exp` of these sums to one.
    pub log_weights: Vec<T>,
}

impl<T: Real> JointSampleEnsemble<T> {
    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn weights(&self) -> Vec<T> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return invalid("joint ensemble is empty");
        }
        if !self.human_samples.is_empty() && self.human_samples.len() != n {
            return invalid("human samples not aligned with weights");
        }
        if self.machine_samples.is_empty() {
            return invalid("joint ensemble has no machine samples");
        }
        if self.machine_samples.iter().chain(&self.environment_samples).any(|s| s.len() != n) {
            return invalid("agent samples not aligned with weights");
        }
        if self.log_weights.iter().any(|w| !w.is_finite_real()) {
            return invalid("joint ensemble log-weights must be finite");
        }
        let total = self.weights().into_iter().fold(T::zero(), |a, b| a + b);
        if (total - T::one()).abs() > weight_tolerance::<T>() {
            return invalid(format!("joint ensemble weights sum to {total}"));
        }
        Ok(())
    }

    fn physical(&self, s: usize) -> Vec<&Trajectory<T>> {
        self.machine_samples
            .iter()
            .chain(&self.environment_samples)
            .map(|agent| &agent[s])
            .collect()
    }
}

/// Human intent as `n` weighted trajectories.
#[derive(Clone, Debug)]
pub struct ParticleIntent<T: Real> {
    particles: Vec<Trajectory<T>>,
    weights: Vec<T>,
}

impl<T: Real> ParticleIntent<T> {
    pub fn new(particles: Vec<Trajectory<T>>, weights: Vec<T>) -> Result<Self> {
        if particles.is_empty() {
            return invalid("particle intent needs at least one particle");
        }
        if particles.len() != weights.len() {
            return invalid(format!("{} weights for {} particles", weights.len(), particles.len()));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite_real()) {
            return invalid("particle weights must be finite and non-negative");
        }
        let sum = weights.iter().fold(T::zero(), |a, b| a + *b);
        if (sum - T::one()).abs() > weight_tolerance::<T>() {
            return invalid(format!("particle weights sum to {sum}, expected 1"));
        }
        let grid = *particles[0].grid();
        if particles.iter().any(|p| !p.grid().same_as(&grid)) {
            return invalid("particles must share one time grid");
        }
        Ok(Self { particles, weights })
    }

    pub fn uniform(particles: Vec<Trajectory<T>>) -> Result<Self> {
        let n = T::lit(particles.len().max(1) as f64);
        let weights = vec![T::one() / n; particles.len()];
        Self::new(particles, weights)
    }

    /// `count` equally weighted draws from a continuous belief.
    pub fn from_belief(belief: &MixtureTrajectoryBelief<T>, count: usize, seed: u64) -> Result<Self> {
        Self::uniform(sample_trajectories(belief, count, seed)?)
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.particles[0].grid()
    }

    pub fn particles(&self) -> &[Trajectory<T>] {
        &self.particles
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, w) in self.weights.iter().enumerate() {
            let w = w.as_f64();
            if w > 0.0 {
                last_nonzero = i;
            }
            acc += w;
            if u < acc && w > 0.0 {
                return i;
            }
        }
        last_nonzero
    }
}

fn check_grid<T: Real>(grid: &TimeGrid<T>, agents: &AgentSet<T>) -> Result<()> {
    if !grid.same_as(agents.grid()) {
        return invalid("human and agent beliefs must share one time grid");
    }
    Ok(())
}

fn draw_agents<T: Real>(
    agents: &AgentSet<T>,
    count: usize,
    seed: u64,
) -> Result<(Vec<Vec<Trajectory<T>>>, Vec<Vec<Trajectory<T>>>)> {
    let machines = agents
        .machines
        .iter()
        .enumerate()
        .map(|(j, b)| sample_trajectories(b, count, derive_seed(seed, machine_stream(j))))
        .collect::<Result<Vec<_>>>()?;
    let env = agents
        .environment
        .iter()
        .enumerate()
        .map(|(i, b)| sample_trajectories(b, count, derive_seed(seed, environment_stream(i))))
        .collect::<Result<Vec<_>>>()?;
    Ok((machines, env))
}

fn weigh<T: Real>(
    human: Vec<Trajectory<T>>,
    machine_samples: Vec<Vec<Trajectory<T>>>,
    environment_samples: Vec<Vec<Trajectory<T>>>,
    agents: &AgentSet<T>,
    params: &InteractionParams<T>,
) -> Result<JointSampleEnsemble<T>> {
    let count = machine_samples[0].len();
    let mut ensemble = JointSampleEnsemble {
        human_samples: human,
        machine_samples,
        environment_samples,
        log_weights: Vec::with_capacity(count),
    };
    for s in 0..count {
        let physical = ensemble.physical(s);
        let h = ensemble.human_samples.get(s);
        let mut lw = log_potential(h, Some(physical[0]), &physical, params);
        let machines = &physical[..ensemble.machine_samples.len()];
        lw += obstacle_potential(machines, &agents.obstacles, params);
        ensemble.log_weights.push(if lw.is_nan_real() { T::neg_infinity() } else { lw });
    }
    let norm = log_sum_exp(&ensemble.log_weights);
    if !norm.is_finite_real() {
        let max = ensemble
            .log_weights
            .iter()
            .fold(f64::NEG_INFINITY, |m, w| m.max(w.as_f64()));
        return Err(Error::WeightUnderflow { max_log_weight: max });
    }
    for w in &mut ensemble.log_weights {
        *w -= norm;
    }
    Ok(ensemble)
}

/// Draws `count` joint samples from the product of the individual beliefs and
/// weights each by the interaction potential.
///
/// Every agent draws from its own seed stream, so adding an agent does not
/// change the samples of the others.
pub fn irt_joint_posterior<T: Real>(
    human: &MixtureTrajectoryBelief<T>,
    agents: &AgentSet<T>,
    params: &InteractionParams<T>,
    count: usize,
    seed: u64,
) -> Result<JointSampleEnsemble<T>> {
    params.validate()?;
    check_grid(human.grid(), agents)?;
    let human_samples = sample_trajectories(human, count, derive_seed(seed, HUMAN_STREAM))?;
    let (machines, env) = draw_agents(agents, count, seed)?;
    weigh(human_samples, machines, env, agents, params)
}

/// Joint posterior over machines and environment alone (no human in the loop).
pub fn autonomy_joint_posterior<T: Real>(
    agents: &AgentSet<T>,
    params: &InteractionParams<T>,
    count: usize,
    seed: u64,
) -> Result<JointSampleEnsemble<T>> {
    params.validate()?;
    let (machines, env) = draw_agents(agents, count, seed)?;
    weigh(Vec::new(), machines, env, agents, params)
}

fn argmax<T: Real>(scores: impl Iterator<Item = T>) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in scores.enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ if v.is_nan_real() => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

fn agent_terms<T: Real>(ensemble: &JointSampleEnsemble<T>, agents: &AgentSet<T>, s: usize) -> Result<T> {
    let mut total = T::zero();
    for (belief, samples) in agents.machines.iter().zip(&ensemble.machine_samples) {
        total += belief.log_density(&samples[s])?.value;
    }
    for (belief, samples) in agents.environment.iter().zip(&ensemble.environment_samples) {
        total += belief.log_density(&samples[s])?.value;
    }
    Ok(total)
}

fn decide<T: Real>(
    ensemble: &JointSampleEnsemble<T>,
    human_terms: &[T],
    agents: &AgentSet<T>,
    architecture: Architecture,
) -> Result<FusionDecision<T>> {
    let mut scores = Vec::with_capacity(ensemble.len());
    for s in 0..ensemble.len() {
        let h = human_terms.get(s).copied().unwrap_or_else(T::zero);
        scores.push(h + agent_terms(ensemble, agents, s)? + ensemble.log_weights[s]);
    }
    let Some((best, _)) = argmax(scores.into_iter()) else {
        return invalid("no joint sample has a finite score");
    };
    Ok(FusionDecision {
        action: ensemble.machine_samples[0][best].next_point(),
        chosen_joint: Some(best),
        architecture,
    })
}

/// MAP joint sample: maximizes the individual log densities plus the
/// log interaction weight. Returns machine 0's next waypoint.
///
/// Without a human belief the decision is the autonomy-alone MAP.
pub fn irt_fuse<T: Real>(
    ensemble: &JointSampleEnsemble<T>,
    human_density: Option<&MixtureTrajectoryBelief<T>>,
    agents: &AgentSet<T>,
) -> Result<FusionDecision<T>> {
    if ensemble.is_empty() {
        return invalid("cannot fuse an empty ensemble");
    }
    if ensemble.machine_samples.len() != agents.machines.len()
        || ensemble.environment_samples.len() != agents.environment.len()
    {
        return invalid("ensemble does not match the agent set");
    }
    match human_density {
        Some(h) => {
            if ensemble.human_samples.len() != ensemble.len() {
                return invalid("ensemble carries no human samples to score");
            }
            let terms = ensemble
                .human_samples
                .iter()
                .map(|t| h.log_density(t).map(|d| d.value))
                .collect::<Result<Vec<_>>>()?;
            decide(ensemble, &terms, agents, Architecture::Irt)
        }
        None => decide(ensemble, &[], agents, Architecture::AutonomyOnly),
    }
}

/// IRT fusion with the human belief replaced by weighted particles.
///
/// Joint sample `s` takes particle `i_s` drawn by weight from the human
/// stream; its human term is `log w_{i_s}`. Machine and environment draws use
/// the same streams as [`irt_joint_posterior`].
pub fn particle_fuse<T: Real>(
    intent: &ParticleIntent<T>,
    agents: &AgentSet<T>,
    params: &InteractionParams<T>,
    count: usize,
    seed: u64,
) -> Result<FusionDecision<T>> {
    params.validate()?;
    check_grid(intent.grid(), agents)?;
    if count == 0 {
        return invalid("sample count must be at least 1");
    }
    let mut rng = seeded(derive_seed(seed, HUMAN_STREAM));
    let picks: Vec<usize> = (0..count).map(|_| intent.pick(rng.random::<f64>())).collect();
    let human = picks.iter().map(|&i| intent.particles[i].clone()).collect();
    let terms: Vec<T> = picks.iter().map(|&i| intent.weights[i].ln()).collect();
    let (machines, env) = draw_agents(agents, count, seed)?;
    let ensemble = weigh(human, machines, env, agents, params)?;
    decide(&ensemble, &terms, agents, Architecture::Irt)
}

/// Per-step Gaussian summary of one environment belief component.
struct Marginal<T> {
    log_weight: T,
    means: Vec<crate::trajectory::Point<T>>,
    vars: Vec<T>,
}

fn marginals<T: Real>(belief: &MixtureTrajectoryBelief<T>) -> Vec<Marginal<T>> {
    belief
        .weights()
        .iter()
        .zip(belief.components())
        .filter(|(w, _)| **w > T::zero())
        .map(|(w, c)| Marginal {
            log_weight: w.ln(),
            means: c.mean().points().to_vec(),
            vars: (0..c.grid().len()).map(|k| c.marginal_variance(k)).collect(),
        })
        .collect()
}

/// Decoupled planning: the machines plan against each environment agent's
/// independent predictive marginal instead of sampling the agents jointly.
///
/// The environment enters only through the expected pair factor of every
/// machine sample against every agent marginal, so the prediction never
/// reacts to the machine's plan.
pub fn decoupled_fuse<T: Real>(
    human: Option<&MixtureTrajectoryBelief<T>>,
    agents: &AgentSet<T>,
    params: &InteractionParams<T>,
    count: usize,
    seed: u64,
) -> Result<FusionDecision<T>> {
    params.validate()?;
    if let Some(h) = human {
        check_grid(h.grid(), agents)?;
    }
    let human_samples = match human {
        Some(h) => sample_trajectories(h, count, derive_seed(seed, HUMAN_STREAM))?,
        None => Vec::new(),
    };
    let (machines, _) = draw_agents(agents, count, seed)?;
    let env: Vec<Vec<Marginal<T>>> = agents.environment.iter().map(marginals).collect();
    let mut scores = Vec::with_capacity(count);
    for s in 0..count {
        let own: Vec<&Trajectory<T>> = machines.iter().map(|m| &m[s]).collect();
        let mut score = log_potential(None, None, &own, params);
        score += obstacle_potential(&own, &agents.obstacles, params);
        if let (Some(h), Some(hs)) = (human, human_samples.get(s)) {
            score += h.log_density(hs)?.value + cohesion(hs, own[0], params);
        }
        for (belief, m) in agents.machines.iter().zip(&own) {
            score += belief.log_density(m)?.value;
        }
        if params.repulsion_strength > T::zero() {
            for m in &own {
                for agent in &env {
                    for (k, p) in m.points().iter().enumerate() {
                        let terms: Vec<T> = agent
                            .iter()
                            .map(|c| {
                                c.log_weight
                                    + params.expected_pair_factor(dist_sq(p, &c.means[k]), c.vars[k]).ln()
                            })
                            .collect();
                        score += log_sum_exp(&terms);
                    }
                }
            }
        }
        scores.push(score);
    }
    let Some((best, _)) = argmax(scores.into_iter()) else {
        return invalid("no machine sample has a finite score");
    };
    Ok(FusionDecision {
        action: machines[0][best].next_point(),
        chosen_joint: Some(best),
        architecture: Architecture::IrtDecoupled,
    })
}
