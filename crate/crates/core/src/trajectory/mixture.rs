use rand::Rng;

use super::belief::{GaussianTrajectoryBelief, LogDensity};
use super::grid::{ObservationSet, TimeGrid, Trajectory};
use crate::error::{invalid, Result};
use crate::scalar::{log_sum_exp, Real};

pub(crate) fn weight_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::default_epsilon() * T::lit(1e3))
}

/// Finite Gaussian mixture over trajectories sharing one grid.
#[derive(Clone, Debug)]
pub struct MixtureTrajectoryBelief<T: Real> {
    weights: Vec<T>,
    components: Vec<GaussianTrajectoryBelief<T>>,
}

impl<T: Real> MixtureTrajectoryBelief<T> {
    /// Weights must already be a probability vector.
    pub fn new(weights: Vec<T>, components: Vec<GaussianTrajectoryBelief<T>>) -> Result<Self> {
        if components.is_empty() {
            return invalid("mixture needs at least one component");
        }
        if weights.len() != components.len() {
            return invalid(format!(
                "{} weights for {} mixture components",
                weights.len(),
                components.len()
            ));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite_real()) {
            return invalid("mixture weights must be finite and non-negative");
        }
        let sum = weights.iter().fold(T::zero(), |a, b| a + *b);
        if (sum - T::one()).abs() > weight_tolerance::<T>() {
            return invalid(format!("mixture weights sum to {sum}, expected 1"));
        }
        let grid = *components[0].grid();
        if components.iter().any(|c| !c.grid().same_as(&grid)) {
            return invalid("mixture components must share one time grid");
        }
        Ok(Self { weights, components })
    }

    /// Normalizes non-negative weights before construction.
    pub fn normalized(weights: Vec<T>, components: Vec<GaussianTrajectoryBelief<T>>) -> Result<Self> {
        let sum = weights.iter().fold(T::zero(), |a, b| a + *b);
        if !(sum > T::zero()) || !sum.is_finite_real() {
            return invalid("mixture weights must have a positive finite sum");
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect(), components)
    }

    pub fn single(component: GaussianTrajectoryBelief<T>) -> Self {
        Self { weights: vec![T::one()], components: vec![component] }
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.components[0].grid()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianTrajectoryBelief<T>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Index of the heaviest component (lowest index on ties).
    pub fn dominant(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    pub fn log_density(&self, traj: &Trajectory<T>) -> Result<LogDensity<T>> {
        let mut terms = Vec::with_capacity(self.len());
        let mut rank_deficient = false;
        for (w, c) in self.weights.iter().zip(&self.components) {
            if *w == T::zero() {
                continue;
            }
            let ld = c.log_density(traj)?;
            rank_deficient |= ld.rank_deficient;
            terms.push(w.ln() + ld.value);
        }
        Ok(LogDensity { value: log_sum_exp(&terms), rank_deficient })
    }

    /// Picks a component by weight, then samples it. Consumes one uniform
    /// draw plus the component's normals.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Trajectory<T> {
        let c = self.pick(rng.random::<f64>());
        self.components[c].sample(rng)
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

/// Result of conditioning a mixture on observations.
#[derive(Clone, Debug)]
pub struct MixturePosterior<T: Real> {
    pub belief: MixtureTrajectoryBelief<T>,
    /// `log p(obs)` under the prior mixture (`-inf` on underflow).
    pub log_evidence: T,
    /// Set when every component likelihood underflowed and weights fell back
    /// to uniform.
    pub weights_underflowed: bool,
}

/// Conditions every component on `obs` and reweights by marginal likelihood.
pub fn mixture_posterior<T: Real>(
    prior: &MixtureTrajectoryBelief<T>,
    obs: &ObservationSet<T>,
) -> Result<MixturePosterior<T>> {
    if obs.is_empty() {
        return Ok(MixturePosterior {
            belief: prior.clone(),
            log_evidence: T::zero(),
            weights_underflowed: false,
        });
    }
    let mut components = Vec::with_capacity(prior.len());
    let mut log_w = Vec::with_capacity(prior.len());
    for (w, c) in prior.weights.iter().zip(&prior.components) {
        let (post, log_ml) = c.condition(obs)?;
        components.push(post);
        let lw = if *w == T::zero() { T::neg_infinity() } else { w.ln() + log_ml };
        log_w.push(lw);
    }
    let log_evidence = log_sum_exp(&log_w);
    if !log_evidence.is_finite_real() {
        let n = T::lit(components.len() as f64);
        return Ok(MixturePosterior {
            belief: MixtureTrajectoryBelief { weights: vec![T::one() / n; components.len()], components },
            log_evidence: T::neg_infinity(),
            weights_underflowed: true,
        });
    }
    let weights = renormalize(log_w.iter().map(|lw| (*lw - log_evidence).exp()).collect());
    Ok(MixturePosterior {
        belief: MixtureTrajectoryBelief { weights, components },
        log_evidence,
        weights_underflowed: false,
    })
}

fn renormalize<T: Real>(w: Vec<T>) -> Vec<T> {
    let s = w.iter().fold(T::zero(), |a, b| a + *b);
    w.into_iter().map(|x| x / s).collect()
}
