//! Trajectory beliefs, decision fusion, and collective-intent completion for
//! human-machine teams.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for `f32`
//! and `f64`); the aliases at the crate root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod completion;
pub mod error;
pub mod fusion;
pub mod rng;
pub mod scalar;
pub mod trajectory;

pub use error::{Error, Result};
pub use fusion::{Architecture, BlendSchedule, FusionDecision, InteractionParams, JointSampleEnsemble, ParticleIntent};
pub use scalar::Real;
pub use trajectory::{
    AgentSet, Disc, GaussianTrajectoryBelief, KernelSpec, MixtureTrajectoryBelief, ObservationSet, Point, TimeGrid,
    Trajectory,
};

pub type Point64 = Point<f64>;
pub type TimeGrid64 = TimeGrid<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Observations64 = ObservationSet<f64>;
pub type Kernel64 = KernelSpec<f64>;
pub type GaussianBelief64 = GaussianTrajectoryBelief<f64>;
pub type MixtureBelief64 = MixtureTrajectoryBelief<f64>;
pub type AgentSet64 = AgentSet<f64>;
pub type Disc64 = Disc<f64>;
pub type Interaction64 = InteractionParams<f64>;
pub type Schedule64 = BlendSchedule<f64>;
pub type Decision64 = FusionDecision<f64>;
pub type Ensemble64 = JointSampleEnsemble<f64>;
pub type Particles64 = ParticleIntent<f64>;
