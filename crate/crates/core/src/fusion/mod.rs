//! Decision fusion: linear blending under a schedule, and MAP selection over
//! the joint posterior of human, machine, and environment trajectories.

mod blend;
mod joint;
mod potential;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use blend::{linear_blend, BlendSchedule};
pub use joint::{
    autonomy_joint_posterior, decoupled_fuse, environment_stream, irt_fuse, irt_joint_posterior,
    machine_stream, particle_fuse, JointSampleEnsemble, ParticleIntent, HUMAN_STREAM,
};
pub use potential::{interaction_potential, obstacle_potential, InteractionParams};

use crate::scalar::Real;
use crate::trajectory::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    HumanOnly,
    AutonomyOnly,
    Linear,
    Switching,
    Irt,
    IrtDecoupled,
}

impl Architecture {
    pub const ALL: [Architecture; 6] = [
        Architecture::HumanOnly,
        Architecture::AutonomyOnly,
        Architecture::Linear,
        Architecture::Switching,
        Architecture::Irt,
        Architecture::IrtDecoupled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::HumanOnly => "human_only",
            Architecture::AutonomyOnly => "autonomy_only",
            Architecture::Linear => "linear",
            Architecture::Switching => "switching",
            Architecture::Irt => "irt",
            Architecture::IrtDecoupled => "irt_decoupled",
        }
    }

    pub fn is_solo(self) -> bool {
        matches!(self, Architecture::HumanOnly | Architecture::AutonomyOnly)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| crate::error::Error::InvalidArgument(format!("unknown architecture `{s}`")))
    }
}

/// Output of one fusion step: the waypoint for step `t + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct FusionDecision<T: Real> {
    pub action: Point<T>,
    pub chosen_joint: Option<usize>,
    pub architecture: Architecture,
}
