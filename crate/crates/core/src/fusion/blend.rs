use serde::{Deserialize, Serialize};

use super::{Architecture, FusionDecision};
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::trajectory::Point;

/// Operator weight `K_h(t)` of a linear blend. The autonomy weight is always
/// `1 - K_h(t)` and is never stored.
///
/// Sequences hold their last value past the end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub enum BlendSchedule<T: Real> {
    Constant { k_h: T },
    /// Each entry is 0 (autonomy in control) or 1 (operator in control).
    Switching { k_h: Vec<T> },
    TimeIndexed { k_h: Vec<T> },
}

impl<T: Real> Default for BlendSchedule<T> {
    fn default() -> Self {
        BlendSchedule::Constant { k_h: T::lit(0.5) }
    }
}

impl<T: Real> BlendSchedule<T> {
    pub fn constant(k_h: T) -> Result<Self> {
        let s = BlendSchedule::Constant { k_h };
        s.validate()?;
        Ok(s)
    }

    pub fn switching(k_h: Vec<T>) -> Result<Self> {
        let s = BlendSchedule::Switching { k_h };
        s.validate()?;
        Ok(s)
    }

    pub fn time_indexed(k_h: Vec<T>) -> Result<Self> {
        let s = BlendSchedule::TimeIndexed { k_h };
        s.validate()?;
        Ok(s)
    }

    /// Operator picks the play at step 0, machines execute from step 1 on.
    pub fn playbook() -> Self {
        BlendSchedule::Switching { k_h: vec![T::one(), T::zero()] }
    }

    /// Operator inputs, machine processes, operator decides.
    pub fn hci() -> Self {
        BlendSchedule::Switching { k_h: vec![T::one(), T::zero(), T::one()] }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |k: &T| *k >= T::zero() && *k <= T::one();
        match self {
            BlendSchedule::Constant { k_h } => {
                if !in_unit(k_h) {
                    return invalid(format!("blend weight {k_h} outside [0, 1]"));
                }
            }
            BlendSchedule::Switching { k_h } => {
                if k_h.is_empty() {
                    return invalid("switching schedule needs at least one entry");
                }
                if k_h.iter().any(|k| *k != T::zero() && *k != T::one()) {
                    return invalid("switching schedule weights must be exactly 0 or 1");
                }
            }
            BlendSchedule::TimeIndexed { k_h } => {
                if k_h.is_empty() {
                    return invalid("time-indexed schedule needs at least one entry");
                }
                if !k_h.iter().all(in_unit) {
                    return invalid("time-indexed schedule weights must lie in [0, 1]");
                }
            }
        }
        Ok(())
    }

    pub fn k_h(&self, step: usize) -> T {
        match self {
            BlendSchedule::Constant { k_h } => *k_h,
            BlendSchedule::Switching { k_h } | BlendSchedule::TimeIndexed { k_h } => {
                k_h[step.min(k_h.len() - 1)]
            }
        }
    }

    pub fn k_r(&self, step: usize) -> T {
        T::one() - self.k_h(step)
    }
}

/// `k * u_h + (1 - k) * u_r` with `k = schedule.k_h(step)`.
///
/// Weights of exactly 0 or 1 return the selected input bit for bit.
pub fn linear_blend<T: Real>(
    u_h: Point<T>,
    u_r: Point<T>,
    schedule: &BlendSchedule<T>,
    step: usize,
) -> FusionDecision<T> {
    let k = schedule.k_h(step);
    let action = if k == T::one() {
        u_h
    } else if k == T::zero() {
        u_r
    } else {
        u_h * k + u_r * (T::one() - k)
    };
    let architecture = match schedule {
        BlendSchedule::Switching { .. } => Architecture::Switching,
        _ => Architecture::Linear,
    };
    FusionDecision { action, chosen_joint: None, architecture }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_blend_of_unit_vectors() {
        let d = linear_blend(Point::new(1.0, 0.0), Point::new(0.0, 1.0), &BlendSchedule::constant(0.5).unwrap(), 0);
        assert_eq!(d.action, Point::new(0.5, 0.5));
        assert_eq!(d.architecture, Architecture::Linear);
    }

    #[test]
    fn playbook_hands_over_after_first_step() {
        let s = BlendSchedule::<f64>::playbook();
        let u_h = Point::new(0.3, -2.0);
        let u_r = Point::new(7.0, 1.0);
        assert_eq!(linear_blend(u_h, u_r, &s, 0).action, u_h);
        assert_eq!(linear_blend(u_h, u_r, &s, 1).action, u_r);
        assert_eq!(linear_blend(u_h, u_r, &s, 50).action, u_r);
        assert_eq!(linear_blend(u_h, u_r, &s, 0).architecture, Architecture::Switching);
    }

    #[test]
    fn hci_returns_control_to_operator() {
        let s = BlendSchedule::<f64>::hci();
        assert_eq!(s.k_h(0), 1.0);
        assert_eq!(s.k_r(1), 1.0);
        assert_eq!(s.k_h(2), 1.0);
    }

    #[test]
    fn full_operator_weight_is_human_only() {
        let s = BlendSchedule::constant(1.0).unwrap();
        for step in 0..5 {
            let u_h = Point::new(step as f64, -0.0);
            assert_eq!(linear_blend(u_h, Point::new(9.0, 9.0), &s, step).action, u_h);
        }
    }

    #[test]
    fn invalid_schedules_rejected() {
        assert!(BlendSchedule::constant(1.5).is_err());
        assert!(BlendSchedule::switching(vec![0.5]).is_err());
        assert!(BlendSchedule::<f64>::switching(vec![]).is_err());
        assert!(BlendSchedule::time_indexed(vec![0.2, -0.1]).is_err());
    }
}
