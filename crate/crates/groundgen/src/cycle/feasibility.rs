use serde::{Deserialize, Serialize};

use crate::cycle::trace::TraceSample;
use crate::error::{Error, Result};

/// Operating limits a cycle must respect to count as feasible.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintSet {
    /// Tether tension safety threshold [N].
    pub max_tether_force: f64,
    /// Flight-zone box in elevation/azimuth [rad].
    pub min_elevation: f64,
    pub max_elevation: f64,
    pub max_abs_azimuth: f64,
    /// Winch limits on the drum surface [m/s] and drum side [N*m].
    pub max_reel_speed: f64,
    pub max_drum_torque: f64,
    /// Hard cap on one cycle's duration [s].
    pub max_cycle_duration: f64,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        ConstraintSet {
            max_tether_force: 23_000.0,
            min_elevation: 0.07,
            max_elevation: 1.53,
            max_abs_azimuth: 1.5,
            max_reel_speed: 7.0,
            max_drum_torque: 32_344.0,
            max_cycle_duration: 420.0,
        }
    }
}

impl ConstraintSet {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("max_tether_force", self.max_tether_force),
            ("max_elevation", self.max_elevation),
            ("max_abs_azimuth", self.max_abs_azimuth),
            ("max_reel_speed", self.max_reel_speed),
            ("max_drum_torque", self.max_drum_torque),
            ("max_cycle_duration", self.max_cycle_duration),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    format!("{prefix}.{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if !(self.min_elevation >= 0.0 && self.min_elevation < self.max_elevation) {
            return Err(Error::config(
                format!("{prefix}.min_elevation"),
                "need 0 <= min_elevation < max_elevation",
            ));
        }
        Ok(())
    }
}

/// First limit a sample broke, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub constraint: &'static str,
    pub time: f64,
    pub value: f64,
}

/// Limit check for one sample; `None` means within all bounds.
pub fn sample_violation(s: &TraceSample, c: &ConstraintSet) -> Option<Violation> {
    let at = |constraint, value| {
        Some(Violation {
            constraint,
            time: s.time,
            value,
        })
    };
    if s.tether_force > c.max_tether_force {
        return at("max_force", s.tether_force);
    }
    let elevation = s.elevation();
    if elevation < c.min_elevation {
        return at("min_elevation", elevation);
    }
    if elevation > c.max_elevation {
        return at("max_elevation", elevation);
    }
    let azimuth = s.azimuth();
    if azimuth.abs() > c.max_abs_azimuth {
        return at("max_azimuth", azimuth);
    }
    if s.reel_speed.abs() > c.max_reel_speed {
        return at("max_reel_speed", s.reel_speed);
    }
    if s.drum_torque.abs() > c.max_drum_torque {
        return at("max_torque", s.drum_torque);
    }
    None
}

/// Earliest violation in a sample run, including the duration cap measured
/// from the first sample.
pub fn first_violation(samples: &[TraceSample], c: &ConstraintSet) -> Option<Violation> {
    let start = samples.first()?.time;
    for s in samples {
        if s.time - start > c.max_cycle_duration {
            return Some(Violation {
                constraint: "max_duration",
                time: s.time,
                value: s.time - start,
            });
        }
        if let Some(v) = sample_violation(s, c) {
            return Some(v);
        }
    }
    None
}

/// Feasibility flag of a cycle: all samples within limits and the run
/// settled into a periodic orbit.
pub fn check_feasibility(samples: &[TraceSample], c: &ConstraintSet, periodic: bool) -> bool {
    periodic && first_violation(samples, c).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Phase;
    use crate::cycle::trace::sample_at;
    use crate::physics::Vec3;

    fn clean_run() -> Vec<TraceSample> {
        (0..100)
            .map(|i| sample_at(i as f64 * 0.1, Phase::Traction, 5_000.0, 1.5))
            .collect()
    }

    #[test]
    fn clean_periodic_run_is_feasible() {
        let c = ConstraintSet::default();
        assert!(check_feasibility(&clean_run(), &c, true));
        assert!(!check_feasibility(&clean_run(), &c, false));
    }

    #[test]
    fn single_force_spike_fails_as_max_force() {
        let c = ConstraintSet::default();
        let mut run = clean_run();
        run[40].tether_force = c.max_tether_force + 1.0;
        let v = first_violation(&run, &c).unwrap();
        assert_eq!(v.constraint, "max_force");
        assert_eq!(v.time, 4.0);
        assert!(!check_feasibility(&run, &c, true));
    }

    #[test]
    fn elevation_dip_fails_as_min_elevation() {
        let c = ConstraintSet::default();
        let mut run = clean_run();
        run[10].kite_pos = Vec3::new(250.0, 0.0, 2.0);
        let v = first_violation(&run, &c).unwrap();
        assert_eq!(v.constraint, "min_elevation");
    }

    #[test]
    fn each_limit_has_a_named_reason() {
        let c = ConstraintSet::default();
        let mut s = sample_at(0.0, Phase::Traction, 0.0, 0.0);
        s.kite_pos = Vec3::new(1.0, 0.0, 300.0);
        assert_eq!(sample_violation(&s, &c).unwrap().constraint, "max_elevation");
        let mut s = sample_at(0.0, Phase::Traction, 0.0, 0.0);
        s.kite_pos = Vec3::new(1.0, 250.0, 100.0);
        assert_eq!(sample_violation(&s, &c).unwrap().constraint, "max_azimuth");
        let s = sample_at(0.0, Phase::Traction, 0.0, -7.5);
        assert_eq!(sample_violation(&s, &c).unwrap().constraint, "max_reel_speed");
        let mut s = sample_at(0.0, Phase::Traction, 0.0, 0.0);
        s.drum_torque = c.max_drum_torque + 1.0;
        assert_eq!(sample_violation(&s, &c).unwrap().constraint, "max_torque");
    }

    #[test]
    fn overlong_cycle_fails_as_max_duration() {
        let c = ConstraintSet {
            max_cycle_duration: 5.0,
            ..ConstraintSet::default()
        };
        let v = first_violation(&clean_run(), &c).unwrap();
        assert_eq!(v.constraint, "max_duration");
    }

    #[test]
    fn boundary_values_pass() {
        let c = ConstraintSet::default();
        let s = sample_at(0.0, Phase::Traction, c.max_tether_force, c.max_reel_speed);
        assert_eq!(sample_violation(&s, &c), None);
    }
}
