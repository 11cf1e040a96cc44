use serde::{Deserialize, Serialize};

use crate::control::Phase;
use crate::error::{Error, Result};
use crate::physics::{KiteState, Vec3};

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    if w > std::f64::consts::PI {
        w - std::f64::consts::TAU
    } else {
        w
    }
}

/// Local tangent-plane basis at the kite: `north` points toward increasing
/// elevation, `east` toward increasing azimuth.
pub fn tangent_basis(elevation: f64, azimuth: f64) -> (Vec3, Vec3) {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    let north = Vec3::new(-se * ca, -se * sa, ce);
    let east = Vec3::new(-sa, ca, 0.0);
    (north, east)
}

/// Course (velocity) angle of the kite in the tangent plane, measured from
/// the `north` direction toward `east`.
pub fn course_angle(kite: &KiteState) -> f64 {
    let (north, east) = tangent_basis(kite.elevation(), kite.azimuth());
    kite.velocity.dot(&east).atan2(kite.velocity.dot(&north))
}

/// Course-feedback steering plus target-point navigation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlightConfig {
    /// Steering per radian of course error [-/rad].
    pub course_gain: f64,
    /// Steering per rad/s of course rate [s]; damps the weave a saturated
    /// pure-P course loop falls into.
    pub course_rate_gain: f64,
    /// Actuator saturation on the steering command [rad].
    pub steering_limit: f64,
    /// Elevation of the two traction targets [rad].
    pub target_elevation: f64,
    /// Azimuth magnitude of the two traction targets [rad].
    pub target_azimuth: f64,
    /// Crossing this azimuth magnitude toggles the active traction target,
    /// producing figure-eights [rad].
    pub switch_azimuth: f64,
    /// Parking target for transition 1 and retraction (elevation, azimuth)
    /// [rad].
    pub park_target: [f64; 2],
    /// Below this tangential speed the course angle is unreliable and the
    /// previous command is held [m/s].
    pub min_tangential_speed: f64,
}

impl Default for FlightConfig {
    fn default() -> Self {
        FlightConfig {
            course_gain: 0.05,
            course_rate_gain: 0.02,
            steering_limit: 0.04,
            target_elevation: 0.42,
            target_azimuth: 0.55,
            switch_azimuth: 0.22,
            park_target: [1.38, 0.9],
            min_tangential_speed: 0.5,
        }
    }
}

impl FlightConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("course_gain", self.course_gain),
            ("steering_limit", self.steering_limit),
            ("target_elevation", self.target_elevation),
            ("target_azimuth", self.target_azimuth),
            ("switch_azimuth", self.switch_azimuth),
            ("min_tangential_speed", self.min_tangential_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    format!("{prefix}.{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if !(self.course_rate_gain.is_finite() && self.course_rate_gain >= 0.0) {
            return Err(Error::config(
                format!("{prefix}.course_rate_gain"),
                format!("must be non-negative, got {}", self.course_rate_gain),
            ));
        }
        if self.switch_azimuth >= self.target_azimuth {
            return Err(Error::config(
                format!("{prefix}.switch_azimuth"),
                "must be smaller than target_azimuth",
            ));
        }
        Ok(())
    }
}

/// Navigation memory between ticks.
#[derive(Debug, Clone, Copy)]
pub struct FlightState {
    /// +1 flies toward the +azimuth traction target, -1 toward the mirror.
    pub side: f64,
    pub last_steering: f64,
    /// Course angle at the previous tick, for the rate term; cleared while
    /// the course is unreliable.
    pub prev_course: Option<f64>,
}

impl Default for FlightState {
    fn default() -> Self {
        FlightState {
            side: 1.0,
            last_steering: 0.0,
            prev_course: None,
        }
    }
}

/// One flight-controller tick at period `dt`: picks the active target for
/// the phase, computes the course error and rate, and returns the saturated
/// steering command.
pub fn flight_command(
    kite: &KiteState,
    phase: Phase,
    cfg: &FlightConfig,
    nav: &mut FlightState,
    dt: f64,
) -> f64 {
    let elevation = kite.elevation();
    let azimuth = kite.azimuth();

    let (target_elev, target_az) = match phase {
        Phase::Traction | Phase::Transition2 => {
            // toggle sides when the kite sweeps past the switching azimuth
            if nav.side > 0.0 && azimuth >= cfg.switch_azimuth {
                nav.side = -1.0;
            } else if nav.side < 0.0 && azimuth <= -cfg.switch_azimuth {
                nav.side = 1.0;
            }
            (cfg.target_elevation, cfg.target_azimuth * nav.side)
        }
        Phase::Transition1 | Phase::Retraction => (cfg.park_target[0], cfg.park_target[1]),
    };

    if kite.tangential_speed() < cfg.min_tangential_speed {
        nav.prev_course = None;
        return nav.last_steering;
    }

    let to_north = target_elev - elevation;
    let to_east = wrap_angle(target_az - azimuth) * elevation.cos();
    let bearing = to_east.atan2(to_north);
    let course = course_angle(kite);
    let error = wrap_angle(bearing - course);
    let rate = match nav.prev_course {
        Some(prev) => wrap_angle(course - prev) / dt,
        None => 0.0,
    };
    nav.prev_course = Some(course);
    let steering = (cfg.course_gain * error - cfg.course_rate_gain * rate)
        .clamp(-cfg.steering_limit, cfg.steering_limit);
    nav.last_steering = steering;
    steering
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wrap_is_symmetric_at_pi() {
        assert_relative_eq!(wrap_angle(std::f64::consts::PI), std::f64::consts::PI);
        assert_relative_eq!(wrap_angle(-std::f64::consts::PI), std::f64::consts::PI);
        assert_relative_eq!(wrap_angle(3.0 * std::f64::consts::PI / 2.0), -std::f64::consts::PI / 2.0);
        assert_relative_eq!(wrap_angle(0.3), 0.3);
    }

    #[test]
    fn zero_course_error_gives_zero_steering() {
        let cfg = FlightConfig::default();
        let mut nav = FlightState::default();
        // kite on the +x axis moving straight at the +azimuth target's bearing
        let mut kite = KiteState::from_spherical(cfg.target_elevation, 0.0, 250.0);
        let (north, east) = tangent_basis(kite.elevation(), kite.azimuth());
        let to_east = wrap_angle(cfg.target_azimuth) * kite.elevation().cos();
        let bearing = to_east.atan2(0.0);
        kite.velocity = (north * bearing.cos() + east * bearing.sin()) * 15.0;
        let s = flight_command(&kite, Phase::Traction, &cfg, &mut nav, 0.1);
        assert!(s.abs() < 1e-12, "steering {s}");
    }

    #[test]
    fn steering_saturates_at_limit() {
        let cfg = FlightConfig::default();
        let mut nav = FlightState::default();
        let mut kite = KiteState::from_spherical(0.38, -0.5, 250.0);
        // flying straight away from the target
        let (north, _) = tangent_basis(kite.elevation(), kite.azimuth());
        kite.velocity = -north * 20.0;
        let s = flight_command(&kite, Phase::Traction, &cfg, &mut nav, 0.1);
        assert!(s.abs() <= cfg.steering_limit + 1e-15);
        assert!(s.abs() > 0.9 * cfg.steering_limit);
    }

    #[test]
    fn slow_kite_holds_previous_command() {
        let cfg = FlightConfig::default();
        let mut nav = FlightState {
            side: 1.0,
            last_steering: 0.0123,
            prev_course: None,
        };
        let kite = KiteState::from_spherical(1.1, 0.8, 200.0); // zero velocity
        let s = flight_command(&kite, Phase::Retraction, &cfg, &mut nav, 0.1);
        assert_eq!(s, 0.0123);
    }

    #[test]
    fn side_toggles_past_switch_azimuth() {
        let cfg = FlightConfig::default();
        let mut nav = FlightState::default();
        let mut kite = KiteState::from_spherical(0.4, cfg.switch_azimuth + 0.01, 250.0);
        kite.velocity = Vec3::new(0.0, 15.0, 0.0);
        flight_command(&kite, Phase::Traction, &cfg, &mut nav, 0.1);
        assert!(nav.side < 0.0);
        let mut kite = KiteState::from_spherical(0.4, -cfg.switch_azimuth - 0.01, 250.0);
        kite.velocity = Vec3::new(0.0, -15.0, 0.0);
        flight_command(&kite, Phase::Traction, &cfg, &mut nav, 0.1);
        assert!(nav.side > 0.0);
    }

    #[test]
    fn parking_target_used_during_retraction() {
        let cfg = FlightConfig::default();
        let mut nav = FlightState::default();
        // kite below and left of the park point, flying "north"
        let mut kite = KiteState::from_spherical(0.9, 0.2, 200.0);
        let (north, east) = tangent_basis(kite.elevation(), kite.azimuth());
        kite.velocity = north * 8.0;
        let s = flight_command(&kite, Phase::Retraction, &cfg, &mut nav, 0.1);
        // target sits to the east, so the command must steer positive
        let to_east = wrap_angle(cfg.park_target[1] - 0.2) * 0.9f64.cos();
        assert!(to_east > 0.0);
        assert!(s > 0.0, "steering {s}");
        let _ = east;
    }
}
