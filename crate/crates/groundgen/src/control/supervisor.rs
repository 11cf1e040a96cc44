use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Operating phase of the pumping cycle. Phases always advance in cycle
/// order: Traction -> Transition1 -> Retraction -> Transition2 -> Traction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Traction,
    Transition1,
    Retraction,
    Transition2,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Traction => "traction",
            Phase::Transition1 => "transition1",
            Phase::Retraction => "retraction",
            Phase::Transition2 => "transition2",
        }
    }

    pub fn next(self) -> Phase {
        match self {
            Phase::Traction => Phase::Transition1,
            Phase::Transition1 => Phase::Retraction,
            Phase::Retraction => Phase::Transition2,
            Phase::Transition2 => Phase::Traction,
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        match s {
            "traction" => Some(Phase::Traction),
            "transition1" => Some(Phase::Transition1),
            "retraction" => Some(Phase::Retraction),
            "transition2" => Some(Phase::Transition2),
            _ => None,
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Rectangular region of the sky in (elevation, azimuth) coordinates [rad].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub elevation: [f64; 2],
    pub azimuth: [f64; 2],
}

impl Zone {
    pub fn contains(&self, elevation: f64, azimuth: f64) -> bool {
        elevation >= self.elevation[0]
            && elevation <= self.elevation[1]
            && azimuth >= self.azimuth[0]
            && azimuth <= self.azimuth[1]
    }

    fn validate(&self, field: &str) -> Result<()> {
        if self.elevation[0] >= self.elevation[1] || self.azimuth[0] >= self.azimuth[1] {
            return Err(Error::config(field, "zone bounds must satisfy min < max"));
        }
        Ok(())
    }
}

/// Phase-switching thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupervisorConfig {
    /// Tether length at which retraction stops and a new cycle begins [m].
    pub l_min: f64,
    /// Tether length at which traction ends [m].
    pub l_max: f64,
    /// Sky region flown during traction.
    pub power_zone: Zone,
    /// Sky region where the kite parks for retraction.
    pub parking_zone: Zone,
    /// Load level below which the line may be held or winched in [N].
    /// Transitions reel out for relief while force sits above it, and
    /// retraction pauses the reel-in.
    pub release_force: f64,
    /// Traction ends once the line is fully out and the weave azimuth next
    /// crosses this value [rad]. Signed: the stop lands on the turn nearest
    /// the parking side every cycle, so consecutive cycles start their climb
    /// from one repeatable state rather than one of two mirrored ones. Keep
    /// the magnitude at the flight controller's side-switch threshold: every
    /// loop crosses that by construction.
    pub release_azimuth: f64,
    /// Force limiter during traction: payout speeds up to `relief_speed`
    /// while force exceeds this [N]. Sits above the pattern peaks so it only
    /// catches entry transients; the margin to the force constraint is what
    /// the limiter has to work with.
    pub relief_force: f64,
    /// Payout speed while the traction force limiter is active [m/s].
    pub relief_speed: f64,
    /// Reel-in waits until the kite has slowed to this tangential speed
    /// inside the parking zone; winching in a fast kite feeds it energy
    /// through the tether [m/s].
    pub park_entry_speed: f64,
    /// Maximum duration of each transition phase before forcing the switch
    /// and flagging the cycle [s].
    pub transition_timeout: f64,
    /// Tangential speed that counts as "moving crosswind" when leaving
    /// Transition2 [m/s].
    pub align_min_speed: f64,
}

impl Default for SupervisorConfig {
    fn default() -> Self {
        SupervisorConfig {
            l_min: 200.0,
            l_max: 280.0,
            power_zone: Zone {
                elevation: [0.12, 0.85],
                azimuth: [-0.9, 0.9],
            },
            parking_zone: Zone {
                elevation: [1.05, 1.53],
                azimuth: [0.6, 1.45],
            },
            release_force: 19_000.0,
            release_azimuth: 0.22,
            relief_force: 21_000.0,
            relief_speed: 4.5,
            park_entry_speed: 6.0,
            transition_timeout: 45.0,
            align_min_speed: 4.0,
        }
    }
}

impl SupervisorConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.l_min > 0.0 && self.l_min < self.l_max) {
            return Err(Error::config(
                format!("{prefix}.l_min/l_max"),
                format!("need 0 < l_min < l_max, got {} and {}", self.l_min, self.l_max),
            ));
        }
        self.power_zone.validate(&format!("{prefix}.power_zone"))?;
        self.parking_zone.validate(&format!("{prefix}.parking_zone"))?;
        if !(self.release_force > 0.0) {
            return Err(Error::config(
                format!("{prefix}.release_force"),
                "must be positive",
            ));
        }
        if !(self.release_azimuth.is_finite() && self.release_azimuth != 0.0) {
            return Err(Error::config(
                format!("{prefix}.release_azimuth"),
                "must be nonzero, signed toward the parking side",
            ));
        }
        if !(self.relief_force > 0.0) {
            return Err(Error::config(
                format!("{prefix}.relief_force"),
                "must be positive",
            ));
        }
        if !(self.relief_speed > 0.0) {
            return Err(Error::config(
                format!("{prefix}.relief_speed"),
                "must be positive",
            ));
        }
        if !(self.park_entry_speed > 0.0) {
            return Err(Error::config(
                format!("{prefix}.park_entry_speed"),
                "must be positive",
            ));
        }
        if !(self.transition_timeout > 0.0) {
            return Err(Error::config(
                format!("{prefix}.transition_timeout"),
                "must be positive",
            ));
        }
        if !(self.align_min_speed >= 0.0) {
            return Err(Error::config(
                format!("{prefix}.align_min_speed"),
                "must be non-negative",
            ));
        }
        Ok(())
    }
}

/// What the supervisor sees at each decision tick.
#[derive(Debug, Clone, Copy)]
pub struct Telemetry {
    pub time: f64,
    pub tether_length: f64,
    pub tether_force: f64,
    pub elevation: f64,
    pub azimuth: f64,
    pub tangential_speed: f64,
}

/// Phase machine state.
#[derive(Debug, Clone, Copy)]
pub struct SupervisorState {
    pub phase: Phase,
    pub phase_start: f64,
    /// Set when a transition had to be forced by timeout; the cycle that
    /// contains it is not trustworthy.
    pub timed_out: bool,
}

impl SupervisorState {
    pub fn new(start_time: f64) -> Self {
        Self::in_phase(Phase::Traction, start_time)
    }

    pub fn in_phase(phase: Phase, start_time: f64) -> Self {
        SupervisorState {
            phase,
            phase_start: start_time,
            timed_out: false,
        }
    }
}

/// Advances the phase machine by one decision tick. Returns the (possibly
/// unchanged) phase; a completed cycle is observable as the
/// Transition2 -> Traction edge.
pub fn supervisor_step(
    sup: &mut SupervisorState,
    t: &Telemetry,
    cfg: &SupervisorConfig,
) -> Phase {
    let expired = t.time - sup.phase_start >= cfg.transition_timeout;
    let advance = match sup.phase {
        Phase::Traction => {
            let past = if cfg.release_azimuth >= 0.0 {
                t.azimuth >= cfg.release_azimuth
            } else {
                t.azimuth <= cfg.release_azimuth
            };
            t.tether_length >= cfg.l_max && past
        }
        Phase::Transition1 => {
            let parked = cfg.parking_zone.contains(t.elevation, t.azimuth)
                && t.tangential_speed <= cfg.park_entry_speed;
            if !parked && expired {
                sup.timed_out = true;
            }
            parked || expired
        }
        Phase::Retraction => t.tether_length <= cfg.l_min,
        Phase::Transition2 => {
            let ready = cfg.power_zone.contains(t.elevation, t.azimuth)
                && t.tangential_speed >= cfg.align_min_speed;
            if !ready && expired {
                sup.timed_out = true;
            }
            ready || expired
        }
    };
    if advance {
        sup.phase = sup.phase.next();
        sup.phase_start = t.time;
    }
    sup.phase
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tele(time: f64, lt: f64, force: f64, elev: f64, az: f64, speed: f64) -> Telemetry {
        Telemetry {
            time,
            tether_length: lt,
            tether_force: force,
            elevation: elev,
            azimuth: az,
            tangential_speed: speed,
        }
    }

    #[test]
    fn traction_ends_at_l_max_at_a_pattern_turn() {
        let cfg = SupervisorConfig::default();
        let mut sup = SupervisorState::new(0.0);
        // at a turn, but the line is not out yet
        assert_eq!(
            supervisor_step(&mut sup, &tele(1.0, cfg.l_max - 0.1, 20e3, 0.4, 0.3, 20.0), &cfg),
            Phase::Traction
        );
        // line out, but mid-window: hold for the next turn
        assert_eq!(
            supervisor_step(&mut sup, &tele(2.0, cfg.l_max, 20e3, 0.4, 0.05, 20.0), &cfg),
            Phase::Traction
        );
        // the far-side turn does not count: the stop must land park-side
        assert_eq!(
            supervisor_step(&mut sup, &tele(3.0, cfg.l_max, 20e3, 0.4, -0.3, 20.0), &cfg),
            Phase::Traction
        );
        assert_eq!(
            supervisor_step(&mut sup, &tele(4.0, cfg.l_max, 20e3, 0.4, 0.3, 20.0), &cfg),
            Phase::Transition1
        );
        assert_eq!(sup.phase_start, 4.0);
    }

    #[test]
    fn retraction_ends_at_l_min() {
        let cfg = SupervisorConfig::default();
        let mut sup = SupervisorState::in_phase(Phase::Retraction, 0.0);
        assert_eq!(
            supervisor_step(&mut sup, &tele(1.0, cfg.l_min + 1.0, 2e3, 1.3, 0.9, 2.0), &cfg),
            Phase::Retraction
        );
        assert_eq!(
            supervisor_step(&mut sup, &tele(2.0, cfg.l_min, 2e3, 1.3, 0.9, 2.0), &cfg),
            Phase::Transition2
        );
    }

    #[test]
    fn transition1_waits_for_slow_kite_in_parking_zone() {
        let cfg = SupervisorConfig::default();
        let mut sup = SupervisorState::in_phase(Phase::Transition1, 0.0);
        assert_eq!(
            supervisor_step(&mut sup, &tele(1.0, 280.0, 15e3, 0.5, 0.1, 20.0), &cfg),
            Phase::Transition1
        );
        // in the zone but still flying fast: hold until it bleeds off
        assert_eq!(
            supervisor_step(&mut sup, &tele(1.5, 280.0, 9e3, 1.3, 0.9, 25.0), &cfg),
            Phase::Transition1
        );
        assert_eq!(
            supervisor_step(&mut sup, &tele(2.0, 280.0, 4e3, 1.3, 0.9, 4.0), &cfg),
            Phase::Retraction
        );
        assert!(!sup.timed_out);
    }

    #[test]
    fn transition2_needs_zone_and_speed() {
        let cfg = SupervisorConfig::default();
        let mut sup = SupervisorState::in_phase(Phase::Transition2, 0.0);
        // in the power zone but too slow
        assert_eq!(
            supervisor_step(&mut sup, &tele(1.0, 200.0, 2e3, 0.4, 0.0, 1.0), &cfg),
            Phase::Transition2
        );
        assert_eq!(
            supervisor_step(&mut sup, &tele(2.0, 200.0, 2e3, 0.4, 0.0, 10.0), &cfg),
            Phase::Traction
        );
    }

    #[test]
    fn timeout_forces_transition_and_flags_it() {
        let cfg = SupervisorConfig::default();
        let mut sup = SupervisorState::in_phase(Phase::Transition1, 0.0);
        let t = tele(cfg.transition_timeout + 0.1, 280.0, 15e3, 0.4, 0.0, 20.0);
        assert_eq!(supervisor_step(&mut sup, &t, &cfg), Phase::Retraction);
        assert!(sup.timed_out);
    }

    #[test]
    fn phases_only_advance_in_cycle_order() {
        let cfg = SupervisorConfig::default();
        let mut sup = SupervisorState::new(0.0);
        let mut seen = vec![sup.phase];
        // drive through an artificial cycle
        let frames = [
            tele(1.0, 281.0, 14e3, 0.4, 0.3, 20.0), // -> t1
            tele(2.0, 281.0, 3e3, 1.3, 0.9, 5.0),   // -> retraction
            tele(3.0, 199.0, 2e3, 1.3, 0.9, 3.0),   // -> t2
            tele(4.0, 199.0, 9e3, 0.4, 0.1, 12.0),  // -> traction
        ];
        for f in &frames {
            let p = supervisor_step(&mut sup, f, &cfg);
            seen.push(p);
        }
        assert_eq!(
            seen,
            vec![
                Phase::Traction,
                Phase::Transition1,
                Phase::Retraction,
                Phase::Transition2,
                Phase::Traction
            ]
        );
    }
}
