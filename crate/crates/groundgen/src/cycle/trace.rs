use std::path::Path;

use serde::Serialize;

use crate::control::Phase;
use crate::error::Result;
use crate::physics::Vec3;

/// One 10 Hz snapshot of the closed loop.
#[derive(Debug, Clone, Copy)]
pub struct TraceSample {
    pub time: f64,
    pub kite_pos: Vec3,
    /// Ground-station load-cell reading: axial force of the first tether
    /// segment, clamped at zero (a rope cannot push) [N].
    pub tether_force: f64,
    /// Signed drum-surface speed, positive reeling out [m/s].
    pub reel_speed: f64,
    /// Mechanical winch power `reel_speed * tether_force`, positive when
    /// generating [W].
    pub winch_power: f64,
    pub phase: Phase,
    /// Active reel-speed reference [m/s]; zero during transitions.
    pub v_ref: f64,
    /// Force target of the online law at the current speed [N]; zero when
    /// no law is active.
    pub f_star: f64,
    /// Motor torque applied over the next control interval, drum side [N*m].
    /// Kept for constraint checking; not part of the CSV schema.
    pub drum_torque: f64,
}

impl TraceSample {
    pub fn elevation(&self) -> f64 {
        self.kite_pos
            .z
            .atan2(self.kite_pos.xy().norm())
    }

    pub fn azimuth(&self) -> f64 {
        self.kite_pos.y.atan2(self.kite_pos.x)
    }
}

#[derive(Serialize)]
struct CsvRow {
    time_s: f64,
    kite_x: f64,
    kite_y: f64,
    kite_z: f64,
    #[serde(rename = "tether_force_N")]
    tether_force_n: f64,
    reel_speed_mps: f64,
    #[serde(rename = "winch_power_W")]
    winch_power_w: f64,
    phase: &'static str,
    v_ref_mps: f64,
    #[serde(rename = "F_star_N")]
    f_star_n: f64,
}

/// Recorded closed-loop history at the trace rate.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
}

impl Trace {
    pub fn push(&mut self, sample: TraceSample) {
        self.samples.push(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for s in &self.samples {
            w.serialize(CsvRow {
                time_s: s.time,
                kite_x: s.kite_pos.x,
                kite_y: s.kite_pos.y,
                kite_z: s.kite_pos.z,
                tether_force_n: s.tether_force,
                reel_speed_mps: s.reel_speed,
                winch_power_w: s.winch_power,
                phase: s.phase.name(),
                v_ref_mps: s.v_ref,
                f_star_n: s.f_star,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
pub(crate) fn sample_at(time: f64, phase: Phase, force: f64, reel_speed: f64) -> TraceSample {
    TraceSample {
        time,
        kite_pos: Vec3::new(200.0, 0.0, 100.0),
        tether_force: force,
        reel_speed,
        winch_power: force * reel_speed,
        phase,
        v_ref: reel_speed,
        f_star: 0.0,
        drum_torque: 0.0,
    }
}
