use std::path::Path;

use serde::Serialize;

use crate::control::Phase;
use crate::cycle::trace::TraceSample;
use crate::error::{Error, Result};

/// Aggregates of one completed pumping cycle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CycleMetrics {
    pub index: usize,
    /// Cycle-average winch power: total energy over total duration [W].
    pub p_cycle: f64,
    /// Phase-average powers [W].
    pub p_trac: f64,
    pub p_retr: f64,
    /// Time-weighted average tether forces [N].
    pub f_trac_avg: f64,
    pub f_retr_avg: f64,
    /// Time-weighted average reel speeds, signed [m/s].
    pub v_trac_avg: f64,
    pub v_retr_avg: f64,
    /// Durations per phase [s].
    pub dur_trac: f64,
    pub dur_retr: f64,
    pub dur_trans1: f64,
    pub dur_trans2: f64,
    /// Energies per phase [J].
    pub energy_trac: f64,
    pub energy_retr: f64,
    pub energy_trans1: f64,
    pub energy_trans2: f64,
    pub feasible: bool,
}

impl CycleMetrics {
    pub fn total_duration(&self) -> f64 {
        self.dur_trac + self.dur_trans1 + self.dur_retr + self.dur_trans2
    }

    pub fn total_energy(&self) -> f64 {
        self.energy_trac + self.energy_trans1 + self.energy_retr + self.energy_trans2
    }
}

/// Left-rectangle quadrature over a cycle's samples: the interval
/// [t_i, t_{i+1}) carries sample i's phase, power and force, so
/// `p_cycle * total_duration == total_energy` holds by construction.
/// The last sample only closes the final interval.
pub fn cycle_metrics(samples: &[TraceSample], index: usize) -> Result<CycleMetrics> {
    if samples.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: samples.len(),
        });
    }
    let mut dur = [0.0; 4];
    let mut energy = [0.0; 4];
    let mut force = [0.0; 4];
    let mut speed = [0.0; 4];
    for pair in samples.windows(2) {
        let dt = pair[1].time - pair[0].time;
        let k = pair[0].phase as usize;
        dur[k] += dt;
        energy[k] += pair[0].winch_power * dt;
        force[k] += pair[0].tether_force * dt;
        speed[k] += pair[0].reel_speed * dt;
    }
    let trac = Phase::Traction as usize;
    let retr = Phase::Retraction as usize;
    for (phase, name) in [(trac, "traction"), (retr, "retraction")] {
        if dur[phase] <= 0.0 {
            return Err(Error::PhaseAbsent(name));
        }
    }
    let total_dur: f64 = dur.iter().sum();
    let total_energy: f64 = energy.iter().sum();
    Ok(CycleMetrics {
        index,
        p_cycle: total_energy / total_dur,
        p_trac: energy[trac] / dur[trac],
        p_retr: energy[retr] / dur[retr],
        f_trac_avg: force[trac] / dur[trac],
        f_retr_avg: force[retr] / dur[retr],
        v_trac_avg: speed[trac] / dur[trac],
        v_retr_avg: speed[retr] / dur[retr],
        dur_trac: dur[trac],
        dur_retr: dur[retr],
        dur_trans1: dur[Phase::Transition1 as usize],
        dur_trans2: dur[Phase::Transition2 as usize],
        energy_trac: energy[trac],
        energy_retr: energy[retr],
        energy_trans1: energy[Phase::Transition1 as usize],
        energy_trans2: energy[Phase::Transition2 as usize],
        feasible: true,
    })
}

/// Time-weighted mean tether force over one phase of the samples.
pub fn average_phase_force(samples: &[TraceSample], phase: Phase) -> Result<f64> {
    let mut dur = 0.0;
    let mut integral = 0.0;
    for pair in samples.windows(2) {
        if pair[0].phase == phase {
            let dt = pair[1].time - pair[0].time;
            dur += dt;
            integral += pair[0].tether_force * dt;
        }
    }
    if dur <= 0.0 {
        return Err(Error::PhaseAbsent(phase.name()));
    }
    Ok(integral / dur)
}

/// Steady state: the two most recent cycles agree in cycle power and in
/// every phase duration to `rel_tol`. Denominators are floored at one watt
/// and one second so near-zero quantities do not blow up the ratio.
pub fn detect_periodicity(history: &[CycleMetrics], rel_tol: f64) -> bool {
    let [.., prev, last] = history else {
        return false;
    };
    let close = |a: f64, b: f64, floor: f64| (a - b).abs() <= rel_tol * b.abs().max(floor);
    close(last.p_cycle, prev.p_cycle, 1.0)
        && close(last.dur_trac, prev.dur_trac, 1.0)
        && close(last.dur_trans1, prev.dur_trans1, 1.0)
        && close(last.dur_retr, prev.dur_retr, 1.0)
        && close(last.dur_trans2, prev.dur_trans2, 1.0)
}

/// One exported metrics row: the cycle aggregates tagged with the operating
/// point they were produced at.
#[derive(Debug, Clone, Copy)]
pub struct MetricsRow {
    pub v_w: f64,
    pub v_trac: f64,
    pub v_retr: f64,
    pub metrics: CycleMetrics,
}

#[derive(Serialize)]
struct MetricsCsvRow {
    v_w: f64,
    v_trac: f64,
    v_retr: f64,
    #[serde(rename = "P_cycle_W")]
    p_cycle_w: f64,
    #[serde(rename = "P_trac_W")]
    p_trac_w: f64,
    #[serde(rename = "P_retr_W")]
    p_retr_w: f64,
    #[serde(rename = "F_trac_N")]
    f_trac_n: f64,
    #[serde(rename = "F_retr_N")]
    f_retr_n: f64,
    dur_trac_s: f64,
    dur_retr_s: f64,
    feasible: u8,
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        let m = &row.metrics;
        w.serialize(MetricsCsvRow {
            v_w: row.v_w,
            v_trac: row.v_trac,
            v_retr: row.v_retr,
            p_cycle_w: m.p_cycle,
            p_trac_w: m.p_trac,
            p_retr_w: m.p_retr,
            f_trac_n: m.f_trac_avg,
            f_retr_n: m.f_retr_avg,
            dur_trac_s: m.dur_trac,
            dur_retr_s: m.dur_retr,
            feasible: m.feasible as u8,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::trace::sample_at;
    use approx::assert_relative_eq;

    /// Samples forming phases of given (phase, duration, power) blocks at
    /// 10 Hz, force = power / reel speed of 1.
    fn blocks(blocks: &[(Phase, f64, f64)]) -> Vec<TraceSample> {
        let mut out = Vec::new();
        let mut t = 0.0;
        for &(phase, dur, power) in blocks {
            let n = (dur / 0.1).round() as usize;
            for _ in 0..n {
                let mut s = sample_at(t, phase, power.abs(), power.signum());
                s.winch_power = power;
                out.push(s);
                t += 0.1;
            }
        }
        // closing boundary sample; its phase labels no interval
        out.push(sample_at(t, Phase::Traction, 0.0, 0.0));
        out
    }

    #[test]
    fn constant_power_is_cycle_power() {
        let samples = blocks(&[
            (Phase::Traction, 30.0, 750.0),
            (Phase::Transition1, 5.0, 750.0),
            (Phase::Retraction, 10.0, 750.0),
            (Phase::Transition2, 5.0, 750.0),
        ]);
        let m = cycle_metrics(&samples, 0).unwrap();
        assert_relative_eq!(m.p_cycle, 750.0, max_relative = 1e-12);
    }

    #[test]
    fn piecewise_constant_cycle_power() {
        let samples = blocks(&[
            (Phase::Traction, 60.0, 10_000.0),
            (Phase::Transition1, 5.0, 0.0),
            (Phase::Retraction, 20.0, -2_000.0),
            (Phase::Transition2, 5.0, 0.0),
        ]);
        let m = cycle_metrics(&samples, 3).unwrap();
        assert_relative_eq!(m.p_cycle, 560_000.0 / 90.0, max_relative = 1e-12);
        assert_relative_eq!(m.p_trac, 10_000.0, max_relative = 1e-12);
        assert_relative_eq!(m.p_retr, -2_000.0, max_relative = 1e-12);
        assert_relative_eq!(m.dur_trac, 60.0, max_relative = 1e-12);
        assert_relative_eq!(m.dur_retr, 20.0, max_relative = 1e-12);
    }

    #[test]
    fn energy_identity_is_exact() {
        let samples = blocks(&[
            (Phase::Traction, 41.3, 9_321.0),
            (Phase::Transition1, 6.2, -13.0),
            (Phase::Retraction, 17.9, -2_462.0),
            (Phase::Transition2, 4.4, -8.0),
        ]);
        let m = cycle_metrics(&samples, 0).unwrap();
        let lhs = m.p_cycle * m.total_duration();
        assert_relative_eq!(lhs, m.total_energy(), max_relative = 1e-12);
    }

    #[test]
    fn weighted_force_average() {
        let mut samples = Vec::new();
        for i in 0..100 {
            samples.push(sample_at(i as f64 * 0.1, Phase::Traction, 2000.0, 1.0));
        }
        for i in 100..400 {
            samples.push(sample_at(i as f64 * 0.1, Phase::Traction, 4000.0, 1.0));
        }
        samples.push(sample_at(40.0, Phase::Transition1, 0.0, 0.0));
        let f = average_phase_force(&samples, Phase::Traction).unwrap();
        assert_relative_eq!(f, 3500.0, max_relative = 1e-12);
        assert!(average_phase_force(&samples, Phase::Retraction).is_err());
    }

    fn metrics_with(p: f64, durs: [f64; 4]) -> CycleMetrics {
        CycleMetrics {
            index: 0,
            p_cycle: p,
            p_trac: 0.0,
            p_retr: 0.0,
            f_trac_avg: 0.0,
            f_retr_avg: 0.0,
            v_trac_avg: 0.0,
            v_retr_avg: 0.0,
            dur_trac: durs[0],
            dur_retr: durs[2],
            dur_trans1: durs[1],
            dur_trans2: durs[3],
            energy_trac: 0.0,
            energy_retr: 0.0,
            energy_trans1: 0.0,
            energy_trans2: 0.0,
            feasible: true,
        }
    }

    #[test]
    fn periodicity_detection() {
        let d = [60.0, 5.0, 20.0, 5.0];
        let a = metrics_with(10_000.0, d);
        let b = metrics_with(10_100.0, d);
        let c = metrics_with(12_000.0, d);
        assert!(detect_periodicity(&[a, a], 0.02));
        assert!(detect_periodicity(&[a, b], 0.02));
        assert!(!detect_periodicity(&[metrics_with(8_000.0, d), c], 0.02));
        assert!(!detect_periodicity(&[a], 0.02));
        assert!(!detect_periodicity(&[], 0.02));
        // same power, drifting duration
        let mut slow = a;
        slow.dur_retr = 30.0;
        assert!(!detect_periodicity(&[a, slow], 0.02));
    }

    #[test]
    fn metrics_csv_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let rows = [MetricsRow {
            v_w: 9.0,
            v_trac: 1.6,
            v_retr: -3.0,
            metrics: metrics_with(5_500.0, [60.0, 5.0, 20.0, 5.0]),
        }];
        write_metrics_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "v_w,v_trac,v_retr,P_cycle_W,P_trac_W,P_retr_W,F_trac_N,F_retr_N,dur_trac_s,dur_retr_s,feasible"
        ));
        assert!(text.lines().nth(1).unwrap().ends_with(",1"));
    }
}
