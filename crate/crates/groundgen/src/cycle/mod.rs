//! Multi-rate closed-loop executor: advances the plant through pumping
//! cycles, records traces, and aggregates per-cycle metrics and feasibility.

mod feasibility;
mod metrics;
mod trace;

pub use feasibility::{
    check_feasibility, first_violation, sample_violation, ConstraintSet, Violation,
};
pub use metrics::{
    average_phase_force, cycle_metrics, detect_periodicity, write_metrics_csv, CycleMetrics,
    MetricsRow,
};
pub use trace::{Trace, TraceSample};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::control::{
    flight_command, online_reel_reference, supervisor_step, tangent_basis, winch_torque,
    FlightState, ManifoldModel, Phase, ReelRefState, SupervisorState, Telemetry, WinchLoopState,
};
use crate::error::{Error, Result};
use crate::physics::{
    ground_axial_force, stability_dt, Inputs, KiteState, Stepper, SystemState, TetherState,
    WinchState,
};

/// Loop rates and run-length policy of the executor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Winch speed-loop rate [Hz]; also the zero-order hold of the inputs.
    pub winch_rate_hz: f64,
    /// Supervisor, flight controller and trace rate [Hz].
    pub control_rate_hz: f64,
    /// Online reel-reference adaptation rate [Hz].
    pub reel_rate_hz: f64,
    /// Cap on completed cycles per run, warmup included.
    pub max_cycles: usize,
    /// Relative tolerance of the periodicity test.
    pub periodicity_rel_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            winch_rate_hz: 50.0,
            control_rate_hz: 10.0,
            reel_rate_hz: 1.0,
            max_cycles: 10,
            periodicity_rel_tol: 0.02,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("winch_rate_hz", self.winch_rate_hz),
            ("control_rate_hz", self.control_rate_hz),
            ("reel_rate_hz", self.reel_rate_hz),
            ("periodicity_rel_tol", self.periodicity_rel_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    format!("{prefix}.{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        exact_ratio(self.winch_rate_hz, self.control_rate_hz)
            .ok_or_else(|| Error::config(format!("{prefix}.control_rate_hz"), "must divide winch_rate_hz"))?;
        // reel updates piggyback on control ticks, so the chain must nest
        exact_ratio(self.control_rate_hz, self.reel_rate_hz)
            .ok_or_else(|| Error::config(format!("{prefix}.reel_rate_hz"), "must divide control_rate_hz"))?;
        if self.max_cycles < 2 {
            return Err(Error::config(
                format!("{prefix}.max_cycles"),
                "need at least a warmup cycle plus one measured cycle",
            ));
        }
        if self.periodicity_rel_tol >= 1.0 {
            return Err(Error::config(
                format!("{prefix}.periodicity_rel_tol"),
                "must be below 1",
            ));
        }
        Ok(())
    }
}

fn exact_ratio(hi: f64, lo: f64) -> Option<u64> {
    let r = hi / lo;
    let n = r.round();
    (n >= 1.0 && (r - n).abs() < 1e-9).then_some(n as u64)
}

/// Source of the reel-speed references for a run.
#[derive(Debug, Clone, Copy)]
pub enum ReelCommand<'a> {
    /// Constant references per powered phase (design-pipeline evaluations).
    Fixed { v_trac: f64, v_retr: f64 },
    /// Online force-feedback adaptation against the given force law.
    Online { manifold: &'a ManifoldModel },
}

/// One closed-loop run request.
#[derive(Debug, Clone, Copy)]
pub struct RunRequest<'a> {
    pub command: ReelCommand<'a>,
    /// Wind speed per cycle index; the last entry holds for later cycles.
    pub winds: &'a [f64],
    /// Completed-cycle cap for this run, warmup included.
    pub max_cycles: usize,
    /// Stop at the first detected periodic pair instead of running the cap.
    pub stop_when_periodic: bool,
}

/// Everything a finished (or aborted) run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Completed cycles in order; index 0 is the start-transient warmup and
    /// is excluded from periodicity and feasibility.
    pub cycles: Vec<CycleMetrics>,
    pub trace: Trace,
    /// The last two completed cycles agreed within tolerance.
    pub periodic: bool,
    /// First constraint violation after the warmup cycle, if any.
    pub violation: Option<Violation>,
    pub feasible: bool,
}

impl RunOutcome {
    /// Cycles after the warmup transient.
    pub fn settled(&self) -> &[CycleMetrics] {
        self.cycles.get(1..).unwrap_or(&[])
    }

    pub fn final_metrics(&self) -> Option<&CycleMetrics> {
        self.settled().last()
    }
}

/// Straight pre-tensionless tether along the line of sight, kite entering
/// the power zone with crosswind speed, drum matching the initial reel-out
/// reference. The first simulated cycle absorbs the resulting transient.
pub fn initial_state(cfg: &RunConfig, v_w: f64, v_trac0: f64) -> SystemState {
    let radius = cfg.supervisor.l_min;
    let elevation = cfg.flight.target_elevation;
    let azimuth = -cfg.flight.switch_azimuth;
    let mut kite = KiteState::from_spherical(elevation, azimuth, radius);
    let (_, east) = tangent_basis(elevation, azimuth);
    let downwind = (v_w * elevation.cos() * azimuth.cos()).max(1.0);
    kite.velocity = east * (0.6 * cfg.plant.kite.lift_to_drag * downwind);

    let n = cfg.plant.tether.node_count;
    let dir = kite.position / radius;
    let mut tether = TetherState {
        node_pos: Vec::with_capacity(n),
        node_vel: Vec::with_capacity(n),
    };
    for l in 1..=n {
        let frac = l as f64 / (n + 1) as f64;
        tether.node_pos.push(dir * (radius * frac));
        tether.node_vel.push(kite.velocity * frac);
    }

    let r_w = cfg.plant.winch.drum_radius;
    SystemState {
        kite,
        tether,
        winch: WinchState {
            angle: radius / r_w,
            speed: v_trac0 / r_w,
        },
        time: 0.0,
    }
}

/// Runs the multi-rate closed loop cycle by cycle.
///
/// Tick order at the winch rate: read sensors; on control ticks step the
/// supervisor (closing a cycle on the Transition2 -> Traction edge), adapt
/// the reel reference on its own subdivision, and update the steering; then
/// compute the motor torque, record the trace sample, check constraints,
/// and integrate the plant to the next tick under held inputs.
pub fn run_cycles(cfg: &RunConfig, req: &RunRequest) -> Result<RunOutcome> {
    if req.winds.is_empty() {
        return Err(Error::config("winds", "need at least one wind speed"));
    }
    for w in req.winds {
        if !(w.is_finite() && *w > 0.0) {
            return Err(Error::config("winds", format!("wind speed {w} invalid")));
        }
    }
    let speed_cap = cfg.plant.winch.speed_limits[1];
    if let ReelCommand::Fixed { v_trac, v_retr } = req.command {
        if !(v_trac > 0.0 && v_trac <= speed_cap) {
            return Err(Error::config("v_trac", format!("need 0 < v_trac <= {speed_cap}, got {v_trac}")));
        }
        if !(v_retr < 0.0 && v_retr >= -speed_cap) {
            return Err(Error::config("v_retr", format!("need -{speed_cap} <= v_retr < 0, got {v_retr}")));
        }
    }

    let winch_dt = 1.0 / cfg.sim.winch_rate_hz;
    let control_dt = 1.0 / cfg.sim.control_rate_hz;
    let n_control = exact_ratio(cfg.sim.winch_rate_hz, cfg.sim.control_rate_hz)
        .expect("validated rate ratio");
    let n_reel = exact_ratio(cfg.sim.winch_rate_hz, cfg.sim.reel_rate_hz)
        .expect("validated rate ratio");

    // The stiffness bound tightens as the tether shortens; size the step for
    // a margin below the shortest commanded length and snap it to divide the
    // winch tick exactly.
    let shortest = 0.9 * cfg.supervisor.l_min;
    let bound = stability_dt(shortest, &cfg.plant.tether)?;
    let substeps = (winch_dt / bound).ceil() as usize;
    let dt = winch_dt / substeps as f64;

    let mut plant = cfg.plant.clone();
    plant.env.wind_speed = req.winds[0];

    let mut sup = SupervisorState::new(0.0);
    let mut nav = FlightState::default();
    let mut servo = WinchLoopState::default();
    let mut reel = ReelRefState::new(&cfg.reel);
    let v_trac0 = match req.command {
        ReelCommand::Fixed { v_trac, .. } => v_trac,
        ReelCommand::Online { .. } => reel.v_trac_ref,
    };
    let mut state = initial_state(cfg, plant.env.wind_speed, v_trac0);
    let mut stepper = Stepper::new(cfg.plant.tether.node_count);

    let mut out = RunOutcome {
        cycles: Vec::new(),
        trace: Trace::default(),
        periodic: false,
        violation: None,
        feasible: false,
    };
    let mut steering = 0.0;
    let mut v_ref = v_trac0;
    let mut f_star = 0.0;
    let mut phase = sup.phase;
    let mut cycle_start_idx = 0usize;
    let mut cycle_start_time = 0.0;
    let mut cycle_violation: Option<Violation> = None;
    let mut tick: u64 = 0;

    'run: loop {
        let time = state.time;
        let reel_speed = state.reel_speed(&plant.winch);
        let f_sensor = ground_axial_force(&state, &plant)?.max(0.0);
        let control_tick = tick % n_control == 0;
        let mut boundary = false;

        if control_tick {
            let telemetry = Telemetry {
                time,
                tether_length: state.tether_length(&plant.winch),
                tether_force: f_sensor,
                elevation: state.kite.elevation(),
                azimuth: state.kite.azimuth(),
                tangential_speed: state.kite.tangential_speed(),
            };
            let prev = phase;
            phase = supervisor_step(&mut sup, &telemetry, &cfg.supervisor);
            boundary = prev == Phase::Transition2 && phase == Phase::Traction;

            if tick % n_reel == 0 {
                if let ReelCommand::Online { manifold } = req.command {
                    let f_meas = servo.force_filt.max(0.0);
                    online_reel_reference(&mut reel, phase, f_meas, reel_speed.abs(), manifold, &cfg.reel);
                }
            }
            let (v_trac_cmd, v_retr_cmd) = match req.command {
                ReelCommand::Fixed { v_trac, v_retr } => (v_trac, v_retr),
                ReelCommand::Online { .. } => (reel.v_trac_ref, reel.v_retr_ref),
            };
            f_star = match req.command {
                ReelCommand::Fixed { .. } => 0.0,
                ReelCommand::Online { manifold } => manifold
                    .force_target(phase, reel_speed.abs())
                    .unwrap_or(0.0),
            };
            // plant protection around the phase plan: traction pays out
            // faster past the relief threshold, transitions pay out instead
            // of holding length while the load is still above the release
            // point, and retraction never winches in a loaded kite.
            // Once the line is fully out, traction holds length while it
            // waits for a low-force pass, so reel-out ends at the same
            // length every cycle and the cycle settles into a fixed orbit.
            v_ref = match phase {
                Phase::Traction if f_sensor > cfg.supervisor.relief_force => {
                    v_trac_cmd.max(cfg.supervisor.relief_speed)
                }
                Phase::Traction if telemetry.tether_length >= cfg.supervisor.l_max => 0.0,
                Phase::Traction => v_trac_cmd,
                Phase::Retraction if f_sensor > cfg.supervisor.release_force => 0.0,
                Phase::Retraction => v_retr_cmd,
                Phase::Transition1 | Phase::Transition2 => {
                    if f_sensor > cfg.supervisor.release_force {
                        v_trac_cmd
                    } else {
                        0.0
                    }
                }
            };
            steering = flight_command(&state.kite, phase, &cfg.flight, &mut nav, control_dt);
        }

        let torque = winch_torque(
            v_ref,
            reel_speed,
            f_sensor,
            plant.winch.drum_radius,
            winch_dt,
            &cfg.winch_loop,
            &mut servo,
        );

        if control_tick {
            out.trace.push(TraceSample {
                time,
                kite_pos: state.kite.position,
                tether_force: f_sensor,
                reel_speed,
                winch_power: reel_speed * f_sensor,
                phase,
                v_ref,
                f_star,
                drum_torque: torque,
            });

            if boundary {
                let end = out.trace.len() - 1;
                let slice = &out.trace.samples[cycle_start_idx..=end];
                let mut m = cycle_metrics(slice, out.cycles.len())?;
                m.feasible = cycle_violation.is_none();
                out.cycles.push(m);
                let completed = out.cycles.len();

                if completed == 1 {
                    // warmup ends: drop its transient bookkeeping
                    sup.timed_out = false;
                } else {
                    out.periodic =
                        detect_periodicity(&out.cycles[1..], cfg.sim.periodicity_rel_tol);
                    if out.periodic && req.stop_when_periodic {
                        break 'run;
                    }
                }
                if completed >= req.max_cycles {
                    break 'run;
                }

                plant.env.wind_speed = req.winds[completed.min(req.winds.len() - 1)];
                if cfg.reel.seed_from_manifold {
                    if let ReelCommand::Online { manifold } = req.command {
                        reel.reseed(m.f_trac_avg, m.f_retr_avg, manifold, &cfg.reel);
                    }
                }
                cycle_start_idx = end;
                cycle_start_time = time;
                cycle_violation = None;
            }

            if cycle_violation.is_none() {
                let sample = out.trace.samples.last().expect("just pushed");
                cycle_violation = if sup.timed_out {
                    Some(Violation {
                        constraint: "transition_timeout",
                        time,
                        value: 0.0,
                    })
                } else {
                    sample_violation(sample, &cfg.constraints)
                };
            }
            if let Some(v) = cycle_violation {
                // the warmup transient is exempt from operating limits
                if !out.cycles.is_empty() {
                    out.violation = Some(v);
                    break 'run;
                }
            }
            // progress guarantee: a cycle that cannot finish inside the
            // duration cap aborts the run, warmup included
            if time - cycle_start_time > cfg.constraints.max_cycle_duration {
                out.violation = Some(Violation {
                    constraint: "max_duration",
                    time,
                    value: time - cycle_start_time,
                });
                break 'run;
            }
        }

        for _ in 0..substeps {
            stepper.step(
                &mut state,
                &Inputs {
                    steering,
                    drum_torque: torque,
                },
                &plant,
                dt,
            )?;
        }
        tick += 1;
    }

    out.feasible = out.periodic && out.violation.is_none() && out.cycles.len() >= 2;
    Ok(out)
}

/// Runs one fixed reel-speed pair at one wind speed to periodicity; the
/// design sweep's unit of work.
pub fn evaluate_pair(cfg: &RunConfig, v_w: f64, v_trac: f64, v_retr: f64) -> Result<RunOutcome> {
    run_cycles(
        cfg,
        &RunRequest {
            command: ReelCommand::Fixed { v_trac, v_retr },
            winds: &[v_w],
            max_cycles: cfg.sim.max_cycles,
            stop_when_periodic: true,
        },
    )
}
