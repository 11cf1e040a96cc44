use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// PI reel-speed loop with tether-force feedforward.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WinchLoopGains {
    /// Proportional gain [N per m/s of speed error].
    pub kp: f64,
    /// Integral gain [N per m of accumulated error].
    pub ki: f64,
    /// Integrator clamp [N]; bounds the integral contribution.
    pub anti_windup: f64,
    /// Drum-side torque saturation [N*m].
    pub torque_limit: f64,
    /// Time constant of the first-order filter on the measured tether
    /// force [s]. Filters out elastic ringing before it feeds forward.
    pub force_filter_tau: f64,
}

impl Default for WinchLoopGains {
    fn default() -> Self {
        WinchLoopGains {
            kp: 240.0,
            ki: 600.0,
            anti_windup: 28_000.0,
            torque_limit: 32_344.0,
            force_filter_tau: 0.05,
        }
    }
}

impl WinchLoopGains {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("kp", self.kp),
            ("ki", self.ki),
            ("anti_windup", self.anti_windup),
            ("torque_limit", self.torque_limit),
            ("force_filter_tau", self.force_filter_tau),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    format!("{prefix}.{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// Integrator and filter memory of the speed loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct WinchLoopState {
    /// Accumulated speed error [m].
    pub integral: f64,
    /// Low-pass filtered tether force [N].
    pub force_filt: f64,
}

/// One speed-loop tick. Returns the motor torque expressed on the drum side
/// [N*m]. The feedforward term cancels the load torque `r_w * F` so the PI
/// part only has to shape the speed response.
pub fn winch_torque(
    v_ref: f64,
    v_meas: f64,
    f_meas: f64,
    drum_radius: f64,
    dt: f64,
    gains: &WinchLoopGains,
    state: &mut WinchLoopState,
) -> f64 {
    let alpha = dt / (gains.force_filter_tau + dt);
    state.force_filt += alpha * (f_meas - state.force_filt);

    let error = v_ref - v_meas;
    state.integral = (state.integral + error * dt)
        .clamp(-gains.anti_windup / gains.ki, gains.anti_windup / gains.ki);

    let force_cmd = gains.kp * error + gains.ki * state.integral - state.force_filt;
    (drum_radius * force_cmd).clamp(-gains.torque_limit, gains.torque_limit)
}
