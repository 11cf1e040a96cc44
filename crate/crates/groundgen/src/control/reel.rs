use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::Phase;
use crate::error::{Error, Result};

/// Coefficients of the optimal-operation force laws F = K * v^2, one per
/// powered phase, with the goodness of fit they were identified at.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ManifoldModel {
    #[serde(rename = "K_trac")]
    pub k_trac: f64,
    #[serde(rename = "K_retr")]
    pub k_retr: f64,
    #[serde(default)]
    pub r2_trac: f64,
    #[serde(default)]
    pub r2_retr: f64,
}

impl ManifoldModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_trac.is_finite() && self.k_trac > 0.0) {
            return Err(Error::config("manifold.K_trac", "must be positive"));
        }
        if !(self.k_retr.is_finite() && self.k_retr > 0.0) {
            return Err(Error::config("manifold.K_retr", "must be positive"));
        }
        Ok(())
    }

    /// Force on the law at reel speed magnitude `v` for a powered phase.
    pub fn force_target(&self, phase: Phase, v: f64) -> Option<f64> {
        match phase {
            Phase::Traction => Some(self.k_trac * v * v),
            Phase::Retraction => Some(self.k_retr * v * v),
            _ => None,
        }
    }

    /// Single-row CSV: `K_trac,K_retr,r2_trac,r2_retr`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.serialize(self)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let model: ManifoldModel = r
            .deserialize()
            .next()
            .ok_or_else(|| Error::config("manifold", "file has no data row"))??;
        model.validate()?;
        Ok(model)
    }
}

/// How the reference reacts to the force mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReelMode {
    /// Fixed increment of `step` per update, sign from the mismatch.
    FixedStep,
    /// Increment `gain * (F_meas - F*)`, clamped to `max_step`.
    Proportional,
}

/// Parameters of the online reel-speed adaptation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReelConfig {
    pub mode: ReelMode,
    /// First-cycle references [m/s]; traction positive, retraction negative.
    pub initial_trac_ref: f64,
    pub initial_retr_ref: f64,
    /// Fixed-step increment [m/s].
    pub step: f64,
    /// Increment clamp in proportional mode [m/s].
    pub max_step: f64,
    /// Proportional gain [(m/s)/N].
    pub gain: f64,
    /// Mismatch dead-band as a fraction of the target force.
    pub dead_band: f64,
    /// Traction reference range [m/s], both positive.
    pub trac_bounds: [f64; 2],
    /// Retraction reference range [m/s], both negative.
    pub retr_bounds: [f64; 2],
    /// Re-seed references from the force law at each cycle start using the
    /// previous cycle's average phase forces.
    pub seed_from_manifold: bool,
}

impl Default for ReelConfig {
    fn default() -> Self {
        ReelConfig {
            mode: ReelMode::FixedStep,
            initial_trac_ref: 1.2,
            initial_retr_ref: -3.5,
            step: 0.05,
            max_step: 0.3,
            gain: 2e-4,
            dead_band: 0.01,
            trac_bounds: [0.3, 4.5],
            retr_bounds: [-5.8, -0.8],
            seed_from_manifold: true,
        }
    }
}

impl ReelConfig {
    pub fn validate(&self, prefix: &str, speed_limit: f64) -> Result<()> {
        for (name, v) in [
            ("step", self.step),
            ("max_step", self.max_step),
            ("gain", self.gain),
            ("dead_band", self.dead_band),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    format!("{prefix}.{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        let [lo, hi] = self.trac_bounds;
        if !(0.0 < lo && lo < hi && hi <= speed_limit) {
            return Err(Error::config(
                format!("{prefix}.trac_bounds"),
                format!("need 0 < lo < hi <= winch speed limit {speed_limit}, got [{lo}, {hi}]"),
            ));
        }
        let [lo, hi] = self.retr_bounds;
        if !(-speed_limit <= lo && lo < hi && hi < 0.0) {
            return Err(Error::config(
                format!("{prefix}.retr_bounds"),
                format!("need -limit <= lo < hi < 0, got [{lo}, {hi}]"),
            ));
        }
        if !(self.trac_bounds[0]..=self.trac_bounds[1]).contains(&self.initial_trac_ref) {
            return Err(Error::config(
                format!("{prefix}.initial_trac_ref"),
                "outside trac_bounds",
            ));
        }
        if !(self.retr_bounds[0]..=self.retr_bounds[1]).contains(&self.initial_retr_ref) {
            return Err(Error::config(
                format!("{prefix}.initial_retr_ref"),
                "outside retr_bounds",
            ));
        }
        Ok(())
    }
}

/// Reel-speed references adapted once per update tick.
#[derive(Debug, Clone, Copy)]
pub struct ReelRefState {
    pub v_trac_ref: f64,
    pub v_retr_ref: f64,
}

impl ReelRefState {
    pub fn new(cfg: &ReelConfig) -> Self {
        ReelRefState {
            v_trac_ref: cfg.initial_trac_ref,
            v_retr_ref: cfg.initial_retr_ref,
        }
    }

    /// Reference applying to the given phase; transitions hold the length.
    pub fn for_phase(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Traction => self.v_trac_ref,
            Phase::Retraction => self.v_retr_ref,
            Phase::Transition1 | Phase::Transition2 => 0.0,
        }
    }

    /// Jump both references onto the force law at the given average phase
    /// forces. Non-positive or non-finite forces leave the reference alone.
    pub fn reseed(&mut self, f_trac: f64, f_retr: f64, manifold: &ManifoldModel, cfg: &ReelConfig) {
        if f_trac.is_finite() && f_trac > 0.0 {
            let v = (f_trac / manifold.k_trac).sqrt();
            self.v_trac_ref = v.clamp(cfg.trac_bounds[0], cfg.trac_bounds[1]);
        }
        if f_retr.is_finite() && f_retr > 0.0 {
            let v = (f_retr / manifold.k_retr).sqrt();
            self.v_retr_ref = (-v).clamp(cfg.retr_bounds[0], cfg.retr_bounds[1]);
        }
    }
}

/// One adaptation tick. Compares the measured (tension, reel speed) pair
/// against the force law of the active powered phase and nudges that phase's
/// reference toward the law; transition phases leave the state untouched.
///
/// Both comparisons act on speed magnitudes: a measured force above the
/// target always asks for more speed magnitude, which during retraction
/// means a more negative reference.
pub fn online_reel_reference(
    state: &mut ReelRefState,
    phase: Phase,
    f_meas: f64,
    v_meas: f64,
    manifold: &ManifoldModel,
    cfg: &ReelConfig,
) {
    let Some(f_star) = manifold.force_target(phase, v_meas) else {
        return;
    };
    let mismatch = f_meas - f_star;
    if mismatch.abs() <= cfg.dead_band * f_star {
        return;
    }
    let step = match cfg.mode {
        ReelMode::FixedStep => cfg.step.copysign(mismatch),
        ReelMode::Proportional => (cfg.gain * mismatch).clamp(-cfg.max_step, cfg.max_step),
    };
    match phase {
        Phase::Traction => {
            state.v_trac_ref =
                (state.v_trac_ref + step).clamp(cfg.trac_bounds[0], cfg.trac_bounds[1]);
        }
        Phase::Retraction => {
            let magnitude = -state.v_retr_ref + step;
            state.v_retr_ref = (-magnitude).clamp(cfg.retr_bounds[0], cfg.retr_bounds[1]);
        }
        Phase::Transition1 | Phase::Transition2 => unreachable!(),
    }
}
