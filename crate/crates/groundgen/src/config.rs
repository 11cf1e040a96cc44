use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{FlightConfig, ReelConfig, SupervisorConfig, WinchLoopGains};
use crate::cycle::{ConstraintSet, SimConfig};
use crate::error::{Error, Result};
use crate::physics::PlantParams;
use crate::pipeline::SweepConfig;

/// Online-run length and wind schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    /// Completed cycles per online run, warmup included.
    pub cycles: usize,
    /// Wind speed per cycle; the last entry holds for remaining cycles.
    pub winds: Vec<f64>,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            cycles: 12,
            winds: vec![9.0],
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.cycles < 2 {
            return Err(Error::config(
                format!("{prefix}.cycles"),
                "need at least a warmup cycle plus one measured cycle",
            ));
        }
        if self.winds.is_empty() {
            return Err(Error::config(format!("{prefix}.winds"), "must be non-empty"));
        }
        for w in &self.winds {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::config(
                    format!("{prefix}.winds"),
                    format!("wind speed {w} invalid"),
                ));
            }
        }
        Ok(())
    }
}

/// Strategy-benchmark knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Reel-in speed of the fast-recovery comparator [m/s], negative.
    pub fast_recovery_vretr: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            fast_recovery_vretr: -5.5,
        }
    }
}

impl CompareConfig {
    pub fn validate(&self, prefix: &str, speed_limit: f64) -> Result<()> {
        let v = self.fast_recovery_vretr;
        if !(v.is_finite() && v < 0.0 && v >= -speed_limit) {
            return Err(Error::config(
                format!("{prefix}.fast_recovery_vretr"),
                format!("need -{speed_limit} <= v < 0, got {v}"),
            ));
        }
        Ok(())
    }
}

/// Every tunable of the simulator, controllers and pipelines, loadable from
/// one sectioned TOML file. Missing sections and keys take the defaults;
/// unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantParams,
    pub supervisor: SupervisorConfig,
    pub flight: FlightConfig,
    pub winch_loop: WinchLoopGains,
    pub reel: ReelConfig,
    pub constraints: ConstraintSet,
    pub sim: SimConfig,
    pub sweep: SweepConfig,
    pub online: OnlineConfig,
    pub compare: CompareConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(
                path.display().to_string(),
                format!("cannot read config file: {e}"),
            )
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&mut self) -> Result<()> {
        self.plant.validate("plant")?;
        self.supervisor.validate("supervisor")?;
        self.flight.validate("flight")?;
        self.winch_loop.validate("winch_loop")?;
        let speed_limit = self.plant.winch.speed_limits[1];
        self.reel.validate("reel", speed_limit)?;
        self.constraints.validate("constraints")?;
        self.sim.validate("sim")?;
        self.sweep.validate("sweep")?;
        self.online.validate("online")?;
        self.compare.validate("compare", speed_limit)?;
        if self.constraints.max_reel_speed > speed_limit {
            return Err(Error::config(
                "constraints.max_reel_speed",
                "exceeds plant.winch.speed_limits",
            ));
        }
        Ok(())
    }
}
