use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::Vec3;

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and > 0, got {v}")))
    }
}

fn check_non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and >= 0, got {v}")))
    }
}

/// Tether line properties plus the lumped-mass discretization granularity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TetherParams {
    /// Line diameter [m].
    pub diameter: f64,
    /// Mass per unit length [kg/m].
    pub linear_density: f64,
    /// Drag coefficient of the line cross-flow [-].
    pub drag_coeff: f64,
    /// Load at which the line reaches `elongation_at_max` [N]; sets stiffness.
    pub max_elastic_load: f64,
    /// Relative elongation at `max_elastic_load` [-].
    pub elongation_at_max: f64,
    /// Axial damping coefficient [N·s/m].
    pub axial_damping: f64,
    /// Number of inner lumped nodes (endpoints are the drum exit and the kite).
    pub node_count: usize,
}

impl Default for TetherParams {
    fn default() -> Self {
        TetherParams {
            diameter: 0.006,
            // 6 mm braided line, material density 975 kg/m^3
            linear_density: std::f64::consts::PI * 0.003 * 0.003 * 975.0,
            drag_coeff: 1.0,
            max_elastic_load: 27e3,
            elongation_at_max: 0.015,
            axial_damping: 150.0,
            node_count: 5,
        }
    }
}

impl TetherParams {
    /// `axial_damping` may be zero (undamped line); everything else must be
    /// strictly positive.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(&format!("{prefix}.diameter"), self.diameter)?;
        check_positive(&format!("{prefix}.linear_density"), self.linear_density)?;
        check_positive(&format!("{prefix}.drag_coeff"), self.drag_coeff)?;
        check_positive(&format!("{prefix}.max_elastic_load"), self.max_elastic_load)?;
        check_positive(&format!("{prefix}.elongation_at_max"), self.elongation_at_max)?;
        check_non_negative(&format!("{prefix}.axial_damping"), self.axial_damping)?;
        if self.node_count < 1 {
            return Err(Error::config(
                format!("{prefix}.node_count"),
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Kite bulk properties for the point-mass closure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KiteParams {
    /// Projected wing area [m^2].
    pub area: f64,
    /// Kite plus airborne-unit mass [kg].
    pub mass: f64,
    /// Wingspan [m].
    pub wingspan: f64,
    /// Lift coefficient [-].
    pub lift_coeff: f64,
    /// Lift-to-drag ratio (aerodynamic efficiency) [-].
    pub lift_to_drag: f64,
}

impl Default for KiteParams {
    fn default() -> Self {
        KiteParams {
            area: 25.0,
            mass: 10.5,
            wingspan: 10.0,
            lift_coeff: 0.95,
            lift_to_drag: 6.0,
        }
    }
}

impl KiteParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(&format!("{prefix}.area"), self.area)?;
        check_positive(&format!("{prefix}.mass"), self.mass)?;
        check_positive(&format!("{prefix}.wingspan"), self.wingspan)?;
        check_positive(&format!("{prefix}.lift_coeff"), self.lift_coeff)?;
        if !(self.lift_to_drag.is_finite() && self.lift_to_drag > 1.0) {
            return Err(Error::config(
                format!("{prefix}.lift_to_drag"),
                format!("must be > 1, got {}", self.lift_to_drag),
            ));
        }
        Ok(())
    }
}

/// Winch drum/motor assembly, all quantities reflected to the drum shaft.
/// The gear ratio enters only when converting the motor torque limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WinchParams {
    /// Drum radius [m].
    pub drum_radius: f64,
    /// Inertia reflected to the drum shaft [kg·m^2].
    pub inertia: f64,
    /// Viscous friction coefficient [N·m·s/rad].
    pub viscous_coeff: f64,
    /// Motor-side torque limit [N·m].
    pub max_torque: f64,
    /// Transmission ratio between motor and drum [-].
    pub gear_ratio: f64,
    /// Tether speed envelope [m/s], reel-in negative, reel-out positive.
    pub speed_limits: [f64; 2],
}

impl Default for WinchParams {
    fn default() -> Self {
        WinchParams {
            drum_radius: 0.3,
            inertia: 1.7,
            viscous_coeff: 0.799,
            max_torque: 1244.0,
            gear_ratio: 26.0,
            speed_limits: [-7.0, 7.0],
        }
    }
}

impl WinchParams {
    /// Torque limit seen at the drum shaft [N·m].
    pub fn drum_torque_limit(&self) -> f64 {
        self.max_torque * self.gear_ratio
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(&format!("{prefix}.drum_radius"), self.drum_radius)?;
        check_positive(&format!("{prefix}.inertia"), self.inertia)?;
        check_positive(&format!("{prefix}.viscous_coeff"), self.viscous_coeff)?;
        check_positive(&format!("{prefix}.max_torque"), self.max_torque)?;
        check_positive(&format!("{prefix}.gear_ratio"), self.gear_ratio)?;
        if !(self.speed_limits[0] < 0.0 && 0.0 < self.speed_limits[1]) {
            return Err(Error::config(
                format!("{prefix}.speed_limits"),
                format!(
                    "must satisfy min < 0 < max, got [{}, {}]",
                    self.speed_limits[0], self.speed_limits[1]
                ),
            ));
        }
        Ok(())
    }
}

/// Ambient conditions and the wind field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    /// Air density [kg/m^3].
    pub air_density: f64,
    /// Gravitational acceleration [m/s^2].
    pub gravity: f64,
    /// Wind speed at the reference height [m/s].
    pub wind_speed: f64,
    /// Power-law shear exponent; 0 gives a uniform field.
    pub shear_exponent: f64,
    /// Reference height for the shear law [m].
    pub wind_ref_height: f64,
    /// Unit wind direction in ground frame.
    pub wind_direction: [f64; 3],
}

impl Default for EnvParams {
    fn default() -> Self {
        EnvParams {
            air_density: 1.2,
            gravity: 9.81,
            wind_speed: 9.0,
            shear_exponent: 0.0,
            wind_ref_height: 100.0,
            wind_direction: [1.0, 0.0, 0.0],
        }
    }
}

impl EnvParams {
    pub fn wind_dir(&self) -> Vec3 {
        Vec3::new(
            self.wind_direction[0],
            self.wind_direction[1],
            self.wind_direction[2],
        )
    }

    /// Normalizes the stored wind direction; call once after loading.
    pub fn validate(&mut self, prefix: &str) -> Result<()> {
        check_positive(&format!("{prefix}.air_density"), self.air_density)?;
        check_positive(&format!("{prefix}.gravity"), self.gravity)?;
        check_non_negative(&format!("{prefix}.wind_speed"), self.wind_speed)?;
        check_non_negative(&format!("{prefix}.shear_exponent"), self.shear_exponent)?;
        check_positive(&format!("{prefix}.wind_ref_height"), self.wind_ref_height)?;
        let n = self.wind_dir().norm();
        if !(n.is_finite() && n > 1e-9) {
            return Err(Error::config(
                format!("{prefix}.wind_direction"),
                "must be a non-zero vector",
            ));
        }
        for c in &mut self.wind_direction {
            *c /= n;
        }
        Ok(())
    }
}

/// The full plant parameter bundle consumed by the dynamics.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    pub tether: TetherParams,
    pub kite: KiteParams,
    pub winch: WinchParams,
    pub env: EnvParams,
}

impl PlantParams {
    pub fn validate(&mut self, prefix: &str) -> Result<()> {
        self.tether.validate(&format!("{prefix}.tether"))?;
        self.kite.validate(&format!("{prefix}.kite"))?;
        self.winch.validate(&format!("{prefix}.winch"))?;
        self.env.validate(&format!("{prefix}.env"))
    }
}
