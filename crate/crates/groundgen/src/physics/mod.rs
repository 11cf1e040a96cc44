pub mod integrator;
pub mod kite;
pub mod params;
pub mod state;
pub mod tether;
pub mod winch;
pub mod wind;

/// 3-vector in the ground frame: origin at the drum exit, z up, x along the
/// nominal wind direction. Units are meters or meters/second by context.
pub type Vec3 = nalgebra::Vector3<f64>;

pub use integrator::{stability_dt, step, Inputs, Stepper};
pub use params::{EnvParams, KiteParams, PlantParams, TetherParams, WinchParams};
pub use state::{KiteState, SystemState, TetherState, WinchState};
pub use tether::{
    ground_axial_force, node_aero_force, segment_damping_force, segment_elastic_force,
    tether_accelerations, tether_discretization, Discretization,
};
pub use winch::winch_derivatives;
pub use wind::wind_at;
