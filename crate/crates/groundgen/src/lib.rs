//! Ground-generation airborne wind energy simulator.
//!
//! Models a kite on an elastic tether driving a winch through pumping cycles
//! (reel-out under high force, reel-in under low force), simulates the closed
//! control loop that flies figure-eights and parks the kite, and optimizes the
//! reeling speeds two ways: offline, by sweeping fixed speed pairs and fitting
//! a response surface per wind speed, and online, by steering tether force
//! toward a quadratic force-speed manifold without knowing the wind speed.
//!
//! Layering, bottom up:
//! - [`physics`]: lumped-mass tether, point-mass kite, winch, RK4 stepper.
//! - [`control`]: flight/winch/reeling controllers and the phase supervisor.
//! - [`cycle`]: the multi-rate simulation engine, per-cycle metrics,
//!   feasibility checks.
//! - [`pipeline`]: speed-pair sweep, surrogate fit, certified optima, manifold
//!   identification.
//! - [`compare`]: strategy benchmark against fixed-speed alternatives.

pub mod compare;
pub mod config;
pub mod control;
pub mod cycle;
pub mod error;
pub mod physics;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{Error, Result};
