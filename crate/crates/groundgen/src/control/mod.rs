pub mod flight;
pub mod reel;
pub mod supervisor;
pub mod winch_loop;

pub use flight::{course_angle, flight_command, tangent_basis, wrap_angle, FlightConfig, FlightState};
pub use reel::{online_reel_reference, ManifoldModel, ReelConfig, ReelMode, ReelRefState};
pub use supervisor::{supervisor_step, Phase, SupervisorConfig, SupervisorState, Telemetry, Zone};
pub use winch_loop::{winch_torque, WinchLoopGains, WinchLoopState};
