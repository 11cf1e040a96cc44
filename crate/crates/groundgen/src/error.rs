use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {field}: {reason}")]
    Config { field: String, reason: String },

    /// The integrator found a non-finite state component; the simulation
    /// cannot continue past this point.
    #[error("simulation diverged at t = {time:.4} s: {component} is not finite")]
    NonFinite { time: f64, component: String },

    #[error("nominal tether length must be positive, got {length:.4} m at t = {time:.4} s")]
    TetherExhausted { time: f64, length: f64 },

    #[error("response surface fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("degenerate response-surface inputs: {0}")]
    DegenerateSurface(String),

    #[error("kernel system is numerically singular; increase the ridge parameter mu")]
    SingularKernel,

    #[error("no feasible region at v_w = {0} m/s: every grid pair is infeasible")]
    NoFeasibleRegion(f64),

    #[error("empty feasible set: {0}")]
    EmptyFeasibleSet(String),

    #[error("manifold fit needs at least 2 verified points, got {0}")]
    TooFewOptima(usize),

    #[error("phase {0} absent from trace")]
    PhaseAbsent(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse: {0}")]
    Toml(String),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
