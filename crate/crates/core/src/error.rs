use alloc::string::String;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("parameter `{name}` = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("eigensolver did not converge for a block of dimension {dim}")]
    NoConvergence { dim: usize },

    #[error("operands have incompatible sector structure: {0}")]
    SectorMismatch(String),

    #[error("averaging grid step {step} exceeds the limit {limit}")]
    GridTooCoarse { step: f64, limit: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("curve has fewer than two local extrema of each kind")]
    InsufficientOscillation,

    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
