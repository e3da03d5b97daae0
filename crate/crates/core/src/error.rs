use thiserror::Error;

use crate::machine::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("horizon must be at least one slot")]
    ZeroHorizon,

    #[error("strategy machine `{name}` is invalid: {}", summarize(.diagnostics))]
    InvalidMachine {
        name: String,
        diagnostics: Vec<Diagnostic>,
    },

    #[error("invalid tournament config: {0}")]
    InvalidConfig(String),

    #[error("transmit probability must lie strictly inside (0, 1), got {0}")]
    DegenerateProbability(f64),

    #[error("{what} must be at least {min}, got {got}")]
    OutOfRange {
        what: &'static str,
        min: u64,
        got: u64,
    },

    #[error("expected {expected} random streams, got {got}")]
    StreamCount { expected: usize, got: usize },

    #[error("capture table only covers n <= {n_max}, requested n = {n}")]
    TableTooSmall { n: usize, n_max: usize },

    #[error("unsupported multichannel configuration: {0}")]
    Unsupported(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

fn summarize(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .filter(|d| d.is_error())
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
