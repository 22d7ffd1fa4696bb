use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Two dislocations sit on top of each other (cotangent pole).
    #[error("coincident dislocations: separation {gap:e} below guard {guard:e}")]
    Coincident { gap: f64, guard: f64 },

    /// An explicit Euler step swapped two neighbours; the time step is too large.
    #[error("dislocation ordering violated at step {step} (t = {time}); reduce dt")]
    OrderingViolated { step: u64, time: f64 },

    /// A strain field whose discrete density is negative somewhere.
    #[error("inadmissible strain field: density {density:e} at node {node}")]
    NegativeDensity { node: usize, density: f64 },

    /// A field that should be monotone is not.
    #[error("non-monotone field at node {node}")]
    NonMonotone { node: usize },

    /// A monotone-scheme or CFL bound cannot be honoured.
    #[error("stability bound violated at step {step}: {reason}")]
    Stability { step: u64, reason: String },

    /// One cell of a flow-rule sweep failed.
    #[error("flow-rule cell (N = {n}, tau = {tau}) failed: {source}")]
    Cell {
        n: usize,
        tau: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Coincident { .. } | Error::OrderingViolated { .. } | Error::Stability { .. } => {
                true
            }
            Error::Cell { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
