use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("profile index {index} out of range (profile space has {size} profiles)")]
    UnknownProfile { index: usize, size: usize },

    #[error("{what} has {size} elements, exceeding the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("weights must be non-negative and sum to 1 (got sum {sum}); normalize them, e.g. divide each weight by the sum")]
    WeightNormalization { sum: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("chain is reducible: {0}")]
    Reducible(String),

    #[error("no spanning arborescence rooted at state {root}: {unreached} states cannot reach it")]
    NoArborescence { root: usize, unreached: usize },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
