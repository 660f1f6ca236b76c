use thiserror::Error;

/// Everything that can go wrong when building or analysing a chain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("state {state} is absorbing but only the exit state may be")]
    ExtraAbsorbing { state: usize },
    #[error("state {state} does not lie on any path from the entrance to the exit")]
    Unreachable { state: usize },
    #[error("first-passage support {support:?} does not have span 1")]
    SpanViolation { support: Vec<usize> },
    #[error("first-passage horizon exceeded the cap of {cap} steps")]
    HorizonExceeded { cap: usize },
    #[error("first-passage variance {variance} is not positive")]
    DegenerateVariance { variance: f64 },
    #[error("indicator vector has no beads; the necklace would be periodic")]
    NoBeads,
    #[error("unknown indicator pattern `{0}`")]
    UnknownPattern(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("theta parameter c must be positive, got {0}")]
    NonpositiveC(f64),
    #[error("start state {0} is neither s0 nor in the bead at position n-1")]
    InvalidStart(String),
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("distribution is not stationary for the operator (residual {residual})")]
    NotStationary { residual: f64 },
    #[error("state {state} has zero stationary mass")]
    ZeroMassState { state: usize },
    #[error("operator violates detailed balance on edge ({x}, {y})")]
    NotReversible { x: usize, y: usize },
    #[error("comparison chain has no edge ({x}, {y}) where the target chain does")]
    SupportViolation { x: usize, y: usize },
    #[error("edge graph is disconnected")]
    Disconnected,
    #[error("path for pair ({from}, {to}) is not a walk in the edge set")]
    InvalidPath { from: usize, to: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
