use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("qubit index {index} out of range for {qubits} qubits")]
    IndexOutOfRange { index: usize, qubits: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("size {requested} exceeds the cap of {cap} ({what})")]
    Sizing {
        what: &'static str,
        requested: usize,
        cap: usize,
    },
    #[error("confidence {0} is unreachable with per-run probability 0")]
    UnreachableConfidence(f64),
    #[error("search budget of {0} nodes exceeded; rerun with a heuristic mode")]
    CapExceeded(u64),
    #[error("rank deficiency: singular value {0:e} is below 1e-300 and has no logarithm")]
    RankDeficiency(f64),
    #[error("rank mismatch: operator has rank {rank} but the site set has {sites} sites")]
    RankMismatch { rank: usize, sites: usize },
    #[error("site set contains a discrete Sternfeld array")]
    NotWdsa,
    #[error("witness accepted with probability {acceptance}, below the required 1 - {epsilon}")]
    PremiseViolation { acceptance: f64, epsilon: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}
