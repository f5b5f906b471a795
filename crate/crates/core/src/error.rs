use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is singular (|det| = {det:e})")]
    SingularMatrix { det: f64 },

    #[error("singular value iteration did not converge after {sweeps} sweeps (off-diagonal ratio {residual:e})")]
    ConvergenceFailure { sweeps: usize, residual: f64 },

    #[error("invalid flag type: {0}")]
    InvalidFlagType(String),

    #[error("flag type mismatch: {left:?} vs {right:?}")]
    TypeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("{coarser:?} is not a face of {finer:?}")]
    NotAFace { coarser: Vec<usize>, finer: Vec<usize> },

    #[error("degenerate singular value gap at dimension {index}: {detail}")]
    DegenerateGap { index: usize, detail: String },

    #[error("index {index} out of range 0..={len}")]
    OutOfRange { index: usize, len: usize },

    #[error("not enough letters: need {needed}, have {available}")]
    InsufficientLetters { needed: usize, available: usize },

    #[error("word is not reduced: letters {position} and {next} lie in factor {factor}", next = .position + 1)]
    NotReduced { position: usize, factor: usize },

    #[error("invalid ball set: {0}")]
    InvalidBallSet(String),

    #[error("no invariant neighborhood of the {side} fixed flag fits inside the target set")]
    NoInvariantNeighborhood { side: &'static str },

    #[error("sets {first} and {second} are not certified antipodal (margin {margin:.3e} <= required {required:.3e})")]
    AntipodalityUnverified {
        first: usize,
        second: usize,
        margin: f64,
        required: f64,
    },

    #[error("sequence is not alternating: {0}")]
    NotAlternating(String),

    #[error("image diameters did not shrink below {eps:e} within {n_max} steps (last {last:e})")]
    NoConvergence { eps: f64, n_max: usize, last: f64 },

    #[error("nesting broken at step {step}: diameter {current:e} exceeds previous {previous:e}")]
    NestingBroken {
        step: usize,
        previous: f64,
        current: f64,
    },

    #[error("element is not axial: {0}")]
    NotAxial(String),

    #[error("flags are not antipodal: {0}")]
    NotAntipodal(String),

    #[error("search exhausted without a certificate: {0}")]
    SearchExhausted(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
