use thiserror::Error;

/// Errors surfaced by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("batch size must be an even integer >= 2, got {0}")]
    InvalidBatchSize(usize),

    #[error("protocol needs at least one round")]
    NoRounds,

    #[error("{rounds} rounds need distinct permutations but only {available} exist for batch size {batch_size}")]
    TooManyRounds {
        rounds: usize,
        batch_size: usize,
        available: String,
    },

    #[error("permutation history is exhausted for batch size {0}")]
    PermutationsExhausted(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("mapping is not a bijection on [0, {0})")]
    NotABijection(usize),

    #[error("cannot sift a key after the security check aborted")]
    SiftAfterAbort,

    #[error("protocol message {message} is not allowed in phase {phase}")]
    PhaseViolation {
        message: &'static str,
        phase: String,
    },

    #[error("delay bank needs more delays than ports: {delays} delays for {ports} ports")]
    DelayBankTooSmall { delays: usize, ports: usize },

    #[error("register count {m} exceeds the enumeration cap {cap}")]
    TooManyRegisters { m: usize, cap: usize },

    #[error("probe state has dimension {actual}, expected {expected}")]
    ProbeDimension { expected: usize, actual: usize },

    #[error("probe state is not normalized (squared norm {0})")]
    ProbeNotNormalized(f64),

    #[error("an honest Charlie cannot be used for a detection estimate")]
    HonestStrategy,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
