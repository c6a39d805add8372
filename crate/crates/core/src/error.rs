use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("level {level} out of range (chain depth {depth})")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("element {elem} is not a label at level {level}")]
    NotALabel { elem: u32, level: usize },

    #[error("generator index {0} out of range")]
    UnknownGenerator(usize),

    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("period {period} is not compatible with the stage tower (last period {last})")]
    UnsupportedPeriod { period: u64, last: u64 },

    #[error("insufficient depth: {0}")]
    DepthInsufficient(String),

    #[error("invalid block code: {0}")]
    InvalidCode(String),

    #[error("invalid block permutation: {0}")]
    InvalidPermutation(String),

    #[error("block map conflict: {0}")]
    Conflict(String),

    #[error("no witness possible: {0}")]
    NoWitnessPossible(String),

    #[error("period {0} too large for exhaustive Sym(2^p) enumeration (max 3)")]
    PeriodTooLarge(usize),

    #[error("degenerate family: {0}")]
    DegenerateFamily(String),

    #[error("ambiguous alignment at level {level}: candidates {candidates:?}")]
    AmbiguousAlignment { level: usize, candidates: Vec<u64> },

    #[error("no alignment at level {0}: words are not in the same subshift")]
    NoAlignment(usize),

    #[error("operation requires a word over the integers: {0}")]
    NotIntegerWord(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
