use thiserror::Error;

/// Broad class of a failure, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("lineage deficit: coalescence at time {time} has only {lineages} extant lineage(s)")]
    LineageDeficit { time: f64, lineages: usize },
    #[error("times are not strictly ascending: {0}")]
    NonAscendingTimes(String),
    #[error("sample count mismatch: {samples} sequences but {coalescences} coalescent times")]
    CountMismatch { samples: usize, coalescences: usize },
    #[error("invalid genealogy: {0}")]
    InvalidGenealogy(String),

    #[error("newick parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("negative branch length {0}")]
    NegativeBranch(f64),
    #[error("internal node with {0} children; only binary trees are supported")]
    Polytomy(usize),
    #[error("genealogy file: {0}")]
    Format(String),

    #[error("grid span must be positive, got t1 = {0}")]
    DegenerateSpan(f64),
    #[error("grid needs at least 3 points, got {0}")]
    GridTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("breakpoints do not cover (0, {t1}]")]
    Coverage { t1: f64 },
    #[error("index points must be strictly ascending")]
    NonAscending,

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite energy")]
    NonFiniteEnergy,
    #[error("cholesky factorization failed at row {0}")]
    CholeskyFailure(usize),
    #[error("slice sampler bracket collapsed")]
    SliceStall,
    #[error("chain aborted after {0} consecutive non-finite trajectories")]
    Diverged(usize),
    #[error("coalescent hazard did not reach its target within the integration limit")]
    NonterminatingCoalescent,

    #[error("series is constant")]
    DegenerateSeries,
    #[error("trace too short: {got} post-burn-in rows, need {need}")]
    TraceTooShort { got: usize, need: usize },
    #[error("trace file: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            NonFiniteEnergy | CholeskyFailure(_) | SliceStall | Diverged(_)
            | NonterminatingCoalescent | DegenerateSeries => ErrorClass::Numerical,
            Io(_) => ErrorClass::Io,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
