use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row ({x1},{x2}) sums to {sum}, expected 1")]
    NonStochasticRow { x1: usize, x2: usize, sum: f64 },
    #[error("negative entry {value} at ({x1},{x2},{y})")]
    NegativeEntry { x1: usize, x2: usize, y: usize, value: f64 },
    #[error("tensor shape does not match declared sizes: {0}")]
    Shape(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("alphabet mismatch: expected {expected} symbols, got {got}")]
    AlphabetMismatch { expected: usize, got: usize },
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),
    #[error("noise parameter {p} outside [0, 1/{m}]")]
    InvalidNoise { m: usize, p: f64 },
    #[error("iteration did not converge within {0} steps")]
    NonConvergence(usize),
    #[error("invalid stopping time: {0}")]
    InvalidStoppingTime(String),
    #[error("inconsistent tree labels: {0}")]
    InconsistentLabels(String),
    #[error("degenerate test: the two hypotheses induce the same law")]
    DegenerateTest,
    #[error("llr support exceeds {0} lattice points")]
    SupportOverflow(usize),
    #[error("need at least 3 points with positive beta, got {0}")]
    InsufficientData(usize),
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("channel must have strictly positive transition probabilities")]
    NotStrictlyPositive,
    #[error("no qualifying nodes for the requested threshold")]
    NoQualifyingNodes,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("process is not a supermartingale: {0}")]
    NotSupermartingale(String),
    #[error("infeasible configuration: {0}")]
    ConfigInfeasible(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
