use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("unknown edge id {0}")]
    UnknownEdge(usize),

    #[error("edge {0} is already in the set")]
    EdgeAlreadyPresent(usize),

    #[error("exact enumeration supports at most {limit} edges, got {got}")]
    TooManyEdges { got: usize, limit: usize },

    #[error("search space of {size:.3e} states exceeds the limit of {limit:.0e}")]
    SearchSpaceTooLarge { size: f64, limit: f64 },

    #[error("objective does not match instance: {0}")]
    ObjectiveMismatch(String),

    #[error("fractional solution is infeasible: {0}")]
    InfeasibleSolution(String),

    #[error("arrival rates are not integral: {0}")]
    NonIntegralRates(String),

    #[error("benchmark unavailable: {0}")]
    BenchmarkUnavailable(String),

    #[error("invalid decision by online algorithm: {0}")]
    InvalidDecision(String),

    #[error("linear program: {0}")]
    Lp(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
