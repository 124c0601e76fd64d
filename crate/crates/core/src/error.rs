use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("case structure: {0}")]
    Structure(String),
    #[error("case data: {0}")]
    Data(String),
    #[error("network splits into {islands} islands{detail}")]
    Island { islands: usize, detail: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("singular matrix (pivot {pivot} of {size})")]
    Singular { pivot: usize, size: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
    #[error("numerical breakdown: {0}")]
    Breakdown(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispatchError {
    #[error("demand {demand_mw:.3} MW exceeds online capacity {capacity_mw:.3} MW")]
    InsufficientCapacity { demand_mw: f64, capacity_mw: f64 },
    #[error("dispatch infeasible; binding constraints: {}", binding.join(", "))]
    Infeasible { binding: Vec<String> },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("measurement set is not observable (gain matrix rank deficient)")]
    Unobservable,
    #[error("measurement input: {0}")]
    Input(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("invalid attack spec: {0}")]
    Spec(String),
    #[error("attack LP ended with status {0}")]
    Status(String),
    #[error("measurement set does not match the attacked network: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("no branch has at least {0} critical load buses; SMLDI undefined")]
    NoEligibleBranch(usize),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// Everything the harness and the CLI can surface.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("scenario {id}: {source}")]
    Scenario {
        id: String,
        #[source]
        source: Box<Error>,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
