use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("node index {index} out of range for {num_nodes} nodes")]
    IndexOutOfRange { index: usize, num_nodes: usize },
    #[error("self-loop on node {0} in input edge list")]
    SelfLoopInInput(usize),
    #[error("invalid edge weight {0}")]
    InvalidWeight(f64),
    #[error("unsupported scheme {0}")]
    UnsupportedScheme(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry in feature matrix at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("polynomial order {order} exceeds the configured maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("solver did not reach relative residual {tolerance:e} within {iterations} iterations (last {residual:e})")]
    SolverDiverged {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },
    #[error("denominator polynomial is singular on this graph")]
    SingularDenominator,
    #[error("solver method unsupported: {0}")]
    MethodUnsupported(String),
    #[error("filters act on different bases ({0} vs {1})")]
    BasisMismatch(String, String),
    #[error("composition unsupported for {0} filters")]
    UnsupportedFamily(String),

    #[error("operator is not symmetric")]
    NotSymmetric,
    #[error("{size} nodes exceeds the dense limit {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("Jacobi sweeps did not converge (off-diagonal norm {0:e})")]
    EigenNotConverged(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid target signal: {0}")]
    InvalidTarget(String),
    #[error("least-squares system is ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),
    #[error("denominator has a root inside [{lo}, {hi}]")]
    PoleInDomain { lo: f64, hi: f64 },

    #[error("node {0} is isolated")]
    IsolatedNode(usize),
    #[error("walk budget exceeded: {requested} walks > {budget}")]
    BudgetExceeded { requested: usize, budget: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}, column {column}: {reason}")]
    ParseError {
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("ragged rows: line {line} has {found} values, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier printed by the CLI as `error=<code>`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DuplicateEdge(..) => "DuplicateEdge",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::SelfLoopInInput(_) => "SelfLoopInInput",
            Error::InvalidWeight(_) => "InvalidWeight",
            Error::UnsupportedScheme(_) => "UnsupportedScheme",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFinite { .. } => "NonFinite",
            Error::UnknownModel(_) => "UnknownModel",
            Error::InvalidParam(_) => "InvalidParam",
            Error::OrderTooLarge { .. } => "OrderTooLarge",
            Error::SolverDiverged { .. } => "SolverDiverged",
            Error::SingularDenominator => "SingularDenominator",
            Error::MethodUnsupported(_) => "MethodUnsupported",
            Error::BasisMismatch(..) => "BasisMismatch",
            Error::UnsupportedFamily(_) => "UnsupportedFamily",
            Error::NotSymmetric => "NotSymmetric",
            Error::TooLarge { .. } => "TooLarge",
            Error::EigenNotConverged(_) => "EigenNotConverged",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidTarget(_) => "InvalidTarget",
            Error::IllConditioned(_) => "IllConditioned",
            Error::PoleInDomain { .. } => "PoleInDomain",
            Error::IsolatedNode(_) => "IsolatedNode",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::ParseError { .. } => "ParseError",
            Error::RaggedRows { .. } => "RaggedRows",
            Error::Io(_) => "Io",
        }
    }

    /// Process exit code: 2 for input/usage problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SolverDiverged { .. }
            | Error::SingularDenominator
            | Error::EigenNotConverged(_)
            | Error::IllConditioned(_)
            | Error::PoleInDomain { .. } => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
