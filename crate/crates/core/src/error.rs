use thiserror::Error;

/// Errors raised across the library.
///
/// Solver outcomes such as an infeasible or unbounded linear program are not
/// errors at the `lp` level (they are statuses); they become errors once a
/// caller needs an optimal point, e.g. when evaluating the OPF operator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph not connected")]
    NotConnected,

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("OPF infeasible")]
    OpfInfeasible,

    #[error("OPF unbounded (check generator and branch limits)")]
    OpfUnbounded,

    #[error("LP solver stopped after {0} pivots without converging")]
    IterationLimit(usize),

    #[error("solution is not optimal")]
    NotOptimal,

    #[error("nonsmooth point: binding set changes when perturbing load {load_index}")]
    NonsmoothPoint { load_index: usize },

    #[error("no feasible perturbation in the sweep")]
    NoFeasiblePerturbation,

    #[error("no usable sample point: {0}")]
    NoUsableSample(String),

    #[error("invalid mechanism configuration: {0}")]
    InvalidMechanism(String),

    #[error("loads are not neighbors: {0}")]
    NotNeighbors(String),

    #[error("case file: {0}")]
    Case(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for errors that mean "no feasible operating point", which the CLI
    /// reports with its own exit code.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::OpfInfeasible | Error::NoFeasiblePerturbation | Error::NoUsableSample(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
