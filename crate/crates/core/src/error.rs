use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    InvalidArgument(String),
    /// `W` is still increasing at a grid endpoint, so the grid misses the maximum.
    DomainTooSmall { endpoint: f64 },
    /// Inverse iteration made no progress on the residual.
    SolverStagnated { index: usize, iterations: usize },
    /// Doubling the half-length moved an eigenvalue by more than the tolerance.
    TruncationInadequate { index: usize, relative_change: f64 },
    /// The spectral tail bound at time `t` exceeds the tolerance.
    TruncationInsufficient { t: f64, bound: f64 },
    /// The series denominator `Σ a_k m_k e^{−λ_k t}` was not positive.
    NonPositiveDenominator { t: f64, value: f64 },
    /// The truncated basis captures too little of the initial datum.
    InsufficientCapture { fraction: f64 },
    /// The initial datum is numerically the ground state; there is no transient.
    Stationary,
    /// An operation that needs an even fitness was given an asymmetric one.
    Asymmetric,
    /// The automatic grid policy exceeded its node budget.
    GridBudgetExceeded { nodes: usize, max_nodes: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DomainTooSmall { endpoint } => {
                write!(f, "fitness is not decreasing at grid endpoint x = {endpoint}")
            }
            Error::SolverStagnated { index, iterations } => write!(
                f,
                "inverse iteration for eigenpair {index} stagnated after {iterations} iterations"
            ),
            Error::TruncationInadequate { index, relative_change } => write!(
                f,
                "domain truncation inadequate: eigenvalue {index} moved by {relative_change:e} when L was doubled"
            ),
            Error::TruncationInsufficient { t, bound } => write!(
                f,
                "spectral truncation insufficient at t = {t}: tail bound {bound:e}"
            ),
            Error::NonPositiveDenominator { t, value } => {
                write!(f, "series denominator {value:e} is not positive at t = {t}")
            }
            Error::InsufficientCapture { fraction } => write!(
                f,
                "basis captures only {:.4}% of the initial datum's L2 norm",
                100.0 * fraction
            ),
            Error::Stationary => write!(f, "initial datum is already the ground state"),
            Error::Asymmetric => write!(f, "operation requires an even fitness function"),
            Error::GridBudgetExceeded { nodes, max_nodes } => write!(
                f,
                "automatic grid needs {nodes} nodes, budget is {max_nodes}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
