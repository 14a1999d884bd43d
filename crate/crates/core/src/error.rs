use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {0} lies outside [0, 1]")]
    Domain(f64),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("branch budget exceeded: {branches} branches > budget {budget}")]
    BudgetExceeded { branches: f64, budget: u64 },

    #[error("system has no periodic order")]
    NotPeriodic,

    #[error("iterate index {m} exceeds table size {m_max}")]
    OutOfRange { m: usize, m_max: usize },

    #[error("sequence of length {len} is shorter than the required {needed}")]
    InsufficientLength { len: usize, needed: usize },

    #[error("g({at}) = {value}, but the forcing term must vanish at 0 and 1")]
    BoundaryViolation { at: f64, value: f64 },

    #[error("the family of partial sums g_k is unbounded (growth slope {slope} at x = {x})")]
    NotSolvableGUnbounded { x: f64, slope: f64 },

    #[error("no uniform convergence of the Neumann series detected within {l_max} terms")]
    NoUniformConvergence { l_max: usize },

    #[error("weights are not uniform")]
    NotUniformWeights,

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("{unresolved} of {samples} trajectories did not absorb")]
    TooManyUnresolved { unresolved: usize, samples: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
