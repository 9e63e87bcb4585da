use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("analytic dimension n = {0} is not supported (need n >= 5)")]
    InvalidDimension(i64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("coercivity witness fails: min symbol + min potential + shift = {witness:.6e} <= 0 (operator possibly indefinite)")]
    NotCoercive { witness: f64 },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("operator is indefinite along a search direction (curvature {curvature:.3e})")]
    Indefinite { curvature: f64 },

    #[error("positivity violation in {what}: minimum {min:.6e}")]
    PositivityViolation { what: String, min: f64 },

    #[error("no sub/supersolution bracket: {0}")]
    NoBracket(String),

    #[error("monotonicity violated at iteration {iteration}: worst decrease {worst:.3e}")]
    MonotonicityViolation { iteration: usize, worst: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("condition not satisfied: lhs {lhs:.6e} >= threshold {threshold:.6e}")]
    ConditionNotSatisfied { lhs: f64, threshold: f64 },

    #[error("no conclusion: {0}")]
    NoConclusion(String),

    #[error("lower bound collapse: min u = {min:.3e} ({detail})")]
    LowerBoundCollapse { min: f64, detail: String },

    #[error("no mountain-pass geometry: {0}")]
    NoMountainPass(String),

    #[error("comparison principle violated: {0}")]
    OrderingViolation(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid_dimension",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridMismatch => "grid_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::NotCoercive { .. } => "not_coercive",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Indefinite { .. } => "indefinite",
            Error::PositivityViolation { .. } => "positivity_violation",
            Error::NoBracket(_) => "no_bracket",
            Error::MonotonicityViolation { .. } => "monotonicity_violation",
            Error::InvalidProblem(_) => "invalid_problem",
            Error::ConditionNotSatisfied { .. } => "condition_not_satisfied",
            Error::NoConclusion(_) => "no_conclusion",
            Error::LowerBoundCollapse { .. } => "lower_bound_collapse",
            Error::NoMountainPass(_) => "no_mountain_pass",
            Error::OrderingViolation(_) => "ordering_violation",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
