use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unbounded search: profile stays below {target} up to s = {cap}")]
    UnboundedSearch { target: f64, cap: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("psi diverges: partial integrals fail the Cauchy test (last increment {increment:e})")]
    PsiDivergent { increment: f64 },

    #[error("pole error: quantity undefined at r = 0")]
    Pole,

    #[error("degenerate weight at node {node}: cell mass underflows")]
    DegenerateWeight { node: usize },

    #[error("eigensolver did not converge for index {index} (best residual {residual:e})")]
    NonConvergence { index: usize, residual: f64 },

    #[error("r_max too small: tail doubling moved the exterior eigenvalue by {relative_change:.3e}")]
    RMaxTooSmall { relative_change: f64 },

    #[error("value {value} is outside the tabulated range (max {max})")]
    OutOfRange { value: f64, max: f64 },

    #[error("insufficient modes: truncation bound {achieved:e} exceeds {required:e}")]
    InsufficientModes { achieved: f64, required: f64 },

    #[error("every node beyond r = 1 is below the ground-state underflow guard")]
    AllNodesGuarded,

    #[error("fit window too small: {usable} usable nodes, need {required}")]
    WindowTooSmall { usable: usize, required: usize },

    #[error("rank-deficient fit: abscissae are constant")]
    RankDeficient,

    #[error("growth condition fails: fitted exponent {exponent:.4} exceeds 1 (+{margin:.2e})")]
    GrowthConditionFails { coefficient: f64, exponent: f64, margin: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
