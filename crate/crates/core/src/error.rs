use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("first-stage vectors have mismatched lengths (x: {x}, y: {y}, delta_var: {delta_var})")]
    MismatchedLengths { x: usize, y: usize, delta_var: usize },

    #[error("at least 3 calibration standards are required, got {0}")]
    TooFewStandards(usize),

    #[error("at least 2 replicate readings of the sample are required, got {0}")]
    TooFewReplicates(usize),

    #[error("error variance of standard {index} is negative ({value})")]
    NegativeVariance { index: usize, value: f64 },

    #[error("non-finite value in {field} at position {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("all standard concentrations are equal; the slope is not identifiable")]
    DegenerateDesign,

    #[error("slope estimate {0} is indistinguishable from zero")]
    SlopeNearZero(f64),

    #[error("response error variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("variance of the estimate is negative ({0})")]
    NegativeEstimate(f64),

    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),

    #[error("the information matrix is numerically singular")]
    SingularInformation,

    #[error("optimizer did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("invalid fit options: {0}")]
    InvalidOptions(&'static str),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("every one of the {0} replicates failed to fit")]
    AllReplicatesFailed(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
