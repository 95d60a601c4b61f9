use thiserror::Error;

/// Failure categories shared by every module.
///
/// Each variant maps to one machine-readable code (see [`Error::code`]) that
/// the CLI puts into its reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("bracket failure: {0}")]
    BracketFailure(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("problem too large: {0}")]
    Size(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("sampling exhausted: {0}")]
    SamplingExhausted(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("schema error: {0}")]
    Schema(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::BracketFailure(_) => "bracket_failure",
            Error::Consistency(_) => "consistency",
            Error::Precondition(_) => "precondition",
            Error::Size(_) => "size",
            Error::HypothesisViolation(_) => "hypothesis_violation",
            Error::Parameter(_) => "parameter",
            Error::SamplingExhausted(_) => "sampling_exhausted",
            Error::Certification(_) => "certification",
            Error::Schema(_) => "schema",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
