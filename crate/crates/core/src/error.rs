use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("couplings {0} and {1} coincide; epsilon table undefined")]
    DegenerateCouplings(usize, usize),

    #[error("site count mismatch: {0} vs {1}")]
    SiteMismatch(usize, usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("resource limit exceeded: {0}")]
    ResourceExceeded(String),

    #[error("no closed form known for ({0} | {1})")]
    UnknownElement(String, String),

    #[error("monomial basis is degenerate on the sampled systems; null-space combination: {0}")]
    BasisDegenerate(String),

    #[error("could not assemble enough independent equations: {0}")]
    InsufficientSystems(String),

    #[error("closed form failed verification: {0}")]
    VerificationFailed(String),

    #[error("not enough points: need {needed}, have {have}")]
    InsufficientPoints { needed: usize, have: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("ambiguous degeneracy grouping: {0}")]
    AmbiguousDegeneracy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
