use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the crate.
///
/// Soft outcomes (non-convergence, degenerate spectra, asymmetry on load) are
/// carried as flags on the returned value objects instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("empty input")]
    Empty,

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("symmetric eigendecomposition did not converge")]
    EigenFailure,

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("invalid Renyi order {0}")]
    InvalidAlpha(f64),

    #[error("invalid epsilon floor {eps} for dimension {n}")]
    InvalidEpsilon { eps: f64, n: usize },

    #[error("support of rho is not contained in the support of sigma")]
    SupportViolation,

    #[error("smallest eigenvalue {min:e} is below the floor {eps:e}")]
    FloorViolation { min: f64, eps: f64 },

    #[error("eigenvalue {0:e} outside the domain of the generator")]
    DomainError(f64),

    #[error("row {0} is the zero vector")]
    ZeroRow(usize),

    #[error("bandwidth must be positive, got {0}")]
    BadBandwidth(f64),

    #[error("diagonal entry {0} is not positive")]
    ZeroDiagonal(usize),

    #[error("trace is not positive")]
    ZeroTrace,

    #[error("row {0} is not L2-normalized")]
    NotNormalized(usize),

    #[error("{n} samples exceed the dense limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("target entropy {target} not enclosed by bracket entropies [{low}, {high}]")]
    BracketFailure { target: f64, low: f64, high: f64 },

    #[error("dual problem is unbounded below: constraints are not attained by a full-rank state")]
    InfeasibleOrUnbounded,

    #[error("observables together with the identity are linearly dependent")]
    DependentConstraints,

    #[error("constraint projection annihilates every perturbation")]
    DegenerateNullSpace,

    #[error("cq states do not share the same prior")]
    MismatchedPrior,

    #[error("box constraints make the simplex empty")]
    InfeasibleBox,

    #[error("factor matrix is zero")]
    ZeroFactor,

    #[error("observations violate PSD necessary conditions at {0:?}")]
    InfeasibleObservation(Vec<(usize, usize)>),

    #[error("affinity row {0} has degree below the floor")]
    DegenerateAffinity(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("duplicate pair ({0}, {1})")]
    DuplicatePair(usize, usize),

    #[error("index ({0}, {1}) out of range")]
    OutOfRange(usize, usize),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Stable machine-readable name used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "NotSquare",
            Error::Empty => "Empty",
            Error::NonFinite(_) => "NonFinite",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EigenFailure => "EigenFailure",
            Error::NotPsd(_) => "NotPsd",
            Error::BadTrace(_) => "BadTrace",
            Error::InvalidAlpha(_) => "InvalidAlpha",
            Error::InvalidEpsilon { .. } => "InvalidEpsilon",
            Error::SupportViolation => "SupportViolation",
            Error::FloorViolation { .. } => "FloorViolation",
            Error::DomainError(_) => "DomainError",
            Error::ZeroRow(_) => "ZeroRow",
            Error::BadBandwidth(_) => "BadBandwidth",
            Error::ZeroDiagonal(_) => "ZeroDiagonal",
            Error::ZeroTrace => "ZeroTrace",
            Error::NotNormalized(_) => "NotNormalized",
            Error::TooLarge { .. } => "TooLarge",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::InfeasibleOrUnbounded => "InfeasibleOrUnbounded",
            Error::DependentConstraints => "DependentConstraints",
            Error::DegenerateNullSpace => "DegenerateNullSpace",
            Error::MismatchedPrior => "MismatchedPrior",
            Error::InfeasibleBox => "InfeasibleBox",
            Error::ZeroFactor => "ZeroFactor",
            Error::InfeasibleObservation(_) => "InfeasibleObservation",
            Error::DegenerateAffinity(_) => "DegenerateAffinity",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::DuplicatePair(..) => "DuplicatePair",
            Error::OutOfRange(..) => "OutOfRange",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "Io",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
