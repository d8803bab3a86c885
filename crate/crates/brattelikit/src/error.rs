use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("explicit window exhausted at level {level} with a fail tail")]
    TailPolicyFail { level: i64 },
    #[error("dimension mismatch at level {level}: expected {expected}, found {found}")]
    DimensionMismatch { level: i64, expected: usize, found: usize },
    #[error("matrix entry overflow at level {level}")]
    EntryOverflow { level: i64 },
    #[error("unknown programmatic rule {0:?}")]
    UnknownRule(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("path is maximal through depth {depth}; a deeper prefix is needed")]
    NeedsDepth { depth: usize },
    #[error("path is maximal")]
    MaximalPath,
    #[error("path is minimal")]
    MinimalPath,
    #[error("no strictly positive power found within {bound} steps")]
    NotPrimitive { bound: usize },
    #[error("cone column vanished at depth {depth}")]
    DegenerateCone { depth: usize },
    #[error("pairing of positive and negative weights is zero")]
    ZeroPairing,
    #[error("stack over vertex {vertex} at level {level} has zero width")]
    NeedsPositiveWeights { level: usize, vertex: usize },
    #[error("weights known through level {available}, level {needed} requested")]
    WeightDepth { needed: usize, available: usize },
    #[error("{what}: deviation {deviation:e} exceeds tolerance {tol:e}")]
    Tolerance { what: String, deviation: f64, tol: f64 },
    #[error("rescaled sequence is not Cauchy (oscillation {oscillation:e})")]
    NotCauchy { oscillation: f64 },
    #[error("every limit height vanishes")]
    EmptyG0,
    #[error("epsilon {epsilon} must lie in (0, {bound})")]
    EpsilonTooLarge { epsilon: f64, bound: f64 },
    #[error("metamour value unknown up to cap {cap}")]
    DeltaUnknown { cap: usize },
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::TailPolicyFail { .. } => "TailPolicyFail",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EntryOverflow { .. } => "EntryOverflow",
            Error::UnknownRule(_) => "UnknownRule",
            Error::BadParams(_) => "BadParams",
            Error::Invalid(_) => "Invalid",
            Error::NeedsDepth { .. } => "NeedsDepth",
            Error::MaximalPath => "MaximalPath",
            Error::MinimalPath => "MinimalPath",
            Error::NotPrimitive { .. } => "NotPrimitive",
            Error::DegenerateCone { .. } => "DegenerateCone",
            Error::ZeroPairing => "ZeroPairing",
            Error::NeedsPositiveWeights { .. } => "NeedsPositiveWeights",
            Error::WeightDepth { .. } => "WeightDepth",
            Error::Tolerance { .. } => "Tolerance",
            Error::NotCauchy { .. } => "NotCauchy",
            Error::EmptyG0 => "EmptyG0",
            Error::EpsilonTooLarge { .. } => "EpsilonTooLarge",
            Error::DeltaUnknown { .. } => "DeltaUnknown",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
