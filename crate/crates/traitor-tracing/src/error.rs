//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its valid range.
    #[error("domain error: {0}")]
    Domain(String),

    /// An index (user, position or symbol) is out of range.
    #[error("index error: {0}")]
    Index(String),

    /// The cutoff-Dirichlet rejection loop exhausted its attempt budget,
    /// which signals an infeasible tau/kappa combination.
    #[error(
        "bias sampling failed after {attempts} attempts (q={q}, kappa={kappa}, tau={tau}); \
         the cutoff interval is too improbable under this concentration"
    )]
    SamplingFailure {
        q: usize,
        kappa: f64,
        tau: f64,
        attempts: u64,
    },

    /// A persisted artifact violates an invariant; the message names the
    /// first violation found.
    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("unsupported format version {found} (this build reads version {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    /// Distribution estimation needs strictly more users than the collusion size.
    #[error(
        "insufficient users: need more than {c} users to sample innocents, codebook has {n_users}"
    )]
    InsufficientUsers { n_users: usize, c: usize },

    #[error("position {0} was already consumed by a previous step")]
    DuplicatePosition(usize),

    #[error("score distributions unusable: {0}")]
    EmptyDistribution(String),

    /// `w' D` vanished (or a matrix could not be orthonormalized), so no
    /// projection is defined.
    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),

    /// The embedding-strength search could not reach the target projection.
    #[error("embedding strength search failed: {0}")]
    TuningFailure(String),

    /// The query source failed mid-run; `consumed` positions had already
    /// been answered.
    #[error("oracle failed after {consumed} answered queries: {source}")]
    OracleFailure {
        consumed: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("TOML error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn index(msg: impl Into<String>) -> Self {
        Error::Index(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn malformed(msg: impl Into<String>) -> Self {
        Error::MalformedFile(msg.into())
    }
}
