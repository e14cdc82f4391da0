use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("game violates its assumptions: {0}")]
    AssumptionsViolated(String),

    #[error("no player-1 action has a best reply other than the lowest player-2 action")]
    NoSuchAction,

    #[error("incentive gap {gap} is not positive (erase cost at or above the cost bound)")]
    NonPositiveGap { gap: f64 },

    #[error("threshold at lambda={lambda} equalizes non-adjacent actions {actions:?}")]
    NonAdjacentIndifference { lambda: f64, actions: Vec<usize> },

    #[error("record length exceeded the cap of {cap} without termination")]
    NoTermination { cap: usize },

    #[error("continuation value decreased at record length {k}")]
    NonMonotone { k: usize },

    #[error("no consistent equilibrium found: {0}")]
    NoEquilibriumFound(String),

    #[error("prior {0} outside [0, 1)")]
    InvalidPrior(f64),

    #[error("discount factor {name}={value} outside (0, 1)")]
    InvalidDiscount { name: &'static str, value: f64 },

    #[error("no interior play probability at k={k} (numerator {numerator})")]
    NoInteriorSolution { k: usize, numerator: f64 },

    #[error("negative history mass at k={k}")]
    NegativeMass { k: usize },

    #[error("history has reputation one; posterior on the commitment action is 1")]
    DegenerateHistory,

    #[error("truncation mass {mass} is not below 1e-8; need at least {needed} rows")]
    TruncationTooCoarse { mass: f64, needed: usize },

    #[error("invalid disclosure policy: {0}")]
    InvalidPolicy(String),

    #[error("profile parameters do not match simulation config: {0}")]
    ProfileMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
