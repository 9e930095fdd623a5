use thiserror::Error;

/// Errors raised by algebra construction, derivation solving and reporting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("block weights must be positive and sum to 1 (got sum {sum})")]
    WeightsNotNormalized { sum: f64 },

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid group action: {0}")]
    ActionInvalid(String),

    #[error("algebra is not semisimple: {0}")]
    NotSemisimple(String),

    #[error("group is not abelian")]
    NotAbelian,

    #[error("ambiguous numerical rank: smallest kept singular value {kept:e}, largest dropped {dropped:e}")]
    RankAmbiguous { kept: f64, dropped: f64 },

    #[error("not a unital *-subalgebra: span has dimension {given}, generated subalgebra has dimension {generated}")]
    NotSubalgebra { given: usize, generated: usize },

    #[error("invalid matrix units: {0}")]
    UnitsInvalid(String),

    #[error("set does not generate the algebra: {0}")]
    NotGenerating(String),

    #[error("subspace is not closed under the right action (residual {0:e})")]
    NotRightClosed(f64),

    #[error("generating set is not scaled by the action: {0}")]
    GeneratingSetNotScaled(String),

    #[error("not a subgroup: {0}")]
    NotSubgroup(String),

    #[error("invalid experiment spec at {location}: {message}")]
    SpecInvalid { location: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn spec(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::SpecInvalid {
            location: location.into(),
            message: message.into(),
        }
    }
}
