use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Cholesky breakdown; `pivot` is the zero-based index of the first
    /// non-positive pivot and `value` the offending diagonal before sqrt.
    #[error("singular system: non-positive pivot {value:e} at index {pivot}")]
    Singular { pivot: usize, value: f64 },

    #[error("non-finite loss {value} at iteration {iteration}")]
    NonFiniteLoss { iteration: usize, value: f64 },

    #[error("non-finite parameter in {location}")]
    NonFiniteParameter { location: String },

    #[error("missing ground truth on evaluation grid")]
    MissingTruth,

    #[error("sample set has no train/validation split")]
    MissingSplit,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
