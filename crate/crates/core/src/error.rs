use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates the invariant of the type it is used to build.
    #[error("invalid {field}: {reason}")]
    InvalidArgument { field: String, reason: String },

    /// Sensitivity + specificity = 1, so the data carry no information on θ.
    #[error("prevalence is not identifiable: sensitivity + specificity = 1")]
    NonIdentifiable,

    #[error("parameter point has dimension {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no finite-density starting point found for chain {chain} after {attempts} attempts")]
    InvalidInit { chain: usize, attempts: usize },

    #[error("diagnostics need at least {required} draws per chain, got {found}")]
    InsufficientDraws { required: usize, found: usize },

    #[error("failed to parse {what}: {reason}")]
    Parse { what: String, reason: String },

    #[error("{0}")]
    NothingToPlot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { field: field.into(), reason: reason.into() }
    }

    /// True for errors caused by bad user input rather than I/O or numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidArgument { .. } | Error::Parse { .. } | Error::DimensionMismatch { .. })
    }
}
