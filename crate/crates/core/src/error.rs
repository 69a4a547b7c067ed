use thiserror::Error;

/// Crate-wide error type.
///
/// Variants split into two broad classes: data problems (schema, parsing,
/// validation) and fitting problems (nonconvergence, collinearity, rank
/// deficiency). The CLI maps the first class to exit code 2 and the second
/// to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at data row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("no responder events in the data")]
    NoEvents,

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("collinear covariates: {0:?}")]
    Collinearity(Vec<String>),

    #[error("dimensionality error: {0}")]
    Dimensionality(String),

    #[error("design not estimable: {0}")]
    Estimability(String),

    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code class for CLI surfaces: 2 for input/validation
    /// problems, 3 for fitting failures.
    pub fn exit_class(&self) -> u8 {
        match self {
            Error::Schema(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::NoEvents
            | Error::UnknownCovariate(_)
            | Error::Unsupported(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::NonConvergence(_)
            | Error::Collinearity(_)
            | Error::Dimensionality(_)
            | Error::Estimability(_)
            | Error::Numeric(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
