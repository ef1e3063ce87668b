use thiserror::Error;

/// Error taxonomy shared by every module.
///
/// `Domain` marks inputs outside an operation's mathematical domain,
/// `Validation` marks structurally invalid objects (bad polygons,
/// mesh/field mismatches), and `Numerical` marks solver breakdowns and
/// carries the pipeline stage that failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical error in stage `{stage}`: {message}")]
    Numerical { stage: String, message: String },
}

impl Error {
    pub fn numerical(stage: &str, message: impl Into<String>) -> Self {
        Error::Numerical {
            stage: stage.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
