use crate::integrator::Trajectory;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid parameter `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("input error: {0}")]
    Input(String),

    /// The state left the admissible region. Carries everything recorded up
    /// to the last valid step.
    #[error("simulation diverged at t = {time} s: {reason}")]
    Diverged {
        time: f64,
        reason: String,
        trajectory: Box<Trajectory>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(field: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}
