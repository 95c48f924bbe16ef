use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_owned(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid settings: {}", join(.0))]
    Invalid(Vec<FieldError>),

    #[error("unknown variable `{name}`; valid names: {}", .valid.join(", "))]
    UnknownVariable { name: String, valid: Vec<String> },

    #[error("bootstrap requested but the model has no residuals and no data was supplied")]
    BootstrapUnavailable,

    #[error(transparent)]
    Core(#[from] impulse_core::Error),
}

fn join(errors: &[FieldError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl EngineError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        EngineError::Invalid(vec![FieldError::new(field, message)])
    }

    /// True when the caller, not the computation, is at fault.
    pub fn is_usage(&self) -> bool {
        use impulse_core::Error as E;
        match self {
            EngineError::Invalid(_) | EngineError::UnknownVariable { .. } | EngineError::BootstrapUnavailable => true,
            EngineError::Core(e) => matches!(e, E::Config(_) | E::Domain(_) | E::BootstrapUnavailable(_)),
        }
    }
}

pub type EngineResult<T> = Result<T, EngineError>;
