use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, missing inputs or malformed input rows.
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Stage { .. } => 3,
        }
    }

    pub fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Stage { stage, message: e.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
