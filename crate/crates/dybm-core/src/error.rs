use thiserror::Error;

#[derive(Debug, Error)]
pub enum DybmError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("input: {0}")]
    Input(String),
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("numerical: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, DybmError>;

impl DybmError {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            DybmError::Numerical(_) => 3,
            _ => 2,
        }
    }
}
