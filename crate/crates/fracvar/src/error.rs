use thiserror::Error;

/// Failure classes with stable exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed input, invalid parameters.
    #[error("{0}")]
    Usage(String),
    /// The computation ran but a tolerance or convergence check failed.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }

    pub fn usage(msg: impl std::fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }
}

impl From<fracvar_core::Error> for CliError {
    fn from(e: fracvar_core::Error) -> Self {
        use fracvar_core::Error as E;
        match e {
            E::SingularMatrix { .. } | E::DenseCapExceeded { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("csv: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
