use thiserror::Error;

/// CLI failures, each mapped to a stable process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation: unknown integrand, malformed parameter block,
    /// inconsistent flags. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Filesystem or serialization trouble while writing artifacts.
    /// Exit code 3.
    #[error("{0}")]
    Io(String),
    /// The engine refused or aborted a run (invalid configuration caught
    /// late, non-finite integrand value, ill-conditioned spectrum). Grouped
    /// with exit code 3: the experiment could not be completed.
    #[error(transparent)]
    Engine(#[from] cubayes::CubatureError),
}

impl CliError {
    /// 1 is reserved for a failed success-rate floor (decided in `main`,
    /// not via this error type), 2 flags user error, 3 an aborted run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Engine(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
