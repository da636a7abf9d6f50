use thiserror::Error;

/// Failure categories; each maps to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Threshold(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Grid(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Threshold(_) => 1,
            CliError::Config(_) => 2,
            CliError::Grid(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<evolve::Error> for CliError {
    fn from(e: evolve::Error) -> Self {
        use evolve::Error as E;
        match e {
            E::InvalidGrid(_) => CliError::Grid(e.to_string()),
            E::Spec(_) | E::Shape(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
