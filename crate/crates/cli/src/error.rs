use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] netwatch::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use netwatch::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 4,
            CliError::Core(e) => match e {
                E::NonConvergence { .. }
                | E::SingularCovariance(_)
                | E::BracketFailure { .. }
                | E::NoValidRuns(_)
                | E::UndefinedAcf
                | E::NoUniqueStationary => 3,
                E::Io(_) | E::Parse { .. } | E::EmptyIngest { .. } | E::NonContiguousSeries { .. } => 4,
                _ => 2,
            },
        }
    }
}
