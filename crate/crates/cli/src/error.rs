use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical guard: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        })
    }
}

impl From<sigkern::Error> for CliError {
    fn from(e: sigkern::Error) -> Self {
        use sigkern::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter { .. } | E::LevelMismatch { .. } => CliError::Config(msg),
            E::GuardExceeded { .. } | E::NegativeLevel { .. } | E::Asymmetric { .. } => {
                CliError::Numerical(msg)
            }
            E::DimensionMismatch { .. }
            | E::NonFinite { .. }
            | E::EmptySequence
            | E::EmptySampleSet
            | E::Parse { .. }
            | E::DuplicateId(_)
            | E::Io { .. } => CliError::Data(msg),
        }
    }
}
