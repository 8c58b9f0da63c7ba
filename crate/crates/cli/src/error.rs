use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] delaywave::Error),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot write output: {0}")]
    Csv(#[from] csv::Error),

    #[error("cannot write output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for usage and configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        use delaywave::Error as E;
        match self {
            CliError::Core(
                E::NewtonDiverged { .. }
                | E::ContinuationStalled { .. }
                | E::SpeedSignLoss { .. }
                | E::NoThetaCrossing { .. }
                | E::ContourThroughRoot { .. }
                | E::BlowUp { .. }
                | E::NoCrossing { .. }
                | E::SingularPivot { .. },
            ) => 3,
            _ => 1,
        }
    }
}
