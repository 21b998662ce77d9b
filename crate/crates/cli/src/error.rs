use conerepair::Error;

/// Failures surfaced by the command-line front end, each mapped to a stable
/// exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("solver error: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::InvalidArgument(_)
            | Error::UnsupportedComposition(_)
            | Error::Unsupported(_)
            | Error::InteriorInfeasible { .. } => CliError::Input(e.to_string()),
            Error::Numerical(_) | Error::DegenerateGradient { .. } | Error::Context { .. } => {
                CliError::Solver(e.to_string())
            }
        }
    }
}
