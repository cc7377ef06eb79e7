use ghd_core::GhdError;
use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or arguments (exit 2).
    Usage(String),
    /// The computation itself failed (exit 1).
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Failure(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<GhdError> for CliError {
    fn from(e: GhdError) -> Self {
        match e {
            GhdError::InvalidArgument(_) | GhdError::ResourceLimit(_) => {
                CliError::Usage(e.to_string())
            }
            GhdError::Protocol(_) | GhdError::ConstructionFailed(_) => {
                CliError::Failure(e.to_string())
            }
        }
    }
}

pub fn missing(flag: &str) -> CliError {
    CliError::Usage(format!("missing required parameter --{flag}"))
}
