use kdv_vessel::VesselError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Vessel(#[from] VesselError),
    #[error("output error: {0}")]
    Output(String),
    /// The reader of stdout went away; not reported.
    #[error("output closed")]
    ClosedPipe,
}

impl CliError {
    /// 2 for configuration and I/O problems, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ClosedPipe => 0,
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Vessel(e) if e.is_configuration() => 2,
            CliError::Vessel(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return CliError::ClosedPipe;
        }
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if let csv::ErrorKind::Io(io) = e.kind() {
            if io.kind() == std::io::ErrorKind::BrokenPipe {
                return CliError::ClosedPipe;
            }
        }
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe) {
            return CliError::ClosedPipe;
        }
        CliError::Output(e.to_string())
    }
}
