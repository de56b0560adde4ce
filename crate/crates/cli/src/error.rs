use serde::Serialize;
use thiserror::Error;

/// Failures split by who has to act: the user (bad flags, config, inputs)
/// or the environment (sandbox, model endpoint, disk).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    User(String),
    #[error("{0}")]
    Infra(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Infra(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::User(_) => "user_error",
            CliError::Infra(_) => "infrastructure_error",
        }
    }

    pub fn record(&self, command: &str) -> ErrorRecord {
        ErrorRecord {
            command: command.to_string(),
            kind: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        }
    }
}

/// The machine-readable form written to `error.json`.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub command: String,
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
}

pub fn user(e: impl std::fmt::Display) -> CliError {
    CliError::User(e.to_string())
}

pub fn infra(e: impl std::fmt::Display) -> CliError {
    CliError::Infra(e.to_string())
}

impl From<vf_core::dataset::DatasetError> for CliError {
    fn from(e: vf_core::dataset::DatasetError) -> Self {
        user(e)
    }
}

impl From<vf_core::exec::ExecError> for CliError {
    fn from(e: vf_core::exec::ExecError) -> Self {
        infra(e)
    }
}

impl From<vf_core::metrics::MetricError> for CliError {
    fn from(e: vf_core::metrics::MetricError) -> Self {
        user(e)
    }
}

impl From<vf_core::saturation::SaturationError> for CliError {
    fn from(e: vf_core::saturation::SaturationError) -> Self {
        user(e)
    }
}

impl From<vf_core::killmatrix::KillMatrixError> for CliError {
    fn from(e: vf_core::killmatrix::KillMatrixError) -> Self {
        infra(e)
    }
}

impl From<vf_core::tcg::TcgError> for CliError {
    fn from(e: vf_core::tcg::TcgError) -> Self {
        use vf_core::tcg::llm::LlmError;
        use vf_core::tcg::TcgError;
        match e {
            TcgError::GroundTruthMissing(_) | TcgError::Sampler(_) => user(e),
            TcgError::Llm(LlmError::MissingKey) => user(e),
            _ => infra(e),
        }
    }
}
