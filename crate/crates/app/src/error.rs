use std::process::ExitCode;

use cryscreen::evaluation::EvalError;
use cryscreen::model_store::ModelStoreError;
use cryscreen::PipelineError;
use thiserror::Error;

/// Operator-facing failure with a fixed process exit code.
///
/// | code | meaning |
/// |------|---------|
/// | 2 | I/O, corpus or audio decode failure |
/// | 3 | too few subjects for the requested split or folds |
/// | 4 | bad configuration (unknown key, bad value, violated invariant) |
/// | 5 | model file rejected (corrupt, wrong magic or version) |
/// | 6 | no cry detected in the recording |
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    TooFewSubjects(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Model(String),
    #[error("{0}")]
    NoCry(String),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Input(_) => 2,
            AppError::TooFewSubjects(_) => 3,
            AppError::Config(_) => 4,
            AppError::Model(_) => 5,
            AppError::NoCry(_) => 6,
        }
    }

    pub fn to_exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::NoCryDetected | PipelineError::TooShort { .. } => AppError::NoCry(e.to_string()),
            PipelineError::InvalidConfig(_) | PipelineError::Feature(_) | PipelineError::DimensionMismatch { .. } => {
                AppError::Config(e.to_string())
            }
            PipelineError::Audio(_) => AppError::Input(e.to_string()),
            PipelineError::EmptyVerdicts | PipelineError::Svm(_) => AppError::Input(e.to_string()),
        }
    }
}

impl From<EvalError> for AppError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::TooFewSubjects(_) => AppError::TooFewSubjects(e.to_string()),
            EvalError::InvalidParameter(_) => AppError::Config(e.to_string()),
            EvalError::Pipeline(p) => p.into(),
            EvalError::Svm(s) => AppError::Config(s.to_string()),
            other => AppError::Input(other.to_string()),
        }
    }
}

impl From<ModelStoreError> for AppError {
    fn from(e: ModelStoreError) -> Self {
        match e {
            ModelStoreError::Io(_) => AppError::Input(e.to_string()),
            other => AppError::Model(other.to_string()),
        }
    }
}
