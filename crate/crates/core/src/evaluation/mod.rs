//! Corpus handling, subject-disjoint protocols, screening metrics and the
//! record-length / noise studies.

mod corpus;
mod harness;
mod metrics;
mod split;
mod synth;

use std::path::PathBuf;

use thiserror::Error;

use crate::audio::AudioError;
use crate::pipeline::PipelineError;
use crate::svm::SvmError;

pub use corpus::{load_audio, load_corpus, Corpus, CorpusEntry, LoadedCorpus, MANIFEST_FILE, SYNTHETIC_MARKER};
pub use harness::{
    default_grid, evaluate_recordings, featurize_corpus, kfold_cv, noise_robustness_eval, record_length_sweep,
    train_and_evaluate, train_on, CvCell, CvResult, GridCell, NoiseRow, SweepRow,
};
pub use metrics::{confusion_metrics, EvalReport};
pub use split::{split_by_subject, subject_folds, SplitPlan};
pub use synth::{generate_synthetic_corpus, synthesize_recording, SynthParams};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("I/O error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corpus root {root} has no manifest.csv and no {class}/ directory")]
    MissingClassDir { root: PathBuf, class: &'static str },
    #[error("manifest row {row}: {reason}")]
    BadManifestRow { row: usize, reason: String },
    #[error("duplicate corpus path {0}")]
    DuplicatePath(PathBuf),
    #[error("subject {0:?} has recordings under both labels")]
    MixedSubjectLabels(String),
    #[error("too few subjects: {0}")]
    TooFewSubjects(String),
    #[error("cannot decode {path}: {source}")]
    Audio { path: PathBuf, source: AudioError },
    #[error("no predictions to score")]
    EmptyPredictions,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Svm(#[from] SvmError),
}

impl EvalError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EvalError::Io {
            path: path.into(),
            source,
        }
    }
}
