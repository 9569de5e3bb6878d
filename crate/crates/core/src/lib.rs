//! Infant cry screening.
//!
//! A recording is trimmed, cut into fixed-length segments, and each segment is
//! reduced to pooled MFCC statistics. A kernel SVM trained with sequential
//! minimal optimization labels every segment, and a majority vote gives the
//! recording-level verdict (`normal` or `asphyxia`).
//!
//! ```no_run
//! use cryscreen::{audio, model_store, pipeline::Diagnoser};
//!
//! let (model, cfg) = model_store::load_model("model.ubw")?;
//! let diagnoser = Diagnoser::new(model, cfg)?;
//! let bytes = std::fs::read("cry.wav")?;
//! let buf = audio::decode_wav(&bytes, audio::CANONICAL_RATE_HZ)?;
//! let d = diagnoser.diagnose(&buf)?;
//! println!("{} ({:.2})", d.verdict, d.confidence);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! Outputs are a screening aid for trained staff, not a diagnosis.

pub mod audio;
pub mod dsp;
pub mod evaluation;
pub mod features;
pub mod label;
pub mod model_store;
pub mod pipeline;
pub mod svm;

pub use audio::{AudioBuffer, AudioError};
pub use features::{FeatureConfig, MfccExtractor, MfccMatrix};
pub use label::Label;
pub use pipeline::{Diagnoser, Diagnosis, PipelineConfig, PipelineError};
pub use svm::{KernelSpec, SvmModel, TrainConfig};
