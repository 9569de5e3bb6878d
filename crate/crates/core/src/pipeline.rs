//! Recording-level diagnosis: trim, cut into fixed segments, pool MFCCs per
//! segment, classify each segment, and take the majority vote.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{self, AudioBuffer, AudioError};
use crate::dsp::{self, DspError};
use crate::features::{FeatureConfig, FeatureError, MfccExtractor, MfccMatrix};
use crate::label::Label;
use crate::svm::{SvmError, SvmModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("no cry detected")]
    NoCryDetected,
    #[error("recording too short: {segments} full segment(s), need at least {required}")]
    TooShort { segments: usize, required: usize },
    #[error("model expects {expected}-dimensional features, config produces {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no segment verdicts to vote on")]
    EmptyVerdicts,
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Feature(FeatureError),
    #[error(transparent)]
    Svm(SvmError),
}

impl PipelineError {
    /// Stable machine-readable code for operator surfaces.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::NoCryDetected => "no_cry_detected",
            PipelineError::TooShort { .. } => "recording_too_short",
            PipelineError::DimensionMismatch { .. } => "model_config_mismatch",
            PipelineError::EmptyVerdicts => "empty_verdicts",
            PipelineError::InvalidConfig(_) => "invalid_config",
            PipelineError::Audio(_) => "malformed_audio",
            PipelineError::Feature(_) => "feature_error",
            PipelineError::Svm(_) => "classifier_error",
        }
    }

    /// True for the two "nothing usable was recorded" outcomes.
    pub fn is_no_cry(&self) -> bool {
        matches!(self, PipelineError::NoCryDetected | PipelineError::TooShort { .. })
    }
}

impl From<FeatureError> for PipelineError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::Dsp(DspError::EmptyAfterTrim) => PipelineError::NoCryDetected,
            other => PipelineError::Feature(other),
        }
    }
}

impl From<SvmError> for PipelineError {
    fn from(e: SvmError) -> Self {
        match e {
            SvmError::DimensionMismatch { expected, got } => PipelineError::DimensionMismatch { expected, got },
            other => PipelineError::Svm(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Per-coefficient mean followed by per-coefficient population std.
    MeanStd,
}

impl Pooling {
    pub fn output_dim(self, n_mfcc: usize) -> usize {
        match self {
            Pooling::MeanStd => 2 * n_mfcc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub feature: FeatureConfig,
    pub segment_len_s: f64,
    pub min_segments: usize,
    pub pooling: Pooling,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            feature: FeatureConfig::default(),
            segment_len_s: 1.0,
            min_segments: 1,
            pooling: Pooling::MeanStd,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.feature.validate().map_err(PipelineError::Feature)?;
        if !(self.segment_len_s > 0.0 && self.segment_len_s.is_finite()) {
            return Err(PipelineError::InvalidConfig(format!(
                "segment_len_s must be > 0, got {}",
                self.segment_len_s
            )));
        }
        if self.min_segments == 0 {
            return Err(PipelineError::InvalidConfig("min_segments must be >= 1".into()));
        }
        if self.segment_len_samples() < self.feature.frame_len_samples() {
            return Err(PipelineError::InvalidConfig(format!(
                "a {} s segment is shorter than one {} ms frame",
                self.segment_len_s, self.feature.frame_len_ms
            )));
        }
        Ok(())
    }

    pub fn segment_len_samples(&self) -> usize {
        (self.segment_len_s * self.feature.sample_rate_hz as f64).round() as usize
    }

    pub fn feature_dim(&self) -> usize {
        self.pooling.output_dim(self.feature.n_mfcc)
    }
}

/// A fixed-length slice of a trimmed recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub samples: Vec<f64>,
    pub start_s: f64,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
}

impl Segment {
    fn to_buffer(&self) -> AudioBuffer {
        AudioBuffer::new(self.samples.clone(), self.sample_rate_hz).expect("segment of a valid buffer")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentVerdict {
    pub label: Label,
    pub decision_value: f64,
    pub start_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub verdict: Label,
    pub segment_verdicts: Vec<SegmentVerdict>,
    pub votes_asphyxia: usize,
    pub votes_normal: usize,
    pub confidence: f64,
    pub elapsed: Duration,
    pub model_digest: String,
    pub warnings: Vec<String>,
}

impl Diagnosis {
    pub fn elapsed_ms(&self) -> u64 {
        self.elapsed.as_millis() as u64
    }
}

/// Consecutive non-overlapping windows of `segment_len_s`; the tail is dropped.
pub fn segment_audio(buf: &AudioBuffer, cfg: &PipelineConfig) -> Result<Vec<Segment>, PipelineError> {
    let seg_len = cfg.segment_len_samples();
    if seg_len == 0 {
        return Err(PipelineError::InvalidConfig(
            "segment length rounds to zero samples".into(),
        ));
    }
    let rate = buf.sample_rate_hz();
    let segments: Vec<Segment> = buf
        .samples()
        .chunks_exact(seg_len)
        .enumerate()
        .map(|(i, chunk)| Segment {
            samples: chunk.to_vec(),
            start_s: (i * seg_len) as f64 / rate as f64,
            duration_s: seg_len as f64 / rate as f64,
            sample_rate_hz: rate,
        })
        .collect();
    if segments.len() < cfg.min_segments {
        return Err(PipelineError::TooShort {
            segments: segments.len(),
            required: cfg.min_segments,
        });
    }
    Ok(segments)
}

/// Pools an MFCC matrix into one vector.
pub fn pool(m: &MfccMatrix, pooling: Pooling) -> Vec<f64> {
    match pooling {
        Pooling::MeanStd => {
            let dim = m.n_coeffs();
            let n = m.n_frames() as f64;
            let mut means = Vec::with_capacity(dim);
            let mut stds = Vec::with_capacity(dim);
            for j in 0..dim {
                let first = m.vectors[0][j];
                if m.vectors.iter().all(|v| v[j] == first) {
                    means.push(first);
                    stds.push(0.0);
                    continue;
                }
                let mean = m.vectors.iter().map(|v| v[j]).sum::<f64>() / n;
                let var = m.vectors.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / n;
                means.push(mean);
                stds.push(var.sqrt());
            }
            means.extend(stds);
            means
        }
    }
}

/// Pooled feature vector of one segment using a prepared extractor.
pub fn segment_features(seg: &Segment, extractor: &MfccExtractor, pooling: Pooling) -> Result<Vec<f64>, PipelineError> {
    let m = extractor.extract(&seg.to_buffer())?;
    Ok(pool(&m, pooling))
}

/// One-shot variant of [`segment_features`] that builds its own extractor.
pub fn segment_feature_vector(seg: &Segment, cfg: &PipelineConfig) -> Result<Vec<f64>, PipelineError> {
    let extractor = MfccExtractor::new(&cfg.feature)?;
    segment_features(seg, &extractor, cfg.pooling)
}

pub fn classify_segment(
    model: &SvmModel,
    seg: &Segment,
    cfg: &PipelineConfig,
) -> Result<SegmentVerdict, PipelineError> {
    check_model_dim(model, cfg)?;
    let features = segment_feature_vector(seg, cfg)?;
    let decision_value = model.decision_value(&features)?;
    Ok(SegmentVerdict {
        label: Label::from_decision(decision_value),
        decision_value,
        start_s: seg.start_s,
    })
}

/// Strict majority wins; an exact tie goes to asphyxia. Returns `(verdict, confidence)`.
pub fn majority_vote(verdicts: &[SegmentVerdict]) -> Result<(Label, f64), PipelineError> {
    vote_labels(verdicts.iter().map(|v| v.label))
}

/// [`majority_vote`] over bare labels.
pub fn vote_labels(labels: impl IntoIterator<Item = Label>) -> Result<(Label, f64), PipelineError> {
    let (mut a, mut n) = (0usize, 0usize);
    for l in labels {
        match l {
            Label::Asphyxia => a += 1,
            Label::Normal => n += 1,
        }
    }
    let total = a + n;
    if total == 0 {
        return Err(PipelineError::EmptyVerdicts);
    }
    let verdict = if n > a { Label::Normal } else { Label::Asphyxia };
    Ok((verdict, a.max(n) as f64 / total as f64))
}

fn check_model_dim(model: &SvmModel, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    let got = cfg.feature_dim();
    if model.dim() != got {
        return Err(PipelineError::DimensionMismatch {
            expected: model.dim(),
            got,
        });
    }
    Ok(())
}

/// Pooled per-segment features of a whole recording.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingFeatures {
    /// `(start_s, pooled vector)` for every usable segment, in time order.
    pub segments: Vec<(f64, Vec<f64>)>,
    /// Start times of segments that were silent or too short after trimming.
    pub skipped: Vec<f64>,
}

/// Trims, segments and featurizes a recording already at the config's rate.
///
/// Segments that are empty after their own trim are skipped; if none remain
/// the recording counts as having no cry.
pub fn featurize_recording(
    buf: &AudioBuffer,
    cfg: &PipelineConfig,
    extractor: &MfccExtractor,
) -> Result<RecordingFeatures, PipelineError> {
    let trimmed = dsp::trim_silence(buf, cfg.feature.trim_threshold).map_err(|e| match e {
        DspError::EmptyAfterTrim => PipelineError::NoCryDetected,
        other => PipelineError::Feature(other.into()),
    })?;
    let segments = segment_audio(&trimmed, cfg)?;
    let mut out = RecordingFeatures {
        segments: Vec::with_capacity(segments.len()),
        skipped: Vec::new(),
    };
    for seg in &segments {
        match segment_features(seg, extractor, cfg.pooling) {
            Ok(v) => out.segments.push((seg.start_s, v)),
            Err(PipelineError::NoCryDetected)
            | Err(PipelineError::Feature(FeatureError::Dsp(DspError::InputTooShort { .. }))) => {
                out.skipped.push(seg.start_s)
            }
            Err(e) => return Err(e),
        }
    }
    if out.segments.is_empty() {
        return Err(PipelineError::NoCryDetected);
    }
    Ok(out)
}

/// A model bound to its pipeline config, ready to diagnose recordings.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Diagnoser {
    model: SvmModel,
    cfg: PipelineConfig,
    extractor: MfccExtractor,
    digest: String,
}

impl Diagnoser {
    /// The digest is that of the model file this pair would be saved as.
    pub fn new(model: SvmModel, cfg: PipelineConfig) -> Result<Self, PipelineError> {
        let digest = crate::model_store::model_digest(&model, &cfg);
        Self::with_digest(model, cfg, digest)
    }

    pub fn with_digest(model: SvmModel, cfg: PipelineConfig, digest: String) -> Result<Self, PipelineError> {
        cfg.validate()?;
        check_model_dim(&model, &cfg)?;
        let extractor = MfccExtractor::new(&cfg.feature)?;
        Ok(Self {
            model,
            cfg,
            extractor,
            digest,
        })
    }

    pub fn model(&self) -> &SvmModel {
        &self.model
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn extractor(&self) -> &MfccExtractor {
        &self.extractor
    }

    pub fn model_digest(&self) -> &str {
        &self.digest
    }

    /// Resamples to the config's rate when needed.
    pub fn canonicalize(&self, buf: &AudioBuffer) -> Result<AudioBuffer, PipelineError> {
        Ok(audio::resample_linear(buf, self.cfg.feature.sample_rate_hz)?)
    }

    pub fn featurize(&self, buf: &AudioBuffer) -> Result<RecordingFeatures, PipelineError> {
        let buf = self.canonicalize(buf)?;
        featurize_recording(&buf, &self.cfg, &self.extractor)
    }

    /// Classifies pre-computed segment features and votes.
    pub fn verdicts(&self, features: &RecordingFeatures) -> Result<Vec<SegmentVerdict>, PipelineError> {
        features
            .segments
            .iter()
            .map(|(start_s, v)| {
                let decision_value = self.model.decision_value(v)?;
                Ok(SegmentVerdict {
                    label: Label::from_decision(decision_value),
                    decision_value,
                    start_s: *start_s,
                })
            })
            .collect()
    }

    pub fn diagnose(&self, buf: &AudioBuffer) -> Result<Diagnosis, PipelineError> {
        let started = Instant::now();
        let features = self.featurize(buf)?;
        let segment_verdicts = self.verdicts(&features)?;
        let (verdict, confidence) = majority_vote(&segment_verdicts)?;
        let votes_asphyxia = segment_verdicts.iter().filter(|v| v.label == Label::Asphyxia).count();
        let mut warnings = Vec::new();
        if !features.skipped.is_empty() {
            let total = features.skipped.len() + segment_verdicts.len();
            warnings.push(format!(
                "{} of {} segments skipped as silent",
                features.skipped.len(),
                total
            ));
        }
        if !self.model.meta().converged {
            warnings.push(format!(
                "model training did not converge ({} KKT violations)",
                self.model.meta().kkt_violations
            ));
        }
        Ok(Diagnosis {
            verdict,
            votes_normal: segment_verdicts.len() - votes_asphyxia,
            votes_asphyxia,
            segment_verdicts,
            confidence,
            elapsed: started.elapsed(),
            model_digest: self.digest.clone(),
            warnings,
        })
    }
}

/// One-shot diagnosis. Prefer a long-lived [`Diagnoser`] for repeated calls.
pub fn diagnose(buf: &AudioBuffer, model: &SvmModel, cfg: &PipelineConfig) -> Result<Diagnosis, PipelineError> {
    let started = Instant::now();
    let mut d = Diagnoser::new(model.clone(), cfg.clone())?.diagnose(buf)?;
    d.elapsed = started.elapsed();
    Ok(d)
}
