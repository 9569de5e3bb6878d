//! `.ubw` model files: a trained SVM plus the pipeline config that produced
//! its features, in a fixed little-endian layout sealed by a SHA-256 digest.
//!
//! See `docs/model-format.md` for the byte layout table.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::FeatureConfig;
use crate::pipeline::{PipelineConfig, Pooling};
use crate::svm::{KernelSpec, Standardizer, SvmModel, TrainingMeta};

pub const MAGIC: [u8; 4] = *b"UBW1";
pub const FORMAT_VERSION: u32 = 1;
pub const DIGEST_LEN: usize = 32;

/// Magic + version.
pub const HEADER_LEN: usize = 8;
/// Feature and segmentation fields.
pub const CONFIG_BLOCK_LEN: usize = 81;

const KERNEL_LINEAR: u8 = 0;
const KERNEL_RBF: u8 = 1;
const POOLING_MEAN_STD: u8 = 0;

#[derive(Debug, Error)]
pub enum ModelStoreError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model file digest mismatch (file is corrupted)")]
    DigestMismatch,
    #[error("model file is truncated")]
    Truncated,
    #[error("model file content is invalid: {0}")]
    InvalidContent(String),
}

/// A decoded model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub svm: SvmModel,
    pub pipeline: PipelineConfig,
    pub digest: [u8; DIGEST_LEN],
}

impl ModelFile {
    /// First 8 hex characters of the digest.
    pub fn short_digest(&self) -> String {
        hex::encode(self.digest)[..8].to_string()
    }
}

fn put_u8(out: &mut Vec<u8>, v: u8) {
    out.push(v);
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_count(out: &mut Vec<u8>, n: usize) {
    put_u32(out, u32::try_from(n).expect("count fits in u32"));
}

/// Canonical encoding of the feature fields (first 68 bytes of the config block).
pub fn encode_feature_config(out: &mut Vec<u8>, f: &FeatureConfig) {
    put_u32(out, f.sample_rate_hz);
    put_f64(out, f.frame_len_ms);
    put_f64(out, f.hop_len_ms);
    put_f64(out, f.pre_emphasis_alpha);
    put_count(out, f.n_mel_filters);
    put_count(out, f.n_mfcc);
    put_f64(out, f.fmin_hz);
    put_f64(out, f.fmax_hz);
    put_f64(out, f.log_floor);
    put_f64(out, f.trim_threshold);
}

fn encode_pipeline_config(out: &mut Vec<u8>, cfg: &PipelineConfig) {
    encode_feature_config(out, &cfg.feature);
    put_f64(out, cfg.segment_len_s);
    put_count(out, cfg.min_segments);
    put_u8(
        out,
        match cfg.pooling {
            Pooling::MeanStd => POOLING_MEAN_STD,
        },
    );
}

fn encode_svm(out: &mut Vec<u8>, m: &SvmModel) {
    match m.kernel() {
        KernelSpec::Linear => {
            put_u8(out, KERNEL_LINEAR);
            put_f64(out, 0.0);
        }
        KernelSpec::Rbf { gamma } => {
            put_u8(out, KERNEL_RBF);
            put_f64(out, *gamma);
        }
    }
    let s = m.standardizer();
    put_count(out, s.dim());
    s.means().iter().for_each(|&v| put_f64(out, v));
    s.stds().iter().for_each(|&v| put_f64(out, v));
    s.constant_features().iter().for_each(|&v| put_u8(out, v as u8));
    let meta = m.meta();
    put_f64(out, meta.c);
    put_f64(out, meta.tolerance);
    put_u32(out, meta.passes);
    put_u8(out, meta.converged as u8);
    put_u32(out, meta.kkt_violations);
    put_count(out, m.n_support());
    put_count(out, m.dim());
    for sv in m.support_vectors() {
        sv.iter().for_each(|&v| put_f64(out, v));
    }
    put_count(out, m.dual_coefs().len());
    m.dual_coefs().iter().for_each(|&v| put_f64(out, v));
    put_f64(out, m.bias());
}

/// Everything before the digest.
fn encode_body(model: &SvmModel, cfg: &PipelineConfig) -> Vec<u8> {
    let mut out = Vec::with_capacity(expected_file_len(model.n_support(), model.dim()));
    out.extend_from_slice(&MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    encode_pipeline_config(&mut out, cfg);
    encode_svm(&mut out, model);
    out
}

/// Exact file size for a model with `n_sv` support vectors of dimension `dim`.
pub fn expected_file_len(n_sv: usize, dim: usize) -> usize {
    // kernel tag + gamma + dim count
    let kernel = 1 + 8 + 4;
    // means, stds (f64) and constant flags (u8)
    let standardizer = dim * (8 + 8 + 1);
    // C, tolerance, passes, converged, violations
    let meta = 8 + 8 + 4 + 1 + 4;
    // (rows, cols) prefix + coefficient count + bias
    let counts = 4 + 4 + 4;
    HEADER_LEN + CONFIG_BLOCK_LEN + kernel + standardizer + meta + counts + 8 * (n_sv * dim + n_sv + 1) + DIGEST_LEN
}

pub fn encode_model(model: &SvmModel, cfg: &PipelineConfig) -> Vec<u8> {
    let mut out = encode_body(model, cfg);
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

/// First 8 hex characters of the SHA-256 of `bytes`.
pub fn hash_short(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))[..8].to_string()
}

/// Short digest the model would carry if saved with this config.
pub fn model_digest(model: &SvmModel, cfg: &PipelineConfig) -> String {
    hash_short(&encode_body(model, cfg))
}

/// Writes the model and returns its full digest.
pub fn save_model(
    model: &SvmModel,
    cfg: &PipelineConfig,
    path: impl AsRef<Path>,
) -> Result<[u8; DIGEST_LEN], ModelStoreError> {
    let bytes = encode_model(model, cfg);
    fs::write(path, &bytes)?;
    let mut digest = [0u8; DIGEST_LEN];
    digest.copy_from_slice(&bytes[bytes.len() - DIGEST_LEN..]);
    Ok(digest)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(SvmModel, PipelineConfig), ModelStoreError> {
    let file = load_model_file(path)?;
    Ok((file.svm, file.pipeline))
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<ModelFile, ModelStoreError> {
    decode_model(&fs::read(path)?)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelStoreError> {
        let end = self.pos.checked_add(n).ok_or(ModelStoreError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(ModelStoreError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ModelStoreError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ModelStoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn count(&mut self) -> Result<usize, ModelStoreError> {
        Ok(self.u32()? as usize)
    }

    fn f64(&mut self) -> Result<f64, ModelStoreError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ModelStoreError> {
        let bytes = self.take(n.checked_mul(8).ok_or(ModelStoreError::Truncated)?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

// Raw fields, read once the digest has been verified and validated by `build`.
struct RawModel {
    pipeline: PipelineConfig,
    kernel_tag: u8,
    gamma: f64,
    means: Vec<f64>,
    stds: Vec<f64>,
    constant: Vec<u8>,
    meta: TrainingMeta,
    converged_tag: u8,
    support_vectors: Vec<Vec<f64>>,
    dual_coefs: Vec<f64>,
    bias: f64,
}

fn read_raw(r: &mut Reader<'_>) -> Result<RawModel, ModelStoreError> {
    let feature = FeatureConfig {
        sample_rate_hz: r.u32()?,
        frame_len_ms: r.f64()?,
        hop_len_ms: r.f64()?,
        pre_emphasis_alpha: r.f64()?,
        n_mel_filters: r.count()?,
        n_mfcc: r.count()?,
        fmin_hz: r.f64()?,
        fmax_hz: r.f64()?,
        log_floor: r.f64()?,
        trim_threshold: r.f64()?,
    };
    let segment_len_s = r.f64()?;
    let min_segments = r.count()?;
    let pooling_tag = r.u8()?;
    let pooling = match pooling_tag {
        POOLING_MEAN_STD => Pooling::MeanStd,
        other => return Err(ModelStoreError::InvalidContent(format!("unknown pooling tag {other}"))),
    };
    let kernel_tag = r.u8()?;
    let gamma = r.f64()?;
    let dim = r.count()?;
    let means = r.f64s(dim)?;
    let stds = r.f64s(dim)?;
    let constant = r.take(dim)?.to_vec();
    let c = r.f64()?;
    let tolerance = r.f64()?;
    let passes = r.u32()?;
    let converged_tag = r.u8()?;
    let kkt_violations = r.u32()?;
    let rows = r.count()?;
    let cols = r.count()?;
    let flat = r.f64s(rows.checked_mul(cols).ok_or(ModelStoreError::Truncated)?)?;
    let support_vectors = if cols == 0 {
        vec![Vec::new(); rows]
    } else {
        flat.chunks_exact(cols).map(<[f64]>::to_vec).collect()
    };
    let n_coefs = r.count()?;
    let dual_coefs = r.f64s(n_coefs)?;
    let bias = r.f64()?;
    Ok(RawModel {
        pipeline: PipelineConfig {
            feature,
            segment_len_s,
            min_segments,
            pooling,
        },
        kernel_tag,
        gamma,
        means,
        stds,
        constant,
        meta: TrainingMeta {
            c,
            tolerance,
            passes,
            converged: converged_tag == 1,
            kkt_violations,
        },
        converged_tag,
        support_vectors,
        dual_coefs,
        bias,
    })
}

fn build(raw: RawModel) -> Result<(SvmModel, PipelineConfig), ModelStoreError> {
    let invalid = |e: &dyn std::fmt::Display| ModelStoreError::InvalidContent(e.to_string());
    raw.pipeline.validate().map_err(|e| invalid(&e))?;
    let kernel = match raw.kernel_tag {
        KERNEL_LINEAR => KernelSpec::Linear,
        KERNEL_RBF => KernelSpec::Rbf { gamma: raw.gamma },
        other => return Err(invalid(&format!("unknown kernel tag {other}"))),
    };
    if raw.converged_tag > 1 || raw.constant.iter().any(|&b| b > 1) {
        return Err(invalid(&"boolean field out of range"));
    }
    let standardizer =
        Standardizer::from_parts(raw.means, raw.stds, raw.constant.into_iter().map(|b| b == 1).collect())
            .map_err(|e| invalid(&e))?;
    let svm = SvmModel::from_parts(
        kernel,
        standardizer,
        raw.support_vectors,
        raw.dual_coefs,
        raw.bias,
        raw.meta,
    )
    .map_err(|e| invalid(&e))?;
    if svm.dim() != raw.pipeline.feature_dim() {
        return Err(invalid(&format!(
            "model dimension {} does not match pipeline feature dimension {}",
            svm.dim(),
            raw.pipeline.feature_dim()
        )));
    }
    Ok((svm, raw.pipeline))
}

/// Validates magic and version, then the trailing digest, then the body.
///
/// The digest is checked before the body is parsed, so any corruption after
/// the version field surfaces as `DigestMismatch`.
pub fn decode_model(bytes: &[u8]) -> Result<ModelFile, ModelStoreError> {
    if bytes.len() >= 4 && bytes[..4] != MAGIC {
        return Err(ModelStoreError::BadMagic);
    }
    let mut r = Reader { bytes, pos: 0 };
    r.take(4)?;
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelStoreError::UnsupportedVersion(version));
    }
    if bytes.len() < expected_file_len(0, 0) {
        return Err(ModelStoreError::Truncated);
    }
    let body_end = bytes.len() - DIGEST_LEN;
    let stored = &bytes[body_end..];
    if Sha256::digest(&bytes[..body_end]).as_slice() != stored {
        return Err(ModelStoreError::DigestMismatch);
    }
    let raw = read_raw(&mut r)?;
    if r.pos != body_end {
        return Err(ModelStoreError::InvalidContent(format!(
            "body holds {} bytes but the layout implies {}",
            body_end, r.pos
        )));
    }
    let mut digest = [0u8; DIGEST_LEN];
    digest.copy_from_slice(stored);
    let (svm, pipeline) = build(raw)?;
    Ok(ModelFile { svm, pipeline, digest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label;
    use crate::svm::{fit_standardized, TrainConfig};

    fn small_model() -> (SvmModel, PipelineConfig) {
        let cfg = PipelineConfig::default();
        let dim = cfg.feature_dim();
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                (0..dim)
                    .map(|j| ((i * 7 + j * 3) as f64 * 0.37).sin() + (i % 2) as f64)
                    .collect()
            })
            .collect();
        let labels: Vec<Label> = (0..12)
            .map(|i| if i % 2 == 0 { Label::Normal } else { Label::Asphyxia })
            .collect();
        let model = fit_standardized(&rows, &labels, &KernelSpec::default_rbf(dim), &TrainConfig::default()).unwrap();
        (model, cfg)
    }

    #[test]
    fn config_block_length_matches_encoding() {
        let mut out = Vec::new();
        encode_pipeline_config(&mut out, &PipelineConfig::default());
        assert_eq!(out.len(), CONFIG_BLOCK_LEN);
    }

    #[test]
    fn file_size_formula() {
        let (model, cfg) = small_model();
        let bytes = encode_model(&model, &cfg);
        assert_eq!(bytes.len(), expected_file_len(model.n_support(), model.dim()));
    }

    #[test]
    fn roundtrip_and_determinism() {
        let (model, cfg) = small_model();
        let bytes = encode_model(&model, &cfg);
        assert_eq!(bytes, encode_model(&model, &cfg));
        let file = decode_model(&bytes).unwrap();
        assert_eq!(file.svm, model);
        assert_eq!(file.pipeline, cfg);
        assert_eq!(encode_model(&file.svm, &file.pipeline), bytes);
        assert_eq!(file.short_digest(), model_digest(&model, &cfg));
    }

    #[test]
    fn documented_offsets() {
        let (model, cfg) = small_model();
        let b = encode_model(&model, &cfg);
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let f64_at = |i: usize| f64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        let (d, s) = (model.dim(), model.n_support());
        assert_eq!(u32_at(8), 16_000);
        assert_eq!(f64_at(76), cfg.segment_len_s);
        assert_eq!(b[88], POOLING_MEAN_STD);
        assert_eq!(b[89], KERNEL_RBF);
        assert_eq!(f64_at(90), model.kernel().gamma());
        assert_eq!(u32_at(98) as usize, d);
        assert_eq!(f64_at(102 + 17 * d), model.meta().c);
        assert_eq!(u32_at(127 + 17 * d) as usize, s);
        assert_eq!(f64_at(139 + 17 * d + 8 * s * d + 8 * s), model.bias());
        assert_eq!(b.len(), 179 + 17 * d + 8 * s * d + 8 * s);
    }

    #[test]
    fn rejects_corruption() {
        let (model, cfg) = small_model();
        let bytes = encode_model(&model, &cfg);

        let mut flipped = bytes.clone();
        let i = bytes.len() - DIGEST_LEN - 20;
        flipped[i] ^= 0x01;
        assert!(matches!(decode_model(&flipped), Err(ModelStoreError::DigestMismatch)));

        assert!(matches!(
            decode_model(&bytes[..bytes.len() - 5]),
            Err(ModelStoreError::DigestMismatch)
        ));
        assert!(matches!(decode_model(&bytes[..50]), Err(ModelStoreError::Truncated)));
        assert!(matches!(decode_model(&bytes[..2]), Err(ModelStoreError::Truncated)));

        let mut magic = bytes.clone();
        magic[3] = b'0';
        assert!(matches!(decode_model(&magic), Err(ModelStoreError::BadMagic)));

        let mut version = bytes.clone();
        version[4] = 2;
        assert!(matches!(
            decode_model(&version),
            Err(ModelStoreError::UnsupportedVersion(2))
        ));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(decode_model(&trailing), Err(ModelStoreError::DigestMismatch)));
    }

    #[test]
    fn digest_covers_config() {
        let (model, cfg) = small_model();
        let mut other = cfg.clone();
        other.segment_len_s = 2.0;
        assert_ne!(model_digest(&model, &cfg), model_digest(&model, &other));
    }
}
