//! `key = value` training configuration.
//!
//! Keys are the field names of the feature, pipeline and training configs,
//! plus `kernel` (`rbf` or `linear`), `gamma`, `split_fraction` and
//! `cv_folds`. `#` starts a comment. Setting `kernel`, `gamma` or `c` pins
//! the hyperparameters and skips cross-validation.

use std::str::FromStr;

use cryscreen::pipeline::Pooling;
use cryscreen::{KernelSpec, PipelineConfig, TrainConfig};

use crate::error::AppError;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub pipeline: PipelineConfig,
    pub train: TrainConfig,
    pub kernel: Option<String>,
    pub gamma: Option<f64>,
    pub pinned: bool,
    pub split_fraction: f64,
    pub cv_folds: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            train: TrainConfig::default(),
            kernel: None,
            gamma: None,
            pinned: false,
            split_fraction: 0.8,
            cv_folds: 5,
        }
    }
}

impl TrainSettings {
    /// The pinned kernel; unset parts fall back to RBF with `gamma = 1 / dim`.
    pub fn kernel_spec(&self) -> Result<KernelSpec, AppError> {
        let dim = self.pipeline.feature_dim();
        let spec = match self.kernel.as_deref() {
            None | Some("rbf") => match self.gamma {
                Some(gamma) => KernelSpec::Rbf { gamma },
                None => KernelSpec::default_rbf(dim),
            },
            Some("linear") => KernelSpec::Linear,
            Some(other) => return Err(AppError::Config(format!("kernel must be rbf or linear, got {other:?}"))),
        };
        spec.validate().map_err(|e| AppError::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        self.pipeline.validate().map_err(|e| AppError::Config(e.to_string()))?;
        self.train.validate().map_err(|e| AppError::Config(e.to_string()))?;
        self.kernel_spec()?;
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(AppError::Config(format!(
                "split_fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if self.cv_folds < 2 {
            return Err(AppError::Config("cv_folds must be at least 2".into()));
        }
        Ok(())
    }
}

fn value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T, AppError> {
    raw.parse()
        .map_err(|_| AppError::Config(format!("line {line}: bad value {raw:?} for {key}")))
}

/// Parses and validates a config file body.
pub fn parse(text: &str) -> Result<TrainSettings, AppError> {
    let mut s = TrainSettings::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| AppError::Config(format!("line {line_no}: expected `key = value`")))?;
        let f = &mut s.pipeline.feature;
        match key {
            "sample_rate_hz" => f.sample_rate_hz = value(key, val, line_no)?,
            "frame_len_ms" => f.frame_len_ms = value(key, val, line_no)?,
            "hop_len_ms" => f.hop_len_ms = value(key, val, line_no)?,
            "pre_emphasis_alpha" => f.pre_emphasis_alpha = value(key, val, line_no)?,
            "n_mel_filters" => f.n_mel_filters = value(key, val, line_no)?,
            "n_mfcc" => f.n_mfcc = value(key, val, line_no)?,
            "fmin_hz" => f.fmin_hz = value(key, val, line_no)?,
            "fmax_hz" => f.fmax_hz = value(key, val, line_no)?,
            "log_floor" => f.log_floor = value(key, val, line_no)?,
            "trim_threshold" => f.trim_threshold = value(key, val, line_no)?,
            "segment_len_s" => s.pipeline.segment_len_s = value(key, val, line_no)?,
            "min_segments" => s.pipeline.min_segments = value(key, val, line_no)?,
            "pooling" => {
                s.pipeline.pooling = match val {
                    "mean_std" => Pooling::MeanStd,
                    _ => return Err(AppError::Config(format!("line {line_no}: pooling must be mean_std"))),
                }
            }
            "c" | "C" => {
                s.train.c = value(key, val, line_no)?;
                s.pinned = true;
            }
            "tolerance" => s.train.tolerance = value(key, val, line_no)?,
            "max_passes" => s.train.max_passes = value(key, val, line_no)?,
            "seed" => s.train.seed = value(key, val, line_no)?,
            "kernel" => {
                s.kernel = Some(val.to_ascii_lowercase());
                s.pinned = true;
            }
            "gamma" => {
                s.gamma = Some(value(key, val, line_no)?);
                s.pinned = true;
            }
            "split_fraction" => s.split_fraction = value(key, val, line_no)?,
            "cv_folds" => s.cv_folds = value(key, val, line_no)?,
            other => {
                return Err(AppError::Config(format!(
                    "line {line_no}: unknown config key {other:?}"
                )))
            }
        }
    }
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(parse("# nothing\n\n").unwrap(), TrainSettings::default());
    }

    #[test]
    fn keys_and_pinning() {
        let s = parse("segment_len_s = 0.5\nC = 10 # stiffer\nkernel = linear\nseed=3").unwrap();
        assert_eq!(s.pipeline.segment_len_s, 0.5);
        assert_eq!(s.train.c, 10.0);
        assert_eq!(s.train.seed, 3);
        assert!(s.pinned);
        assert_eq!(s.kernel_spec().unwrap(), KernelSpec::Linear);
        assert!(!parse("seed = 1").unwrap().pinned);
    }

    #[test]
    fn errors_are_config_errors() {
        for body in [
            "segment_len_s = 0",
            "frobnicate = 1",
            "n_mfcc = lots",
            "no equals sign",
            "kernel = poly",
        ] {
            let e = parse(body).unwrap_err();
            assert_eq!(e.exit_code(), 4, "{body}");
        }
        assert!(parse("frobnicate = 1").unwrap_err().to_string().contains("frobnicate"));
    }
}
