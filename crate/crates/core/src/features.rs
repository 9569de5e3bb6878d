//! MFCC feature extraction.
//!
//! trim -> pre-emphasis -> frame -> periodic Hann -> FFT -> power spectrum
//! -> triangular mel filterbank -> natural log -> unnormalized DCT-II,
//! keeping the first `n_mfcc` coefficients of every frame.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioBuffer, CANONICAL_RATE_HZ};
use crate::dsp::{self, DspError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("invalid feature config: {0}")]
    InvalidConfig(String),
    #[error("mel filter {index} collapses: edges snap to the same FFT bin (FFT size too small)")]
    DegenerateFilter { index: usize },
    #[error("power spectrum has {got} bins, filterbank expects {expected}")]
    SpectrumLength { got: usize, expected: usize },
    #[error("signal is silent; SNR is undefined")]
    SilentSignal,
    #[error("audio at {got} Hz, feature config expects {expected} Hz")]
    SampleRateMismatch { got: u32, expected: u32 },
}

/// All front-end hyperparameters. Travels with every trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub sample_rate_hz: u32,
    pub frame_len_ms: f64,
    pub hop_len_ms: f64,
    pub pre_emphasis_alpha: f64,
    pub n_mel_filters: usize,
    pub n_mfcc: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub log_floor: f64,
    pub trim_threshold: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: CANONICAL_RATE_HZ,
            frame_len_ms: 25.0,
            hop_len_ms: 10.0,
            pre_emphasis_alpha: 0.97,
            n_mel_filters: 40,
            n_mfcc: 13,
            fmin_hz: 50.0,
            fmax_hz: 8_000.0,
            log_floor: 1e-10,
            trim_threshold: 0.02,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |msg: String| Err(FeatureError::InvalidConfig(msg));
        if self.sample_rate_hz == 0 {
            return bad("sample_rate_hz must be positive".into());
        }
        let nyquist = self.sample_rate_hz as f64 / 2.0;
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < self.fmax_hz && self.fmax_hz <= nyquist) {
            return bad(format!(
                "need 0 <= fmin_hz < fmax_hz <= {nyquist}, got fmin_hz = {}, fmax_hz = {}",
                self.fmin_hz, self.fmax_hz
            ));
        }
        if self.n_mel_filters == 0 || self.n_mfcc == 0 || self.n_mfcc > self.n_mel_filters {
            return bad(format!(
                "need 1 <= n_mfcc <= n_mel_filters, got n_mfcc = {}, n_mel_filters = {}",
                self.n_mfcc, self.n_mel_filters
            ));
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be > 0".into());
        }
        if !(0.0..1.0).contains(&self.pre_emphasis_alpha) {
            return bad("pre_emphasis_alpha must lie in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.trim_threshold) {
            return bad("trim_threshold must lie in [0, 1]".into());
        }
        if self.frame_len_samples() < 2 || self.hop_len_samples() < 1 {
            return bad("frame must span >= 2 samples and hop >= 1 sample".into());
        }
        Ok(())
    }

    pub fn frame_len_samples(&self) -> usize {
        ms_to_samples(self.frame_len_ms, self.sample_rate_hz)
    }

    pub fn hop_len_samples(&self) -> usize {
        ms_to_samples(self.hop_len_ms, self.sample_rate_hz)
    }

    /// Next power of two at or above the frame length.
    pub fn fft_size(&self) -> usize {
        self.frame_len_samples().next_power_of_two()
    }

    /// Content hash of the canonical binary encoding, first 8 hex chars.
    pub fn digest(&self) -> String {
        let mut bytes = Vec::new();
        crate::model_store::encode_feature_config(&mut bytes, self);
        crate::model_store::hash_short(&bytes)
    }
}

fn ms_to_samples(ms: f64, rate: u32) -> usize {
    if !(ms > 0.0) {
        return 0;
    }
    (ms * rate as f64 / 1000.0).round() as usize
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters on the one-sided power spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Vec<Vec<f64>>,
    center_freqs_hz: Vec<f64>,
    // (first, last) nonzero-capable bin of each row, inclusive.
    spans: Vec<(usize, usize)>,
}

impl MelFilterbank {
    /// Edges are spaced uniformly in mel over `[fmin, fmax]` and snapped to the
    /// nearest FFT bin; filter `i` rises over edges `i..i+1` and falls over
    /// `i+1..i+2`, peaking at exactly 1.
    pub fn build(cfg: &FeatureConfig, fft_size: usize) -> Result<Self, FeatureError> {
        cfg.validate()?;
        if !fft_size.is_power_of_two() || fft_size < 2 {
            return Err(DspError::NotPowerOfTwo(fft_size).into());
        }
        let n_bins = fft_size / 2 + 1;
        let rate = cfg.sample_rate_hz as f64;
        let mel_lo = hz_to_mel(cfg.fmin_hz);
        let mel_hi = hz_to_mel(cfg.fmax_hz);
        let n_edges = cfg.n_mel_filters + 2;
        let bins: Vec<usize> = (0..n_edges)
            .map(|i| {
                let mel = mel_lo + (mel_hi - mel_lo) * i as f64 / (n_edges - 1) as f64;
                let bin = (mel_to_hz(mel) * fft_size as f64 / rate).round() as usize;
                bin.min(n_bins - 1)
            })
            .collect();
        if let Some(i) = bins.windows(2).position(|w| w[1] <= w[0]) {
            return Err(FeatureError::DegenerateFilter {
                index: i.saturating_sub(1).min(cfg.n_mel_filters - 1),
            });
        }

        let mut weights = Vec::with_capacity(cfg.n_mel_filters);
        let mut spans = Vec::with_capacity(cfg.n_mel_filters);
        let mut center_freqs_hz = Vec::with_capacity(cfg.n_mel_filters);
        for edge in bins.windows(3) {
            let (left, center, right) = (edge[0], edge[1], edge[2]);
            let mut row = vec![0.0; n_bins];
            for (k, w) in row.iter_mut().enumerate().take(right + 1).skip(left) {
                *w = if k <= center {
                    (k - left) as f64 / (center - left) as f64
                } else {
                    (right - k) as f64 / (right - center) as f64
                };
            }
            weights.push(row);
            spans.push((left, right));
            center_freqs_hz.push(center as f64 * rate / fft_size as f64);
        }
        Ok(Self {
            weights,
            center_freqs_hz,
            spans,
        })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn center_freqs_hz(&self) -> &[f64] {
        &self.center_freqs_hz
    }

    pub fn n_filters(&self) -> usize {
        self.weights.len()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Row-by-row dot product with a power spectrum.
    pub fn apply(&self, power: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if power.len() != self.n_bins() {
            return Err(FeatureError::SpectrumLength {
                got: power.len(),
                expected: self.n_bins(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.spans)
            .map(|(row, &(lo, hi))| (lo..=hi).map(|k| row[k] * power[k]).sum())
            .collect())
    }
}

/// `e[i] = ln(max(row_i . P, log_floor))`.
pub fn log_mel_energies(power: &[f64], bank: &MelFilterbank, log_floor: f64) -> Result<Vec<f64>, FeatureError> {
    Ok(bank.apply(power)?.into_iter().map(|e| e.max(log_floor).ln()).collect())
}

/// Unnormalized DCT-II with a precomputed quarter-wave cosine table.
///
/// `cos(pi k (n + 1/2) / M) = table[k (2n + 1) mod 4M]` with
/// `table[j] = cos(pi j / 2M)`.
#[derive(Debug, Clone)]
pub struct Dct2 {
    len: usize,
    table: Vec<f64>,
}

impl Dct2 {
    pub fn new(len: usize) -> Self {
        let period = 4 * len;
        let table = (0..period).map(|j| (PI * j as f64 / (2 * len) as f64).cos()).collect();
        Self { len, table }
    }

    /// First `n_out` coefficients of the transform of `e` (`e.len()` must equal `len`).
    pub fn transform(&self, e: &[f64], n_out: usize) -> Vec<f64> {
        assert_eq!(e.len(), self.len, "DCT length mismatch");
        let period = 4 * self.len;
        (0..n_out.min(self.len))
            .map(|k| {
                e.iter()
                    .enumerate()
                    .map(|(n, &v)| v * self.table[(k * (2 * n + 1)) % period])
                    .sum()
            })
            .collect()
    }
}

/// `c[k] = sum_n e[n] cos(pi k (n + 0.5) / M)`.
pub fn dct2(e: &[f64]) -> Vec<f64> {
    if e.is_empty() {
        return Vec::new();
    }
    Dct2::new(e.len()).transform(e, e.len())
}

/// Per-frame coefficient vectors plus the digest of the config that made them.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    pub vectors: Vec<Vec<f64>>,
    pub config_digest: String,
}

impl MfccMatrix {
    pub fn n_frames(&self) -> usize {
        self.vectors.len()
    }

    pub fn n_coeffs(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    /// CSV with a `c0..c{n-1}` header row and one row per frame.
    pub fn to_csv(&self) -> String {
        let n = self.n_coeffs();
        let mut out = (0..n).map(|i| format!("c{i}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        for v in &self.vectors {
            let row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Reusable extractor: filterbank, window and DCT table built once.
#[derive(Debug, Clone)]
pub struct MfccExtractor {
    cfg: FeatureConfig,
    bank: MelFilterbank,
    window: Vec<f64>,
    dct: Dct2,
    digest: String,
}

impl MfccExtractor {
    pub fn new(cfg: &FeatureConfig) -> Result<Self, FeatureError> {
        cfg.validate()?;
        let bank = MelFilterbank::build(cfg, cfg.fft_size())?;
        Ok(Self {
            window: dsp::hann_coefficients(cfg.frame_len_samples()),
            dct: Dct2::new(cfg.n_mel_filters),
            digest: cfg.digest(),
            bank,
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.bank
    }

    /// Coefficients of one frame of exactly `frame_len_samples` samples.
    pub fn frame_coefficients(&self, frame: &[f64]) -> Result<Vec<f64>, FeatureError> {
        let windowed: Vec<f64> = frame.iter().zip(&self.window).map(|(x, w)| x * w).collect();
        let power = dsp::frame_power_spectrum(&windowed, self.cfg.fft_size())?;
        let energies = log_mel_energies(&power, &self.bank, self.cfg.log_floor)?;
        Ok(self.dct.transform(&energies, self.cfg.n_mfcc))
    }

    pub fn extract(&self, buf: &AudioBuffer) -> Result<MfccMatrix, FeatureError> {
        if buf.sample_rate_hz() != self.cfg.sample_rate_hz {
            return Err(FeatureError::SampleRateMismatch {
                got: buf.sample_rate_hz(),
                expected: self.cfg.sample_rate_hz,
            });
        }
        let trimmed = dsp::trim_silence(buf, self.cfg.trim_threshold)?;
        let emphasized = dsp::pre_emphasis(trimmed.samples(), self.cfg.pre_emphasis_alpha);
        let frames = dsp::frame_signal(&emphasized, self.cfg.frame_len_samples(), self.cfg.hop_len_samples())?;
        let vectors = frames
            .frames()
            .iter()
            .map(|f| self.frame_coefficients(f))
            .collect::<Result<_, _>>()?;
        Ok(MfccMatrix {
            vectors,
            config_digest: self.digest.clone(),
        })
    }
}

/// One-shot MFCC extraction. Prefer [`MfccExtractor`] for repeated calls.
pub fn extract_mfcc(buf: &AudioBuffer, cfg: &FeatureConfig) -> Result<MfccMatrix, FeatureError> {
    MfccExtractor::new(cfg)?.extract(buf)
}

fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }
}

/// Zero-mean Gaussian noise of `len` samples whose empirical mean power is exactly `power`.
pub fn white_noise(len: usize, power: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
    if len == 0 {
        return noise;
    }
    let mean = noise.iter().sum::<f64>() / len as f64;
    noise.iter_mut().for_each(|v| *v -= mean);
    let measured = mean_power(&noise);
    if measured > 0.0 {
        let scale = (power / measured).sqrt();
        noise.iter_mut().for_each(|v| *v *= scale);
    }
    noise
}

/// Adds white noise at `snr_db` relative to the signal's mean power.
///
/// `f64::INFINITY` means no noise. Output is clipped to `[-1, 1]`.
pub fn add_noise(buf: &AudioBuffer, snr_db: f64, seed: u64) -> Result<AudioBuffer, FeatureError> {
    let signal_power = mean_power(buf.samples());
    if signal_power == 0.0 {
        return Err(FeatureError::SilentSignal);
    }
    if snr_db == f64::INFINITY {
        return Ok(buf.clone());
    }
    if snr_db.is_nan() {
        return Err(FeatureError::InvalidConfig("snr_db is NaN".into()));
    }
    let noise_power = signal_power / 10f64.powf(snr_db / 10.0);
    let noise = white_noise(buf.len(), noise_power, seed);
    let mixed = buf.samples().iter().zip(noise).map(|(s, n)| s + n).collect();
    Ok(AudioBuffer::from_clamped(mixed, buf.sample_rate_hz()).expect("rate already valid"))
}
