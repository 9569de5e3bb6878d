//! Time-domain pre-processing and spectral primitives.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::audio::AudioBuffer;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("every sample is below the silence threshold")]
    EmptyAfterTrim,
    #[error("input of {len} samples is shorter than one frame of {frame_len}")]
    InputTooShort { len: usize, frame_len: usize },
    #[error("FFT length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Strips leading and trailing runs where `|sample| < threshold`.
pub fn trim_silence(buf: &AudioBuffer, threshold: f64) -> Result<AudioBuffer, DspError> {
    if !(threshold >= 0.0) {
        return Err(DspError::InvalidParameter("threshold must be >= 0"));
    }
    let x = buf.samples();
    let loud = |s: &f64| s.abs() >= threshold;
    let start = x.iter().position(loud).ok_or(DspError::EmptyAfterTrim)?;
    let end = x.iter().rposition(loud).expect("a loud sample exists") + 1;
    Ok(AudioBuffer::new(x[start..end].to_vec(), buf.sample_rate_hz()).expect("subslice of a valid buffer"))
}

/// First-order high-pass: `y[n] = x[n] - alpha * x[n-1]`, `y[0] = x[0]`.
pub fn pre_emphasis(x: &[f64], alpha: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    if let Some(&first) = x.first() {
        y.push(first);
    }
    y.extend(x.windows(2).map(|w| w[1] - alpha * w[0]));
    y
}

/// Overlapping fixed-length frames cut from a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    frames: Vec<Vec<f64>>,
    frame_len: usize,
    hop_len: usize,
}

impl FrameMatrix {
    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop_len(&self) -> usize {
        self.hop_len
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Number of whole frames: `1 + (n - frame_len) / hop_len` for `n >= frame_len`.
pub fn frame_count(n: usize, frame_len: usize, hop_len: usize) -> usize {
    if n < frame_len || frame_len == 0 || hop_len == 0 {
        0
    } else {
        1 + (n - frame_len) / hop_len
    }
}

/// Frame `i` covers `x[i*hop .. i*hop + frame_len]`; a short tail is dropped.
pub fn frame_signal(x: &[f64], frame_len: usize, hop_len: usize) -> Result<FrameMatrix, DspError> {
    if frame_len == 0 || hop_len == 0 {
        return Err(DspError::InvalidParameter("frame and hop lengths must be >= 1"));
    }
    if x.len() < frame_len {
        return Err(DspError::InputTooShort {
            len: x.len(),
            frame_len,
        });
    }
    let frames = (0..frame_count(x.len(), frame_len, hop_len))
        .map(|i| x[i * hop_len..i * hop_len + frame_len].to_vec())
        .collect();
    Ok(FrameMatrix {
        frames,
        frame_len,
        hop_len,
    })
}

/// Periodic Hann coefficients `0.5 * (1 - cos(2 pi n / len))`.
pub fn hann_coefficients(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / len as f64).cos()))
        .collect()
}

/// Multiplies a frame by the periodic Hann window of its own length.
pub fn hann_window(frame: &[f64]) -> Vec<f64> {
    frame
        .iter()
        .zip(hann_coefficients(frame.len()))
        .map(|(x, w)| x * w)
        .collect()
}

/// In-place iterative radix-2 FFT (decimation in time).
pub fn fft_in_place(buf: &mut [Complex64]) -> Result<(), DspError> {
    let n = buf.len();
    if !n.is_power_of_two() {
        return Err(DspError::NotPowerOfTwo(n));
    }
    if n <= 1 {
        return Ok(());
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    // Twiddles for the largest stage; smaller stages stride through them.
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
        .collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let t = twiddles[k * stride] * buf[start + k + half];
                let u = buf[start + k];
                buf[start + k] = u + t;
                buf[start + k + half] = u - t;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// Forward DFT `X[k] = sum_n x[n] exp(-2 pi i k n / N)` for power-of-two `N`.
pub fn fft_radix2(x: &[Complex64]) -> Result<Vec<Complex64>, DspError> {
    let mut out = x.to_vec();
    fft_in_place(&mut out)?;
    Ok(out)
}

/// `P[k] = |X[k]|^2 / N` for `k = 0..=N/2`.
pub fn power_spectrum(spectrum: &[Complex64]) -> Result<Vec<f64>, DspError> {
    let n = spectrum.len();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(DspError::InvalidParameter("spectrum length must be even"));
    }
    Ok(spectrum[..=n / 2].iter().map(|c| c.norm_sqr() / n as f64).collect())
}

/// Zero-pads a real frame to `fft_size` and returns its one-sided power spectrum.
pub fn frame_power_spectrum(frame: &[f64], fft_size: usize) -> Result<Vec<f64>, DspError> {
    if frame.len() > fft_size {
        return Err(DspError::InvalidParameter("frame longer than FFT size"));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for (b, &x) in buf.iter_mut().zip(frame) {
        b.re = x;
    }
    fft_in_place(&mut buf)?;
    power_spectrum(&buf)
}
