//! WAV decoding and waveform canonicalization.
//!
//! Everything downstream works on an [`AudioBuffer`]: mono, floating point
//! samples in `[-1, 1]` at a known rate. RIFF/WAVE with integer PCM (8, 16,
//! 24 or 32 bit) or IEEE float (32 or 64 bit) is the only accepted container.

use thiserror::Error;

/// Rate every recording is converted to before feature extraction.
pub const CANONICAL_RATE_HZ: u32 = 16_000;

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_IEEE_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AudioError {
    #[error("malformed WAV header: {0}")]
    MalformedHeader(String),
    #[error("unsupported WAV encoding (format tag {format_tag:#06x}, {bits} bits)")]
    UnsupportedEncoding { format_tag: u16, bits: u16 },
    #[error("WAV data chunk holds no sample frames")]
    EmptyData,
    #[error("channel {index} has {len} samples, expected {expected}")]
    LengthMismatch { index: usize, len: usize, expected: usize },
    #[error("no channels supplied")]
    NoChannels,
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("sample {index} = {value} lies outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("audio buffer is empty")]
    EmptyBuffer,
}

/// Decoded mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    /// Validating constructor; rejects a zero rate or any sample outside `[-1, 1]`.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        if sample_rate_hz == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, s)| !(-1.0..=1.0).contains(*s)) {
            return Err(AudioError::SampleOutOfRange { index, value });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Clamps every sample into `[-1, 1]` (NaN becomes 0) instead of rejecting.
    pub fn from_clamped(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        let samples = samples
            .into_iter()
            .map(|s| if s.is_nan() { 0.0 } else { s.clamp(-1.0, 1.0) })
            .collect();
        Self::new(samples, sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// First `seconds` of audio (the whole buffer if it is shorter).
    pub fn truncated(&self, seconds: f64) -> AudioBuffer {
        let n = ((seconds * self.sample_rate_hz as f64).floor() as usize).min(self.samples.len());
        AudioBuffer {
            samples: self.samples[..n].to_vec(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Every sample multiplied by `gain`, rejected if the result leaves `[-1, 1]`.
    pub fn scaled(&self, gain: f64) -> Result<AudioBuffer, AudioError> {
        AudioBuffer::new(self.samples.iter().map(|s| s * gain).collect(), self.sample_rate_hz)
    }
}

/// Format details of a parsed WAV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavInfo {
    pub channels: u16,
    pub bits_per_sample: u16,
    pub source_rate_hz: u32,
    pub num_frames: usize,
    pub is_float: bool,
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct FmtChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits: u16,
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, AudioError> {
    if body.len() < 16 {
        return Err(AudioError::MalformedHeader(format!(
            "fmt chunk is {} bytes, need at least 16",
            body.len()
        )));
    }
    let mut format_tag = read_u16(body, 0);
    let channels = read_u16(body, 2);
    let sample_rate = read_u32(body, 4);
    let block_align = read_u16(body, 12);
    let bits = read_u16(body, 14);
    if format_tag == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) subFormat GUID(16); the GUID
        // starts with the plain format tag.
        if body.len() < 40 {
            return Err(AudioError::MalformedHeader(
                "WAVE_FORMAT_EXTENSIBLE fmt chunk too short".into(),
            ));
        }
        format_tag = read_u16(body, 24);
    }
    if channels == 0 {
        return Err(AudioError::MalformedHeader("zero channels".into()));
    }
    if sample_rate == 0 {
        return Err(AudioError::MalformedHeader("zero sample rate".into()));
    }
    let supported = match format_tag {
        FORMAT_PCM => matches!(bits, 8 | 16 | 24 | 32),
        FORMAT_IEEE_FLOAT => matches!(bits, 32 | 64),
        _ => false,
    };
    if !supported {
        return Err(AudioError::UnsupportedEncoding { format_tag, bits });
    }
    if block_align as usize != channels as usize * (bits as usize / 8) {
        return Err(AudioError::MalformedHeader(format!(
            "block align {block_align} inconsistent with {channels} channels of {bits} bits"
        )));
    }
    Ok(FmtChunk {
        format_tag,
        channels,
        sample_rate,
        block_align,
        bits,
    })
}

fn decode_sample(fmt: &FmtChunk, b: &[u8]) -> f64 {
    match (fmt.format_tag, fmt.bits) {
        (FORMAT_PCM, 8) => (b[0] as f64 - 128.0) / 128.0,
        (FORMAT_PCM, 16) => i16::from_le_bytes([b[0], b[1]]) as f64 / 32_768.0,
        (FORMAT_PCM, 24) => {
            // Sign-extend by placing the three bytes in the top of an i32.
            let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        (FORMAT_PCM, 32) => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0,
        (FORMAT_IEEE_FLOAT, 32) => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        (FORMAT_IEEE_FLOAT, 64) => f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]),
        _ => unreachable!("format validated in parse_fmt"),
    }
}

/// Parses a RIFF/WAVE byte stream into its format and per-channel samples.
///
/// Unknown chunks are skipped. The `fmt ` chunk must precede `data`.
/// Float payloads are passed through unchanged (not clamped).
pub fn parse_wav(bytes: &[u8]) -> Result<(WavInfo, Vec<Vec<f64>>), AudioError> {
    if bytes.len() < 12 {
        return Err(AudioError::MalformedHeader("shorter than RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::MalformedHeader("missing RIFF/WAVE magic".into()));
    }

    let mut pos = 12;
    let mut fmt: Option<FmtChunk> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        match id {
            b"fmt " => {
                let end = body_start
                    .checked_add(size)
                    .filter(|&e| e <= bytes.len())
                    .ok_or_else(|| AudioError::MalformedHeader("truncated fmt chunk".into()))?;
                fmt = Some(parse_fmt(&bytes[body_start..end])?);
            }
            b"data" => {
                let fmt = fmt.ok_or_else(|| AudioError::MalformedHeader("data chunk before fmt chunk".into()))?;
                // Streaming writers leave the size as 0 or 0xFFFFFFFF; a size
                // past the end of the buffer is clipped to what is present.
                let available = bytes.len() - body_start;
                let data_len = if size == 0 || size > available { available } else { size };
                let data = &bytes[body_start..body_start + data_len];
                let frame_bytes = fmt.block_align as usize;
                let num_frames = data.len() / frame_bytes;
                if num_frames == 0 {
                    return Err(AudioError::EmptyData);
                }
                let sample_bytes = fmt.bits as usize / 8;
                let channels = fmt.channels as usize;
                let mut out = vec![Vec::with_capacity(num_frames); channels];
                for frame in data.chunks_exact(frame_bytes) {
                    for (ch, raw) in frame.chunks_exact(sample_bytes).enumerate() {
                        out[ch].push(decode_sample(&fmt, raw));
                    }
                }
                let info = WavInfo {
                    channels: fmt.channels,
                    bits_per_sample: fmt.bits,
                    source_rate_hz: fmt.sample_rate,
                    num_frames,
                    is_float: fmt.format_tag == FORMAT_IEEE_FLOAT,
                };
                return Ok((info, out));
            }
            _ => {}
        }
        // Chunks are padded to an even length.
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    Err(AudioError::MalformedHeader(if fmt.is_some() {
        "no data chunk".into()
    } else {
        "no fmt chunk".into()
    }))
}

/// Element-wise mean across channels.
pub fn to_mono(channels: &[Vec<f64>]) -> Result<Vec<f64>, AudioError> {
    let first = channels.first().ok_or(AudioError::NoChannels)?;
    let expected = first.len();
    if let Some((index, ch)) = channels.iter().enumerate().find(|(_, c)| c.len() != expected) {
        return Err(AudioError::LengthMismatch {
            index,
            len: ch.len(),
            expected,
        });
    }
    if channels.len() == 1 {
        return Ok(first.clone());
    }
    let n = channels.len() as f64;
    Ok((0..expected)
        .map(|i| channels.iter().map(|c| c[i]).sum::<f64>() / n)
        .collect())
}

/// Linear-interpolation resampler.
///
/// Output sample `n` is read at source position `n * source_rate / target_rate`;
/// the output holds `floor(len * target / source)` samples.
pub fn resample_linear(buf: &AudioBuffer, target_rate_hz: u32) -> Result<AudioBuffer, AudioError> {
    if target_rate_hz == 0 {
        return Err(AudioError::ZeroSampleRate);
    }
    if buf.is_empty() {
        return Err(AudioError::EmptyBuffer);
    }
    let src_rate = buf.sample_rate_hz as u64;
    let dst_rate = target_rate_hz as u64;
    if src_rate == dst_rate {
        return Ok(buf.clone());
    }
    let x = &buf.samples;
    let out_len = (x.len() as u64 * dst_rate / src_rate) as usize;
    let last = x.len() - 1;
    let samples = (0..out_len as u64)
        .map(|n| {
            // Integer position arithmetic keeps the grid exact.
            let num = n * src_rate;
            let i = (num / dst_rate) as usize;
            let frac = (num % dst_rate) as f64 / dst_rate as f64;
            if i >= last || frac == 0.0 {
                x[i.min(last)]
            } else {
                x[i] + (x[i + 1] - x[i]) * frac
            }
        })
        .collect();
    Ok(AudioBuffer {
        samples,
        sample_rate_hz: target_rate_hz,
    })
}

/// Decodes WAV bytes into a mono buffer at `target_rate_hz`.
///
/// Float payloads outside `[-1, 1]` are clamped.
pub fn decode_wav(bytes: &[u8], target_rate_hz: u32) -> Result<AudioBuffer, AudioError> {
    let (info, channels) = parse_wav(bytes)?;
    let mono = to_mono(&channels)?;
    let buf = AudioBuffer::from_clamped(mono, info.source_rate_hz)?;
    resample_linear(&buf, target_rate_hz)
}

fn riff_header(out: &mut Vec<u8>, format_tag: u16, channels: u16, rate: u32, bits: u16, data_len: u32) {
    let block_align = channels * (bits / 8);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format_tag.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
}

/// Encodes a mono buffer as 16-bit PCM WAV (44-byte header).
///
/// Samples are scaled by 32768, rounded, and saturated to the i16 range.
pub fn encode_wav_pcm16(buf: &AudioBuffer) -> Vec<u8> {
    let data_len = (buf.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    riff_header(&mut out, FORMAT_PCM, 1, buf.sample_rate_hz, 16, data_len);
    for &s in &buf.samples {
        let v = (s * 32_768.0).round().clamp(-32_768.0, 32_767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Encodes a mono buffer as 32-bit IEEE float WAV.
pub fn encode_wav_f32(buf: &AudioBuffer) -> Vec<u8> {
    let data_len = (buf.len() * 4) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    riff_header(&mut out, FORMAT_IEEE_FLOAT, 1, buf.sample_rate_hz, 32, data_len);
    for &s in &buf.samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}
