//! Decodes a WAV file (or a generated 44.1 kHz stereo tone) to the canonical
//! 16 kHz mono buffer and re-encodes it as PCM16 and float32.
//!
//! cargo run -p cryscreen --example wav_io -- [input.wav]

use std::f64::consts::TAU;

use cryscreen::audio::{decode_wav, encode_wav_f32, encode_wav_pcm16, parse_wav, CANONICAL_RATE_HZ};
use cryscreen::AudioBuffer;

fn stereo_tone() -> Vec<u8> {
    // Interleaved 16-bit stereo at 44.1 kHz, built by hand.
    let rate = 44_100u32;
    let frames: Vec<i16> = (0..rate)
        .flat_map(|i| {
            let t = i as f64 / rate as f64;
            let l = (0.4 * (TAU * 440.0 * t).sin() * 32767.0) as i16;
            let r = (0.2 * (TAU * 660.0 * t).sin() * 32767.0) as i16;
            [l, r]
        })
        .collect();
    let data_len = (frames.len() * 2) as u32;
    let mut b = Vec::new();
    b.extend_from_slice(b"RIFF");
    b.extend_from_slice(&(36 + data_len).to_le_bytes());
    b.extend_from_slice(b"WAVEfmt ");
    b.extend_from_slice(&16u32.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&2u16.to_le_bytes());
    b.extend_from_slice(&rate.to_le_bytes());
    b.extend_from_slice(&(rate * 4).to_le_bytes());
    b.extend_from_slice(&4u16.to_le_bytes());
    b.extend_from_slice(&16u16.to_le_bytes());
    b.extend_from_slice(b"data");
    b.extend_from_slice(&data_len.to_le_bytes());
    frames.iter().for_each(|s| b.extend_from_slice(&s.to_le_bytes()));
    b
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bytes = match std::env::args().nth(1) {
        Some(path) => std::fs::read(path)?,
        None => stereo_tone(),
    };
    let (info, channels) = parse_wav(&bytes)?;
    println!(
        "source: {} ch, {} bit{}, {} Hz, {} frames",
        info.channels,
        info.bits_per_sample,
        if info.is_float { " float" } else { "" },
        info.source_rate_hz,
        info.num_frames
    );
    let peak = channels.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("source peak {peak:.4}");

    let buf: AudioBuffer = decode_wav(&bytes, CANONICAL_RATE_HZ)?;
    println!(
        "canonical: {} samples at {} Hz ({:.3} s)",
        buf.len(),
        buf.sample_rate_hz(),
        buf.duration_seconds()
    );

    let pcm = encode_wav_pcm16(&buf);
    let float = encode_wav_f32(&buf);
    let back = decode_wav(&pcm, CANONICAL_RATE_HZ)?;
    let err = buf
        .samples()
        .iter()
        .zip(back.samples())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!(
        "pcm16 {} bytes, float32 {} bytes, pcm16 round-trip error {err:.2e}",
        pcm.len(),
        float.len()
    );
    Ok(())
}
