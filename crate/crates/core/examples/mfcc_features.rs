//! Extracts the 13-coefficient MFCC matrix of a recording and the pooled
//! 26-dimensional segment vector the classifier sees.
//!
//! cargo run -p cryscreen --example mfcc_features -- [input.wav]

use cryscreen::audio::{decode_wav, CANONICAL_RATE_HZ};
use cryscreen::evaluation::{synthesize_recording, SynthParams};
use cryscreen::features::{hz_to_mel, MfccExtractor};
use cryscreen::pipeline::{pool, Pooling};
use cryscreen::FeatureConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let buf = match std::env::args().nth(1) {
        Some(path) => decode_wav(&std::fs::read(path)?, CANONICAL_RATE_HZ)?,
        None => synthesize_recording(450.0, &SynthParams::new(1, 1, 3), 3)?,
    };
    let cfg = FeatureConfig::default();
    let extractor = MfccExtractor::new(&cfg)?;
    let fb = extractor.filterbank();
    println!(
        "{} mel filters over {}..{} Hz ({:.1}..{:.1} mel), FFT size {}",
        fb.n_filters(),
        cfg.fmin_hz,
        cfg.fmax_hz,
        hz_to_mel(cfg.fmin_hz),
        hz_to_mel(cfg.fmax_hz),
        cfg.fft_size()
    );

    let m = extractor.extract(&buf)?;
    println!(
        "{} frames x {} coefficients (config {})",
        m.n_frames(),
        m.n_coeffs(),
        m.config_digest
    );
    let first: Vec<String> = m.vectors[0].iter().map(|c| format!("{c:.2}")).collect();
    println!("frame 0: [{}]", first.join(", "));

    let pooled = pool(&m, Pooling::MeanStd);
    let (mean, std) = pooled.split_at(m.n_coeffs());
    println!("pooled mean: {:.2?}", mean);
    println!("pooled std:  {:.2?}", std);
    Ok(())
}
