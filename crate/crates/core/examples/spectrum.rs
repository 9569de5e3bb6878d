//! Frames a two-tone signal, applies the Hann window and prints the
//! strongest bins of the one-sided power spectrum of the first frame.
//!
//! cargo run -p cryscreen --example spectrum

use std::f64::consts::TAU;

use cryscreen::dsp::{frame_power_spectrum, frame_signal, hann_window, pre_emphasis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rate = 16_000.0;
    let x: Vec<f64> = (0..16_000)
        .map(|i| {
            let t = i as f64 / rate;
            0.5 * (TAU * 1_000.0 * t).sin() + 0.1 * (TAU * 3_000.0 * t).sin()
        })
        .collect();

    let frames = frame_signal(&x, 400, 160)?;
    println!(
        "{} frames of {} samples, hop {}",
        frames.len(),
        frames.frame_len(),
        frames.hop_len()
    );

    for (name, signal) in [("raw", x.clone()), ("pre-emphasized", pre_emphasis(&x, 0.97))] {
        let framed = frame_signal(&signal, 400, 160)?;
        let power = frame_power_spectrum(&hann_window(&framed.frames()[0]), 512)?;
        let mut bins: Vec<(usize, f64)> = power.iter().copied().enumerate().collect();
        bins.sort_by(|a, b| b.1.total_cmp(&a.1));
        println!("{name}:");
        for (k, p) in bins.iter().take(4) {
            println!("  bin {k:>3} ({:>6.1} Hz)  power {p:.3e}", *k as f64 * rate / 512.0);
        }
    }
    Ok(())
}
