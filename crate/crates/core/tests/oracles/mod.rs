//! Reference implementations used only to check the library: direct
//! transforms, a grid-search QP and a KKT checker. Shared with the
//! acceptance suite of the app crate.
#![allow(dead_code)]

use std::f64::consts::PI;

use cryscreen::audio::AudioBuffer;
use cryscreen::label::Label;
use cryscreen::svm::{kernel_eval, KernelSpec, SmoSolution};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// O(N^2) DFT straight from the definition. The N roots of unity are
/// evaluated once each by `cos`/`sin` and indexed by `k t mod N`.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let roots: Vec<Complex64> = (0..n)
        .map(|j| {
            let ang = -2.0 * PI * j as f64 / n as f64;
            Complex64::new(ang.cos(), ang.sin())
        })
        .collect();
    (0..n)
        .map(|k| x.iter().enumerate().map(|(t, &v)| v * roots[(k * t) % n]).sum())
        .collect()
}

/// Unnormalized DCT-II by double loop with `cos` evaluated each time.
pub fn dct2_direct(e: &[f64]) -> Vec<f64> {
    let m = e.len() as f64;
    (0..e.len())
        .map(|k| {
            e.iter()
                .enumerate()
                .map(|(n, v)| v * (PI * k as f64 * (n as f64 + 0.5) / m).cos())
                .sum()
        })
        .collect()
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Largest element-wise error relative to the largest reference magnitude.
pub fn max_relative_error(got: &[Complex64], want: &[Complex64]) -> f64 {
    let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    got.iter().zip(want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
}

/// Bin with the most energy in a one-sided power spectrum.
pub fn peak_bin(power: &[f64]) -> usize {
    power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap()
}

pub fn dual_value(alphas: &[f64], gram: &[Vec<f64>], y: &[f64]) -> f64 {
    let mut quad = 0.0;
    for i in 0..alphas.len() {
        for j in 0..alphas.len() {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * gram[i][j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

pub fn gram(x: &[Vec<f64>], kernel: &KernelSpec) -> Vec<Vec<f64>> {
    x.iter()
        .map(|a| x.iter().map(|b| kernel_eval(kernel, a, b).unwrap()).collect())
        .collect()
}

/// Maximizes the dual of a 4-point problem whose labels are two negatives
/// followed by two positives. The equality constraint fixes the last
/// multiplier, leaving a 3-D box that is searched on successively finer
/// grids centred on the incumbent (the objective is concave, so the
/// refinement cannot leave the global basin).
pub fn brute_force_dual_4(gram: &[Vec<f64>], c: f64) -> (f64, [f64; 4]) {
    let y = [-1.0, -1.0, 1.0, 1.0];
    let mut best = (f64::NEG_INFINITY, [0.0; 4]);
    let mut centre = [c / 2.0; 3];
    let mut half = c / 2.0;
    for _ in 0..6 {
        let steps = 40;
        let h = 2.0 * half / steps as f64;
        for i in 0..=steps {
            let a1 = centre[0] - half + i as f64 * h;
            if !(0.0..=c).contains(&a1) {
                continue;
            }
            for j in 0..=steps {
                let a2 = centre[1] - half + j as f64 * h;
                if !(0.0..=c).contains(&a2) {
                    continue;
                }
                for k in 0..=steps {
                    let a3 = centre[2] - half + k as f64 * h;
                    let a4 = a1 + a2 - a3;
                    if !(0.0..=c).contains(&a3) || !(0.0..=c).contains(&a4) {
                        continue;
                    }
                    let a = [a1, a2, a3, a4];
                    let v = dual_value(&a, gram, &y);
                    if v > best.0 {
                        best = (v, a);
                    }
                }
            }
        }
        centre = [best.1[0], best.1[1], best.1[2]];
        half = 2.0 * h;
    }
    best
}

/// Worst KKT violation of a solution, in units of the margin `y f(x)`.
pub fn max_kkt_violation(sol: &SmoSolution, x: &[Vec<f64>], y: &[Label], kernel: &KernelSpec, c: f64) -> f64 {
    let bound_eps = 1e-9 * c.max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let f: f64 = x
            .iter()
            .zip(y)
            .zip(&sol.alphas)
            .map(|((xj, yj), aj)| aj * yj.sign() * kernel_eval(kernel, xj, &x[i]).unwrap())
            .sum::<f64>()
            + sol.bias;
        let m = y[i].sign() * f;
        let a = sol.alphas[i];
        let v = if a <= bound_eps {
            (1.0 - m).max(0.0)
        } else if a >= c - bound_eps {
            (m - 1.0).max(0.0)
        } else {
            (m - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Two overlapping Gaussian blobs in the plane.
pub fn random_blobs(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { Label::Normal } else { Label::Asphyxia };
        let c = label.sign() * 0.8;
        x.push(vec![c + rng.random_range(-1.5..1.5), c + rng.random_range(-1.5..1.5)]);
        y.push(label);
    }
    (x, y)
}

/// Non-silent buffer for gain tests. Amplitudes stay below 0.1 so gain 10
/// never clips. Gain invariance only holds while every mel band stays above
/// the log floor at gain 0.1; noise alone fades too deeply in the narrow low
/// bands after pre-emphasis, so the buffer also carries a comb of low tones.
pub fn comb_buffer(seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2_000..8_000);
    // Amplitude falls as 1/k to offset the pre-emphasis rise.
    let comb: Vec<(f64, f64, f64)> = (0..48)
        .map(|k| {
            let hz = 100.0 + 40.0 * k as f64;
            (hz, 0.012 / (1 + k) as f64, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / 16_000.0;
            let tones: f64 = comb
                .iter()
                .map(|(hz, amp, ph)| amp * (std::f64::consts::TAU * hz * t + ph).sin())
                .sum();
            tones + rng.random_range(-0.02..0.02)
        })
        .collect();
    AudioBuffer::new(samples, 16_000).unwrap()
}
