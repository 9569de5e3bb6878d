mod oracles;

use cryscreen::features::{extract_mfcc, FeatureConfig};
use cryscreen::pipeline::{pool, Pooling};
use oracles::comb_buffer;

/// Trimming is disabled so that gain cannot move the trim points.
fn no_trim() -> FeatureConfig {
    FeatureConfig {
        trim_threshold: 0.0,
        ..FeatureConfig::default()
    }
}

#[test]
fn gain_only_moves_c0() {
    let cfg = no_trim();
    for seed in 0..50 {
        let buf = comb_buffer(seed);
        let base = extract_mfcc(&buf, &cfg).unwrap();
        for g in [0.1, 2.0, 10.0] {
            let scaled = extract_mfcc(&buf.scaled(g).unwrap(), &cfg).unwrap();
            let shift = cfg.n_mel_filters as f64 * (g * g).ln();
            for (a, b) in base.vectors.iter().zip(&scaled.vectors) {
                assert!(
                    (b[0] - a[0] - shift).abs() < 1e-6,
                    "seed {seed} gain {g}: {} vs {shift}",
                    b[0] - a[0]
                );
                for k in 1..13 {
                    assert!((b[k] - a[k]).abs() < 1e-6, "seed {seed} gain {g} c{k}");
                }
            }
        }
    }
}

#[test]
fn pooled_mean_matches_the_csv_dump() {
    let buf = comb_buffer(99);
    let m = extract_mfcc(&buf, &FeatureConfig::default()).unwrap();
    let csv = m.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 13);
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), m.n_frames());
    let pooled = pool(&m, Pooling::MeanStd);
    assert_eq!(pooled.len(), 26);
    for k in 0..13 {
        let mean = rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64;
        assert!((pooled[k] - mean).abs() <= 1e-9 * mean.abs().max(1.0));
    }
}
