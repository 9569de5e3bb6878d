//! Generates a synthetic two-class corpus, trains on 80% of the subjects and
//! scores the held-out 20%, then runs the record-length and noise sweeps.
//!
//! cargo run -p cryscreen --example synthetic_study -- [out_dir]

use std::time::Instant;

use cryscreen::audio::CANONICAL_RATE_HZ;
use cryscreen::evaluation::{
    generate_synthetic_corpus, load_audio, noise_robustness_eval, record_length_sweep, split_by_subject,
    train_and_evaluate, GridCell, SynthParams,
};
use cryscreen::{Diagnoser, KernelSpec, PipelineConfig, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| tmp.path().to_path_buf());
    let started = Instant::now();

    let corpus = generate_synthetic_corpus(&out, &SynthParams::new(20, 3, 42))?;
    println!("wrote {} recordings to {}", corpus.entries.len(), out.display());
    let corpus = load_audio(corpus, CANONICAL_RATE_HZ)?;

    let cfg = PipelineConfig::default();
    let cell = GridCell {
        kernel: KernelSpec::default_rbf(cfg.feature_dim()),
        train: TrainConfig::default(),
    };
    let split = split_by_subject(corpus.entries(), 0.8, 42)?;
    let (model, report) = train_and_evaluate(&corpus, &cfg, &cell, &split)?;
    println!(
        "{} support vectors, converged={}",
        model.n_support(),
        model.meta().converged
    );
    print!("{}", report.to_table());

    let diagnoser = Diagnoser::new(model, cfg)?;
    let test = split.test_indices(corpus.entries());
    for row in record_length_sweep(&diagnoser, &corpus, &test, &[1.5, 2.5, 4.0])? {
        println!(
            "length {:>4.1} s  accuracy {:?}  skipped {}",
            row.length_s, row.report.accuracy, row.report.n_skipped
        );
    }
    for row in noise_robustness_eval(&diagnoser, &corpus, &test, &[20.0, 10.0, 0.0, -10.0], 7)? {
        let snr = row.snr_db.map_or("clean".to_string(), |s| format!("{s} dB"));
        println!("snr {snr:>8}  accuracy {:?}", row.report.accuracy);
    }
    println!("elapsed {:.1} s", started.elapsed().as_secs_f64());
    Ok(())
}
