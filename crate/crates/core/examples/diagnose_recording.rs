//! Diagnoses one recording with a saved model and prints the per-segment
//! votes. Without arguments it trains a throwaway model on a small
//! synthetic corpus and diagnoses one fresh recording of each class.
//!
//! cargo run -p cryscreen --example diagnose_recording -- [model.ubw input.wav]

use cryscreen::audio::{decode_wav, CANONICAL_RATE_HZ};
use cryscreen::evaluation::{
    generate_synthetic_corpus, load_audio, split_by_subject, synthesize_recording, train_and_evaluate, GridCell,
    SynthParams,
};
use cryscreen::model_store::{load_model_file, model_digest};
use cryscreen::{AudioBuffer, Diagnoser, KernelSpec, PipelineConfig, TrainConfig};

fn show(name: &str, d: &Diagnoser, buf: &AudioBuffer) {
    match d.diagnose(buf) {
        Ok(r) => {
            println!(
                "{name}: {} (confidence {:.2}, {} asphyxia / {} normal votes, {} ms, model {})",
                r.verdict,
                r.confidence,
                r.votes_asphyxia,
                r.votes_normal,
                r.elapsed_ms(),
                r.model_digest
            );
            for s in &r.segment_verdicts {
                println!("  {:>5.1} s  {:<8} {:+.3}", s.start_s, s.label, s.decision_value);
            }
        }
        Err(e) => println!("{name}: {e}"),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [model, wav] = args.as_slice() {
        let file = load_model_file(model)?;
        let digest = file.short_digest();
        let d = Diagnoser::with_digest(file.svm, file.pipeline, digest)?;
        show(wav, &d, &decode_wav(&std::fs::read(wav)?, CANONICAL_RATE_HZ)?);
        return Ok(());
    }

    let dir = tempfile::tempdir()?;
    let params = SynthParams::new(6, 2, 11);
    let corpus = load_audio(generate_synthetic_corpus(dir.path(), &params)?, CANONICAL_RATE_HZ)?;
    let cfg = PipelineConfig::default();
    let cell = GridCell {
        kernel: KernelSpec::default_rbf(cfg.feature_dim()),
        train: TrainConfig::default(),
    };
    let split = split_by_subject(corpus.entries(), 0.8, 11)?;
    let (model, _) = train_and_evaluate(&corpus, &cfg, &cell, &split)?;
    let digest = model_digest(&model, &cfg);
    let d = Diagnoser::with_digest(model, cfg, digest)?;

    show(
        "normal-like",
        &d,
        &synthesize_recording(params.f0_normal_hz, &params, 900)?,
    );
    show(
        "asphyxia-like",
        &d,
        &synthesize_recording(params.f0_asphyxia_hz, &params, 901)?,
    );
    show("silence", &d, &AudioBuffer::new(vec![0.0; 32_000], CANONICAL_RATE_HZ)?);
    Ok(())
}
