//! Starts the HTTP service on an ephemeral port and talks to it the way the
//! web UI does: health, model summary, a raw upload, a multipart upload and
//! the no-cry path. Without a model argument a small one is trained first.
//!
//! cargo run -p cryscreen-app --example service_client -- [model.ubw]

use std::path::PathBuf;

use cryscreen::audio::{encode_wav_pcm16, CANONICAL_RATE_HZ};
use cryscreen::evaluation::{
    generate_synthetic_corpus, load_audio, split_by_subject, synthesize_recording, train_and_evaluate, GridCell,
    SynthParams,
};
use cryscreen::model_store::save_model;
use cryscreen::{AudioBuffer, KernelSpec, PipelineConfig, TrainConfig};
use cryscreen_app::cli::load_diagnoser;
use cryscreen_app::service::{router, AppState};
use reqwest::multipart::{Form, Part};

fn train_demo_model(dir: &std::path::Path) -> Result<PathBuf, Box<dyn std::error::Error>> {
    let corpus = generate_synthetic_corpus(dir.join("corpus"), &SynthParams::new(6, 2, 3))?;
    let corpus = load_audio(corpus, CANONICAL_RATE_HZ)?;
    let cfg = PipelineConfig::default();
    let cell = GridCell {
        kernel: KernelSpec::default_rbf(cfg.feature_dim()),
        train: TrainConfig::default(),
    };
    let split = split_by_subject(corpus.entries(), 0.8, 3)?;
    let (model, _) = train_and_evaluate(&corpus, &cfg, &cell, &split)?;
    let path = dir.join("demo.ubw");
    save_model(&model, &cfg, &path)?;
    Ok(path)
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let model = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => train_demo_model(tmp.path())?,
    };
    let state = AppState::new(load_diagnoser(&model)?);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(async move { axum::serve(listener, router(state)).await });
    let client = reqwest::Client::new();

    let health = client.get(format!("{base}/v1/health")).send().await?.text().await?;
    println!("GET /v1/health -> {health}");
    let summary = client.get(format!("{base}/v1/model")).send().await?.text().await?;
    println!("GET /v1/model -> {summary}");

    let params = SynthParams::new(1, 1, 77);
    let cry = encode_wav_pcm16(&synthesize_recording(params.f0_asphyxia_hz, &params, 77)?);
    let resp = client
        .post(format!("{base}/v1/diagnose"))
        .body(cry.clone())
        .send()
        .await?;
    println!("POST raw -> {} {}", resp.status(), resp.text().await?);

    let form = Form::new().part("audio", Part::bytes(cry).file_name("cry.wav"));
    let resp = client
        .post(format!("{base}/v1/diagnose"))
        .multipart(form)
        .send()
        .await?;
    println!("POST multipart -> {} {}", resp.status(), resp.text().await?);

    let silence = encode_wav_pcm16(&AudioBuffer::new(vec![0.0; 32_000], CANONICAL_RATE_HZ)?);
    let resp = client.post(format!("{base}/v1/diagnose")).body(silence).send().await?;
    println!("POST silence -> {} {}", resp.status(), resp.text().await?);
    Ok(())
}
