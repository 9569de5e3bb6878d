//! Fixtures shared by the service tests and the acceptance suite.
#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use cryscreen::audio::{encode_wav_pcm16, CANONICAL_RATE_HZ};
use cryscreen::evaluation::{
    generate_synthetic_corpus, load_audio, load_corpus, split_by_subject, train_and_evaluate, GridCell, SynthParams,
};
use cryscreen::model_store::save_model;
use cryscreen::{AudioBuffer, KernelSpec, PipelineConfig, TrainConfig};
use cryscreen_app::cli::load_diagnoser;
use cryscreen_app::service::{router, AppState};
use tempfile::TempDir;

pub struct Workspace {
    pub dir: TempDir,
    pub corpus: PathBuf,
    pub model: PathBuf,
    pub fixtures: Vec<PathBuf>,
}

impl Workspace {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

/// Synthesizes a corpus, trains a default model on it and saves it.
/// `fixtures` lists every recording of the corpus, normal first.
pub fn workspace(subjects: usize, per_subject: usize, seed: u64) -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    generate_synthetic_corpus(&corpus_dir, &SynthParams::new(subjects, per_subject, seed)).unwrap();
    let corpus = load_audio(load_corpus(&corpus_dir).unwrap(), CANONICAL_RATE_HZ).unwrap();
    let cfg = PipelineConfig::default();
    let split = split_by_subject(corpus.entries(), 0.8, seed).unwrap();
    let cell = GridCell {
        kernel: KernelSpec::default_rbf(cfg.feature_dim()),
        train: TrainConfig::default(),
    };
    let (model, _) = train_and_evaluate(&corpus, &cfg, &cell, &split).unwrap();
    let model_path = dir.path().join("model.ubw");
    save_model(&model, &cfg, &model_path).unwrap();
    let fixtures = corpus.entries().iter().map(|e| e.path.clone()).collect();
    Workspace {
        dir,
        corpus: corpus_dir,
        model: model_path,
        fixtures,
    }
}

pub fn write_wav(path: &Path, samples: Vec<f64>) {
    std::fs::write(path, encode_wav_pcm16(&AudioBuffer::new(samples, 16_000).unwrap())).unwrap();
}

pub fn silent_wav() -> Vec<u8> {
    encode_wav_pcm16(&AudioBuffer::new(vec![0.0; 48_000], 16_000).unwrap())
}

/// Binds an ephemeral port and serves the model on the current runtime.
pub async fn spawn_service(model: &Path) -> SocketAddr {
    let state = AppState::new(load_diagnoser(model).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router(state)).await.unwrap();
    });
    addr
}
