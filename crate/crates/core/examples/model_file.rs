//! Trains a small model, saves it, reloads it and shows that a single
//! flipped byte is caught by the digest.
//!
//! cargo run -p cryscreen --example model_file

use cryscreen::model_store::{decode_model, encode_model, expected_file_len, load_model_file, save_model};
use cryscreen::svm::fit_standardized;
use cryscreen::{KernelSpec, Label, PipelineConfig, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PipelineConfig::default();
    let dim = cfg.feature_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let y: Vec<Label> = (0..20)
        .map(|i| if i % 2 == 0 { Label::Normal } else { Label::Asphyxia })
        .collect();
    let rows: Vec<Vec<f64>> = y
        .iter()
        .map(|l| (0..dim).map(|_| l.sign() + rng.random_range(-2.0..2.0)).collect())
        .collect();
    let model = fit_standardized(&rows, &y, &KernelSpec::default_rbf(dim), &TrainConfig::default())?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("demo.ubw");
    save_model(&model, &cfg, &path)?;
    let bytes = std::fs::read(&path)?;
    println!(
        "{} bytes ({} support vectors, expected {}), header {:?}",
        bytes.len(),
        model.n_support(),
        expected_file_len(model.n_support(), dim),
        String::from_utf8_lossy(&bytes[..4])
    );

    let file = load_model_file(&path)?;
    println!("digest {}", file.short_digest());
    println!(
        "re-encoding is byte-identical: {}",
        encode_model(&file.svm, &file.pipeline) == bytes
    );

    let mut corrupt = bytes.clone();
    corrupt[200] ^= 0x04;
    match decode_model(&corrupt) {
        Ok(_) => println!("corruption went unnoticed"),
        Err(e) => println!("flipped byte 200: {e}"),
    }
    Ok(())
}
