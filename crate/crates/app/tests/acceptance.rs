//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs under `cargo test` as a plain binary.

mod common;
#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use cryscreen::audio::encode_wav_pcm16;
use cryscreen::dsp::fft_radix2;
use cryscreen::evaluation::{split_by_subject, synthesize_recording, CorpusEntry, EvalError, SynthParams};
use cryscreen::features::{dct2, extract_mfcc, FeatureConfig};
use cryscreen::model_store::{decode_model, encode_model, load_model_file, ModelStoreError, DIGEST_LEN, HEADER_LEN};
use cryscreen::pipeline::vote_labels;
use cryscreen::svm::{dual_objective, smo_solve, smo_train};
use cryscreen::{KernelSpec, Label, TrainConfig};
use cryscreen_app::service::MAX_BODY_BYTES;
use num_complex::Complex64;
use oracles::{
    brute_force_dual_4, comb_buffer, dct2_direct, dft, gram, max_kkt_violation, max_relative_error, random_blobs,
    random_complex,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cryscreen"))
}

fn fft_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xFF7);
    let (mut worst, mut worst_parseval) = (0.0f64, 0.0f64);
    for p in 1..=10 {
        let n = 1usize << p;
        for _ in 0..200 {
            let x = random_complex(&mut rng, n);
            let got = fft_radix2(&x).map_err(|e| e.to_string())?;
            worst = worst.max(max_relative_error(&got, &dft(&x)));
            let time: f64 = x.iter().map(Complex64::norm_sqr).sum();
            let freq: f64 = got.iter().map(Complex64::norm_sqr).sum::<f64>() / n as f64;
            worst_parseval = worst_parseval.max((time - freq).abs() / time);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(worst < 1e-9, || format!("max relative error {worst:.3e}"))?;
    ensure(worst_parseval < 1e-9, || format!("Parseval error {worst_parseval:.3e}"))?;
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!(
        "2000 inputs, max rel err {worst:.2e}, Parseval {worst_parseval:.2e}, {secs:.2} s"
    ))
}

fn dct_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDC7);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let m = 1 + i % 64;
        let e: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let err = dct2(&e)
            .iter()
            .zip(dct2_direct(&e))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    ensure(worst < 1e-12, || format!("max abs err {worst:.3e}"))?;
    Ok(format!("1000 vectors, M in 1..=64, max abs err {worst:.2e}"))
}

fn gain_invariance() -> Outcome {
    let cfg = FeatureConfig {
        trim_threshold: 0.0,
        ..FeatureConfig::default()
    };
    let (mut worst_rest, mut worst_c0) = (0.0f64, 0.0f64);
    for seed in 1000..1050 {
        let buf = comb_buffer(seed);
        let base = extract_mfcc(&buf, &cfg).map_err(|e| e.to_string())?;
        for g in [0.1, 2.0, 10.0] {
            let scaled = extract_mfcc(&buf.scaled(g).map_err(|e| e.to_string())?, &cfg).map_err(|e| e.to_string())?;
            let shift = cfg.n_mel_filters as f64 * (g * g).ln();
            for (a, b) in base.vectors.iter().zip(&scaled.vectors) {
                worst_c0 = worst_c0.max((b[0] - a[0] - shift).abs());
                for k in 1..13 {
                    worst_rest = worst_rest.max((b[k] - a[k]).abs());
                }
            }
        }
    }
    ensure(worst_rest < 1e-6, || format!("c1..c12 moved by {worst_rest:.3e}"))?;
    ensure(worst_c0 < 1e-6, || {
        format!("c0 off the 40 ln(g^2) shift by {worst_c0:.3e}")
    })?;
    Ok(format!(
        "50 buffers x 3 gains, c1..c12 {worst_rest:.2e}, c0 {worst_c0:.2e}"
    ))
}

fn smo_analytic() -> Outcome {
    let x = vec![vec![-1.0], vec![1.0]];
    let y = [Label::Normal, Label::Asphyxia];
    let cfg = TrainConfig::default();
    let sol = smo_solve(&x, &y, &KernelSpec::Linear, &cfg).map_err(|e| e.to_string())?;
    for a in &sol.alphas {
        ensure((a - 0.5).abs() < 1e-6, || format!("alpha {a}"))?;
    }
    ensure(sol.bias.abs() < 1e-6, || format!("bias {}", sol.bias))?;
    let model = smo_train(&x, &y, &KernelSpec::Linear, &cfg).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..=400 {
        let t = -2.0 + i as f64 * 0.01;
        worst = worst.max((model.decision_value(&[t]).map_err(|e| e.to_string())? - t).abs());
    }
    ensure(worst < 1e-6, || format!("|f(x) - x| = {worst:.3e}"))?;
    Ok(format!(
        "alpha = {:?}, b = {:.1e}, max |f(x) - x| = {worst:.1e}",
        sol.alphas, sol.bias
    ))
}

fn smo_xor() -> Outcome {
    let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let y = [Label::Normal, Label::Normal, Label::Asphyxia, Label::Asphyxia];
    let kernel = KernelSpec::Rbf { gamma: 1.0 };
    let cfg = TrainConfig {
        c: 10.0,
        ..TrainConfig::default()
    };
    let model = smo_train(&x, &y, &kernel, &cfg).map_err(|e| e.to_string())?;
    let mut correct = 0;
    for (xi, yi) in x.iter().zip(&y) {
        correct += usize::from(model.predict(xi).map_err(|e| e.to_string())? == *yi);
    }
    ensure(correct == 4, || format!("{correct}/4 correct"))?;
    let sol = smo_solve(&x, &y, &kernel, &cfg).map_err(|e| e.to_string())?;
    let ours = dual_objective(&sol.alphas, &x, &y, &kernel);
    let (grid, _) = brute_force_dual_4(&gram(&x, &kernel), 10.0);
    let gap = (ours - grid).abs();
    ensure(gap < 1e-3, || format!("dual {ours:.6} vs grid {grid:.6}"))?;
    Ok(format!("4/4, dual {ours:.6} vs grid {grid:.6}"))
}

fn smo_kkt() -> Outcome {
    let cfg = TrainConfig::default();
    let mut worst = 0.0f64;
    for seed in 500..520 {
        let (x, y) = random_blobs(seed, 30);
        for kernel in [KernelSpec::Linear, KernelSpec::Rbf { gamma: 0.5 }] {
            let sol = smo_solve(&x, &y, &kernel, &cfg).map_err(|e| e.to_string())?;
            ensure(sol.converged, || format!("seed {seed} {kernel:?} did not converge"))?;
            worst = worst.max(max_kkt_violation(&sol, &x, &y, &kernel, cfg.c));
        }
    }
    ensure(worst <= 1e-3, || format!("worst KKT violation {worst:.3e}"))?;
    Ok(format!("20 sets x 2 kernels, worst violation {worst:.2e}"))
}

/// Output of the end-to-end run, reused by later criteria.
struct EndToEnd {
    dir: TempDir,
    model: PathBuf,
    corpus: PathBuf,
}

fn end_to_end(slot: &mut Option<EndToEnd>) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("corpus");
    let model = dir.path().join("model.ubw");
    let started = Instant::now();
    let synth = bin()
        .args(["synth", "--out"])
        .arg(&corpus)
        .args(["--subjects", "20", "--per-subject", "3", "--seed", "42"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(synth.status.success(), || {
        String::from_utf8_lossy(&synth.stderr).into_owned()
    })?;
    let train = bin()
        .args(["train", "--json", "--data"])
        .arg(&corpus)
        .arg("--out")
        .arg(&model)
        .output()
        .map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    ensure(train.status.success(), || {
        String::from_utf8_lossy(&train.stderr).into_owned()
    })?;
    let v: Value = serde_json::from_slice(&train.stdout).map_err(|e| e.to_string())?;
    let r = &v["report"];
    let sens = r["sensitivity"].as_f64().ok_or("sensitivity undefined")?;
    let spec = r["specificity"].as_f64().ok_or("specificity undefined")?;
    *slot = Some(EndToEnd { dir, model, corpus });
    let detail = format!(
        "sensitivity {sens:.3}, specificity {spec:.3} on {} held-out recordings ({} tp, {} tn), {secs:.1} s",
        r["n_test"], r["tp"], r["tn"]
    );
    ensure(sens >= 0.9 && spec >= 0.9 && secs < 120.0, || detail.clone())?;
    Ok(detail)
}

fn latency(e2e: Option<&EndToEnd>) -> Outcome {
    let e2e = e2e.ok_or("no model from the end-to-end run")?;
    let params = SynthParams {
        duration_s: 60.0,
        ..SynthParams::new(1, 1, 60)
    };
    let buf = synthesize_recording(params.f0_asphyxia_hz, &params, 60).map_err(|e| e.to_string())?;
    let wav = e2e.dir.path().join("sixty.wav");
    std::fs::write(&wav, encode_wav_pcm16(&buf)).map_err(|e| e.to_string())?;
    let out = bin()
        .args(["diagnose", "--json", "--model"])
        .arg(&e2e.model)
        .arg(&wav)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    let v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let ms = v["elapsed_ms"].as_u64().ok_or("no elapsed_ms")?;
    let segments = v["segments"].as_array().map_or(0, Vec::len);
    ensure(ms < 20_000, || format!("elapsed_ms {ms}"))?;
    Ok(format!(
        "60 s recording, {segments} segments, elapsed_ms {ms} (bound 20000)"
    ))
}

fn votes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x707E);
    let mut ties = 0;
    for case in 0..10_000 {
        let len = rng.random_range(1..=40);
        let labels: Vec<Label> = (0..len)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Label::Asphyxia
                } else {
                    Label::Normal
                }
            })
            .collect();
        let (verdict, conf) = vote_labels(labels.iter().copied()).map_err(|e| e.to_string())?;
        let mut shuffled = labels.clone();
        shuffled.shuffle(&mut rng);
        let again = vote_labels(shuffled).map_err(|e| e.to_string())?;
        ensure(again == (verdict, conf), || {
            format!("case {case}: permutation changed the vote")
        })?;
        let a = labels.iter().filter(|l| **l == Label::Asphyxia).count();
        let n = len - a;
        if a == n {
            ties += 1;
            ensure(verdict == Label::Asphyxia, || format!("case {case}: tie went normal"))?;
        }
        // Turning one normal vote into asphyxia never moves the verdict toward normal.
        if let Some(i) = labels.iter().position(|l| *l == Label::Normal) {
            let mut more = labels.clone();
            more[i] = Label::Asphyxia;
            let (after, _) = vote_labels(more).map_err(|e| e.to_string())?;
            ensure(!(verdict == Label::Asphyxia && after == Label::Normal), || {
                format!("case {case}: monotonicity broken")
            })?;
        }
    }
    Ok(format!("10000 sequences, {ties} ties"))
}

fn model_round_trip(e2e: Option<&EndToEnd>) -> Outcome {
    let e2e = e2e.ok_or("no model from the end-to-end run")?;
    let bytes = std::fs::read(&e2e.model).map_err(|e| e.to_string())?;
    let file = load_model_file(&e2e.model).map_err(|e| e.to_string())?;
    let resaved = e2e.dir.path().join("resaved.ubw");
    cryscreen::model_store::save_model(&file.svm, &file.pipeline, &resaved).map_err(|e| e.to_string())?;
    let again = std::fs::read(&resaved).map_err(|e| e.to_string())?;
    ensure(again == bytes, || "re-saved bytes differ".into())?;
    ensure(encode_model(&file.svm, &file.pipeline) == bytes, || {
        "re-encoded bytes differ".into()
    })?;

    let reloaded = decode_model(&again).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0DE1);
    let dim = file.svm.dim();
    for i in 0..100 {
        let probe: Vec<f64> = (0..dim).map(|_| rng.random_range(-50.0..50.0)).collect();
        let a = file.svm.decision_value(&probe).map_err(|e| e.to_string())?;
        let b = reloaded.svm.decision_value(&probe).map_err(|e| e.to_string())?;
        ensure(a.to_bits() == b.to_bits(), || format!("probe {i}: {a} vs {b}"))?;
    }

    let mut flips = 0;
    for _ in 0..200 {
        let mut bad = bytes.clone();
        let i = rng.random_range(HEADER_LEN..bad.len());
        bad[i] ^= 1 << rng.random_range(0..8);
        flips += 1;
        match decode_model(&bad) {
            Err(ModelStoreError::DigestMismatch) => {}
            other => return Err(format!("flip at byte {i}: {:?}", other.map(|_| ()))),
        }
    }
    Ok(format!(
        "{} bytes ({} digest), 100 probes bit-identical, {flips} corrupted copies rejected",
        bytes.len(),
        DIGEST_LEN
    ))
}

fn entries(normal: usize, asph: usize, recs: usize) -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    for (prefix, count, label) in [("n", normal, Label::Normal), ("a", asph, Label::Asphyxia)] {
        for s in 0..count {
            for r in 0..recs {
                out.push(CorpusEntry {
                    path: PathBuf::from(format!("{prefix}{s}__{r}.wav")),
                    label,
                    subject_id: format!("{prefix}{s}"),
                });
            }
        }
    }
    out
}

fn leakage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1EA4);
    let (mut plans, mut refused) = (0, 0);
    for case in 0..1000 {
        let normal = rng.random_range(1..=12);
        let asph = rng.random_range(1..=12);
        let list = entries(normal, asph, rng.random_range(1..=4));
        let fraction = rng.random_range(0.05..0.95);
        match split_by_subject(&list, fraction, rng.random()) {
            Ok(plan) => {
                plans += 1;
                ensure(plan.train_subjects.is_disjoint(&plan.test_subjects), || {
                    format!("case {case}: subject on both sides")
                })?;
                for side in [&plan.train_subjects, &plan.test_subjects] {
                    let has = |p: char| side.iter().any(|s| s.starts_with(p));
                    ensure(has('n') && has('a'), || format!("case {case}: a side lacks a class"))?;
                }
            }
            Err(EvalError::TooFewSubjects(_)) => {
                refused += 1;
                ensure(normal < 2 || asph < 2, || {
                    format!("case {case}: refused a feasible split")
                })?;
            }
            Err(e) => return Err(format!("case {case}: {e}")),
        }
    }
    Ok(format!(
        "1000 plans, {plans} split, {refused} refused with TooFewSubjects"
    ))
}

fn cli_json(model: &Path, wav: &Path) -> Result<Value, String> {
    let out = bin()
        .args(["diagnose", "--json", "--model"])
        .arg(model)
        .arg(wav)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn without_elapsed(mut v: Value) -> Value {
    if let Some(o) = v.as_object_mut() {
        o.remove("elapsed_ms");
    }
    v
}

fn parity(e2e: Option<&EndToEnd>) -> Outcome {
    let e2e = e2e.ok_or("no model from the end-to-end run")?;
    let mut fixtures = Vec::new();
    for (class, prefix) in [("normal", 'n'), ("asphyxia", 'a')] {
        for s in 0..5 {
            fixtures.push(e2e.corpus.join(class).join(format!("{prefix}{s:03}__rec{}.wav", s % 3)));
        }
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let addr = common::spawn_service(&e2e.model).await;
        let url = format!("http://{addr}/v1/diagnose");
        let client = reqwest::Client::new();
        for wav in &fixtures {
            let cli = without_elapsed(cli_json(&e2e.model, wav)?);
            let bytes = std::fs::read(wav).map_err(|e| e.to_string())?;
            let resp = client.post(&url).body(bytes).send().await.map_err(|e| e.to_string())?;
            ensure(resp.status() == 200, || {
                format!("{}: status {}", wav.display(), resp.status())
            })?;
            let body = resp.bytes().await.map_err(|e| e.to_string())?;
            let http = without_elapsed(serde_json::from_slice(&body).map_err(|e| e.to_string())?);
            ensure(cli == http, || {
                format!("{}: CLI {cli} vs service {http}", wav.display())
            })?;
        }

        let mut statuses = Vec::new();
        for (name, body, want, code) in [
            ("malformed", b"RIFF....WAVEjunk".to_vec(), 400, "malformed_wav"),
            ("silent", common::silent_wav(), 422, "no_cry_detected"),
            ("oversized", vec![0u8; MAX_BODY_BYTES + 1], 413, "payload_too_large"),
        ] {
            let resp = client.post(&url).body(body).send().await.map_err(|e| e.to_string())?;
            let status = resp.status().as_u16();
            let v: Value =
                serde_json::from_slice(&resp.bytes().await.map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            ensure(status == want && v["error"] == code, || format!("{name}: {status} {v}"))?;
            statuses.push(format!("{name} {status}"));
        }
        Ok(format!("10 fixtures identical; {}", statuses.join(", ")))
    })
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL {name}: {detail}");
        }
    };
    report("fft_oracle", fft_oracle());
    report("dct_oracle", dct_oracle());
    report("mfcc_gain_invariance", gain_invariance());
    report("smo_analytic", smo_analytic());
    report("smo_xor", smo_xor());
    report("smo_kkt", smo_kkt());
    let mut e2e = None;
    report("synthetic_end_to_end", end_to_end(&mut e2e));
    report("latency_60s", latency(e2e.as_ref()));
    report("vote_properties", votes());
    report("model_round_trip", model_round_trip(e2e.as_ref()));
    report("leakage_guard", leakage());
    report("cli_service_parity", parity(e2e.as_ref()));
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
