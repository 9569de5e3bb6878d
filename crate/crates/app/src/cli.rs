use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cryscreen::audio;
use cryscreen::evaluation::{
    self, default_grid, evaluate_recordings, generate_synthetic_corpus, kfold_cv, load_audio, load_corpus,
    noise_robustness_eval, record_length_sweep, split_by_subject, train_and_evaluate, CvResult, EvalReport, GridCell,
    NoiseRow, SweepRow, SynthParams,
};
use cryscreen::features::extract_mfcc;
use cryscreen::model_store::{load_model_file, model_digest, save_model};
use cryscreen::{Diagnoser, PipelineError};
use serde_json::json;

use crate::config_file::{self, TrainSettings};
use crate::error::AppError;
use crate::response::DiagnoseResponse;
use crate::service;

#[derive(Debug, Parser)]
#[command(
    name = "cryscreen",
    version,
    about = "Infant cry screening: train, evaluate, diagnose, serve"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic two-class corpus (normal/, asphyxia/, manifest.csv)
    Synth(SynthArgs),
    /// Train on a subject-disjoint split and write a model file
    Train(TrainArgs),
    /// Score a labelled corpus with a trained model
    Evaluate(EvaluateArgs),
    /// Diagnose one WAV recording
    Diagnose(DiagnoseArgs),
    /// Dump per-frame MFCCs of a WAV file as CSV
    Extract(ExtractArgs),
    /// Run the HTTP inference service
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Subjects per class
    #[arg(long, default_value_t = 20)]
    pub subjects: usize,
    #[arg(long, default_value_t = 3)]
    pub per_subject: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config file's seed (split, folds and SMO)
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Record lengths in seconds, ascending
    #[arg(long, value_delimiter = ',')]
    pub sweep_lengths: Vec<f64>,
    /// SNRs in dB; the clean row is always included
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub snr: Vec<f64>,
    /// Seed for the added noise
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub model: PathBuf,
    pub file: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Model file whose feature config is used
    #[arg(long = "model-config")]
    pub model_config: PathBuf,
    pub file: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
}

/// Parses `args`, runs the command, prints errors to stderr and maps them to exit codes.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.to_exit()
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> AppError {
    AppError::Input(format!("{}: {e}", path.display()))
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), AppError> {
    out.write_all(text.as_bytes())
        .map_err(|e| AppError::Input(format!("stdout: {e}")))
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), AppError> {
    match command {
        Command::Synth(a) => synth(a, out),
        Command::Train(a) => train(a, out),
        Command::Evaluate(a) => evaluate(a, out),
        Command::Diagnose(a) => diagnose(a, out),
        Command::Extract(a) => extract(a, out),
        Command::Serve(a) => serve(a),
    }
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let params = SynthParams::new(a.subjects, a.per_subject, a.seed);
    let corpus = generate_synthetic_corpus(&a.out, &params).map_err(|e| match e {
        evaluation::EvalError::InvalidParameter(m) => AppError::Config(m),
        other => AppError::Input(other.to_string()),
    })?;
    write_out(
        out,
        &format!(
            "{}\n{} recordings\n",
            a.out.join(evaluation::MANIFEST_FILE).display(),
            corpus.entries.len()
        ),
    )
}

/// Loads a model file into a ready diagnoser.
pub fn load_diagnoser(path: &Path) -> Result<Diagnoser, AppError> {
    let file = load_model_file(path).map_err(|e| match AppError::from(e) {
        AppError::Input(m) => AppError::Input(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let digest = file.short_digest();
    Diagnoser::with_digest(file.svm, file.pipeline, digest).map_err(|e| AppError::Model(e.to_string()))
}

fn cv_table(cv: &CvResult) -> String {
    let mut s = format!("cross-validation ({} folds over training subjects)\n", cv.k);
    s.push_str(&format!("  {:<8}{:<12}{:>14}\n", "C", "gamma", "mean_accuracy"));
    for (i, c) in cv.cells.iter().enumerate() {
        let acc = c.mean_accuracy.map_or("undefined".to_string(), |v| format!("{v:.4}"));
        let mark = if i == cv.best_index { " *" } else { "" };
        s.push_str(&format!(
            "  {:<8}{:<12.6}{:>14}{mark}\n",
            c.cell.train.c,
            c.cell.kernel.gamma(),
            acc
        ));
    }
    s
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let mut settings = match &a.config {
        Some(p) => config_file::parse(&fs::read_to_string(p).map_err(|e| io_err(p, e))?)?,
        None => TrainSettings::default(),
    };
    if let Some(seed) = a.seed {
        settings.train.seed = seed;
    }
    let seed = settings.train.seed;
    let cfg = settings.pipeline.clone();
    let corpus = load_audio(load_corpus(&a.data)?, cfg.feature.sample_rate_hz)?;
    let split = split_by_subject(corpus.entries(), settings.split_fraction, seed)?;

    let (cell, cv) = if settings.pinned {
        let cell = GridCell {
            kernel: settings.kernel_spec()?,
            train: settings.train,
        };
        (cell, None)
    } else {
        let train_idx = split.train_indices(corpus.entries());
        let k = settings.cv_folds.min(split.train_subjects.len());
        let grid = default_grid(cfg.feature_dim(), seed);
        let grid: Vec<GridCell> = grid
            .into_iter()
            .map(|mut g| {
                g.train.tolerance = settings.train.tolerance;
                g.train.max_passes = settings.train.max_passes;
                g
            })
            .collect();
        let cv = kfold_cv(&corpus, &train_idx, &cfg, k, &grid, seed)?;
        (cv.best, Some(cv))
    };

    let (model, report) = train_and_evaluate(&corpus, &cfg, &cell, &split)?;
    save_model(&model, &cfg, &a.out).map_err(AppError::from)?;
    let digest = model_digest(&model, &cfg);

    if a.json {
        let v = json!({
            "model": a.out,
            "model_digest": digest,
            "selected": cell,
            "cv": cv,
            "report": report,
            "converged": model.meta().converged,
        });
        return write_out(
            out,
            &format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable")),
        );
    }
    let mut s = String::new();
    if let Some(cv) = &cv {
        s.push_str(&cv_table(cv));
    }
    s.push_str(&format!("selected: {:?} C={}\n", cell.kernel, cell.train.c));
    if !model.meta().converged {
        s.push_str(&format!(
            "warning: SMO stopped after {} passes with {} KKT violations\n",
            model.meta().passes,
            model.meta().kkt_violations
        ));
    }
    s.push_str("held-out evaluation (recording level)\n");
    s.push_str(&report.to_table());
    s.push_str(&format!("model written to {} (digest {digest})\n", a.out.display()));
    write_out(out, &s)
}

fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::from("record length sweep\n");
    s.push_str(&format!(
        "  {:>8}{:>13}{:>13}{:>10}{:>9}{:>9}\n",
        "length_s", "sensitivity", "specificity", "accuracy", "skipped", "short"
    ));
    for r in rows {
        s.push_str(&format!(
            "  {:>8.2}{}{:>9}\n",
            r.length_s,
            ratio_cols(&r.report),
            r.shorter_than_length.len()
        ));
    }
    s
}

fn noise_table(rows: &[NoiseRow]) -> String {
    let mut s = String::from("noise robustness\n");
    s.push_str(&format!(
        "  {:>8}{:>13}{:>13}{:>10}{:>9}\n",
        "snr_db", "sensitivity", "specificity", "accuracy", "skipped"
    ));
    for r in rows {
        let snr = r.snr_db.map_or("clean".to_string(), |v| format!("{v}"));
        s.push_str(&format!("  {snr:>8}{}\n", ratio_cols(&r.report)));
    }
    s
}

fn ratio_cols(r: &EvalReport) -> String {
    let f = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.4}"));
    format!(
        "{:>13}{:>13}{:>10}{:>9}",
        f(r.sensitivity),
        f(r.specificity),
        f(r.accuracy),
        r.n_skipped
    )
}

fn evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let diagnoser = load_diagnoser(&a.model)?;
    let rate = diagnoser.config().feature.sample_rate_hz;
    let corpus = load_audio(load_corpus(&a.data)?, rate)?;
    let all: Vec<usize> = (0..corpus.entries().len()).collect();
    let report = evaluate_recordings(&diagnoser, &corpus, &all)?;
    let sweep = if a.sweep_lengths.is_empty() {
        None
    } else {
        Some(record_length_sweep(&diagnoser, &corpus, &all, &a.sweep_lengths)?)
    };
    let noise = if a.snr.is_empty() {
        None
    } else {
        Some(noise_robustness_eval(&diagnoser, &corpus, &all, &a.snr, a.seed)?)
    };
    if a.json {
        let v = json!({"report": report, "length_sweep": sweep, "noise": noise});
        return write_out(
            out,
            &format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable")),
        );
    }
    let mut s = report.to_table();
    if let Some(rows) = &sweep {
        s.push_str(&sweep_table(rows));
    }
    if let Some(rows) = &noise {
        s.push_str(&noise_table(rows));
    }
    write_out(out, &s)
}

/// Text rendering of a diagnosis; the first line is `VERDICT: <label>`.
pub fn render_diagnosis(r: &DiagnoseResponse) -> String {
    let votes = r.segments.iter().filter(|s| s.label == r.verdict).count();
    let mut s = format!(
        "VERDICT: {}\nconfidence: {:.3} ({votes} of {} segments)\nsegments:\n",
        r.verdict,
        r.confidence,
        r.segments.len()
    );
    for seg in &r.segments {
        s.push_str(&format!(
            "  {:>7.2} s  {:<9} {:+.4}\n",
            seg.start_s, seg.label, seg.decision_value
        ));
    }
    s.push_str(&format!(
        "elapsed_ms: {}\nmodel_digest: {}\n",
        r.elapsed_ms, r.model_digest
    ));
    for w in &r.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}

fn diagnose(a: DiagnoseArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let diagnoser = load_diagnoser(&a.model)?;
    let bytes = fs::read(&a.file).map_err(|e| io_err(&a.file, e))?;
    let resp = service::diagnose_bytes(&diagnoser, &bytes).map_err(|e| match e {
        PipelineError::Audio(err) => AppError::Input(format!("{}: {err}", a.file.display())),
        other => other.into(),
    })?;
    if a.json {
        write_out(
            out,
            &format!("{}\n", serde_json::to_string(&resp).expect("serializable")),
        )
    } else {
        write_out(out, &render_diagnosis(&resp))
    }
}

fn extract(a: ExtractArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let diagnoser = load_diagnoser(&a.model_config)?;
    let feature = &diagnoser.config().feature;
    let bytes = fs::read(&a.file).map_err(|e| io_err(&a.file, e))?;
    let buf = audio::decode_wav(&bytes, feature.sample_rate_hz)
        .map_err(|e| AppError::Input(format!("{}: {e}", a.file.display())))?;
    let m = extract_mfcc(&buf, feature).map_err(|e| AppError::from(PipelineError::from(e)))?;
    fs::write(&a.out, m.to_csv()).map_err(|e| io_err(&a.out, e))?;
    write_out(
        out,
        &format!(
            "wrote {} frames x {} coefficients to {}\n",
            m.n_frames(),
            m.n_coeffs(),
            a.out.display()
        ),
    )
}

fn serve(a: ServeArgs) -> Result<(), AppError> {
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let diagnoser = load_diagnoser(&a.model)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| AppError::Input(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.bind)
            .await
            .map_err(|e| AppError::Input(format!("cannot bind {}: {e}", a.bind)))?;
        tracing::info!(
            addr = %listener.local_addr().map(|a| a.to_string()).unwrap_or_default(),
            model_digest = diagnoser.model_digest(),
            "listening"
        );
        service::serve(listener, service::AppState::new(diagnoser))
            .await
            .map_err(|e| AppError::Input(format!("server error: {e}")))
    })
}
