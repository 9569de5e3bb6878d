use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::split::indices_in;
use super::{subject_folds, EvalError, EvalReport, LoadedCorpus, SplitPlan};
use crate::audio::AudioBuffer;
use crate::features::{self, FeatureError};
use crate::label::Label;
use crate::pipeline::{vote_labels, Diagnoser, PipelineConfig, PipelineError, RecordingFeatures};
use crate::svm::{fit_standardized, KernelSpec, SvmModel, TrainConfig};

/// One hyperparameter combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub kernel: KernelSpec,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvCell {
    pub cell: GridCell,
    /// `None` for a fold in which every held-out recording was skipped.
    pub fold_accuracies: Vec<Option<f64>>,
    pub mean_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub best_index: usize,
    pub best: GridCell,
    /// In grid order.
    pub cells: Vec<CvCell>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub length_s: f64,
    pub report: EvalReport,
    /// Test recordings shorter than `length_s`, used whole.
    pub shorter_than_length: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    /// `None` is the clean row.
    pub snr_db: Option<f64>,
    pub report: EvalReport,
}

/// C in {0.1, 1, 10} crossed with RBF gamma in {0.5, 1, 2} / dim.
pub fn default_grid(dim: usize, seed: u64) -> Vec<GridCell> {
    let mut grid = Vec::with_capacity(9);
    for c in [0.1, 1.0, 10.0] {
        for scale in [0.5, 1.0, 2.0] {
            grid.push(GridCell {
                kernel: KernelSpec::Rbf {
                    gamma: scale / dim as f64,
                },
                train: TrainConfig {
                    c,
                    seed,
                    ..TrainConfig::default()
                },
            });
        }
    }
    grid
}

/// Recordings with no usable cry (silent, or shorter than the minimum
/// segment count after trimming) are reported as skipped, not failed.
fn is_skippable(e: &PipelineError) -> bool {
    e.is_no_cry() || matches!(e, PipelineError::TooShort { .. })
}

/// Segment features of every recording, `None` where no cry was found.
pub fn featurize_corpus(
    corpus: &LoadedCorpus,
    cfg: &PipelineConfig,
) -> Result<Vec<Option<RecordingFeatures>>, EvalError> {
    cfg.validate()?;
    let extractor = crate::features::MfccExtractor::new(&cfg.feature).map_err(PipelineError::from)?;
    corpus
        .audio
        .par_iter()
        .map(|buf| {
            let buf = crate::audio::resample_linear(buf, cfg.feature.sample_rate_hz).map_err(PipelineError::from)?;
            match crate::pipeline::featurize_recording(&buf, cfg, &extractor) {
                Ok(f) => Ok(Some(f)),
                Err(e) if is_skippable(&e) => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

/// Trains on every segment of the recordings at `indices`. The standardizer
/// is fit on exactly these segments.
pub fn train_on(
    corpus: &LoadedCorpus,
    features: &[Option<RecordingFeatures>],
    indices: &[usize],
    cell: &GridCell,
) -> Result<SvmModel, EvalError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for &i in indices {
        if let Some(f) = &features[i] {
            for (_, v) in &f.segments {
                rows.push(v.clone());
                labels.push(corpus.entries()[i].label);
            }
        }
    }
    Ok(fit_standardized(&rows, &labels, &cell.kernel, &cell.train)?)
}

fn finish_report(pairs: &[(Label, Label)], n_test: usize, diagnoser: &Diagnoser, synthetic: bool) -> EvalReport {
    let mut report = EvalReport::from_pairs(pairs);
    report.n_test = n_test;
    report.n_skipped = n_test - pairs.len();
    report.feature_digest = Some(diagnoser.config().feature.digest());
    report.model_digest = Some(diagnoser.model_digest().to_string());
    report.synthetic = synthetic;
    report
}

/// Runs the full diagnose path on `prepare(i, audio)` for each index.
/// `prepare` returning `None` marks the recording as skipped.
fn evaluate_with<F>(
    diagnoser: &Diagnoser,
    corpus: &LoadedCorpus,
    indices: &[usize],
    prepare: F,
) -> Result<EvalReport, EvalError>
where
    F: Fn(usize, &AudioBuffer) -> Result<Option<AudioBuffer>, EvalError> + Sync,
{
    let outcomes = indices
        .par_iter()
        .map(|&i| {
            let Some(buf) = prepare(i, &corpus.audio[i])? else {
                return Ok(None);
            };
            match diagnoser.diagnose(&buf) {
                Ok(d) => Ok(Some((corpus.entries()[i].label, d.verdict))),
                Err(e) if is_skippable(&e) => Ok(None),
                Err(e) => Err(EvalError::from(e)),
            }
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let pairs: Vec<_> = outcomes.into_iter().flatten().collect();
    Ok(finish_report(&pairs, indices.len(), diagnoser, corpus.synthetic()))
}

/// Diagnoses each recording at `indices` and scores the verdicts.
pub fn evaluate_recordings(
    diagnoser: &Diagnoser,
    corpus: &LoadedCorpus,
    indices: &[usize],
) -> Result<EvalReport, EvalError> {
    evaluate_with(diagnoser, corpus, indices, |_, buf| Ok(Some(buf.clone())))
}

/// Trains on the split's training subjects and scores its test recordings.
pub fn train_and_evaluate(
    corpus: &LoadedCorpus,
    cfg: &PipelineConfig,
    cell: &GridCell,
    split: &SplitPlan,
) -> Result<(SvmModel, EvalReport), EvalError> {
    let entries = corpus.entries();
    let train_idx = split.train_indices(entries);
    let test_idx = split.test_indices(entries);
    let features = featurize_corpus(corpus, cfg)?;
    let model = train_on(corpus, &features, &train_idx, cell)?;
    let diagnoser = Diagnoser::new(model, cfg.clone())?;
    let mut report = evaluate_recordings(&diagnoser, corpus, &test_idx)?;
    report.n_train = train_idx.len();
    Ok((diagnoser.model().clone(), report))
}

fn fold_accuracy(
    corpus: &LoadedCorpus,
    features: &[Option<RecordingFeatures>],
    diagnoser: &Diagnoser,
    held_out: &[usize],
) -> Result<Option<f64>, EvalError> {
    let mut pairs = Vec::new();
    for &i in held_out {
        if let Some(f) = &features[i] {
            let verdicts = diagnoser.verdicts(f)?;
            let (verdict, _) = vote_labels(verdicts.iter().map(|v| v.label))?;
            pairs.push((corpus.entries()[i].label, verdict));
        }
    }
    Ok(EvalReport::from_pairs(&pairs).accuracy)
}

/// Subject-disjoint k-fold search over `grid`, restricted to the recordings
/// at `indices` (normally the training side of a split).
///
/// The best cell has the highest mean fold accuracy; ties go to the lower C,
/// then the lower gamma.
pub fn kfold_cv(
    corpus: &LoadedCorpus,
    indices: &[usize],
    cfg: &PipelineConfig,
    k: usize,
    grid: &[GridCell],
    seed: u64,
) -> Result<CvResult, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::InvalidParameter("empty hyperparameter grid".into()));
    }
    let subset: Vec<_> = indices.iter().map(|&i| corpus.entries()[i].clone()).collect();
    let folds = subject_folds(&subset, k, seed)?;
    let all_features = featurize_corpus(corpus, cfg)?;
    let fold_sets: Vec<(Vec<usize>, Vec<usize>)> = folds
        .iter()
        .map(|held| {
            let held_out: Vec<usize> = indices_in(&subset, held).into_iter().map(|j| indices[j]).collect();
            let train: Vec<usize> = indices.iter().copied().filter(|i| !held_out.contains(i)).collect();
            (train, held_out)
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..fold_sets.len()).map(move |f| (c, f)))
        .collect();
    let accs = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (train, held_out) = &fold_sets[f];
            let model = train_on(corpus, &all_features, train, &grid[c])?;
            let diagnoser = Diagnoser::with_digest(model, cfg.clone(), String::new())?;
            fold_accuracy(corpus, &all_features, &diagnoser, held_out)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let cells: Vec<CvCell> = grid
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let fold_accuracies = accs[c * fold_sets.len()..(c + 1) * fold_sets.len()].to_vec();
            let scored: Vec<f64> = fold_accuracies.iter().flatten().copied().collect();
            let mean_accuracy = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
            CvCell {
                cell: *cell,
                fold_accuracies,
                mean_accuracy,
            }
        })
        .collect();

    let mut best_index = 0;
    for (i, cell) in cells.iter().enumerate().skip(1) {
        let b = &cells[best_index];
        let (acc, best_acc) = (cell.mean_accuracy.unwrap_or(-1.0), b.mean_accuracy.unwrap_or(-1.0));
        let simpler = (cell.cell.train.c, cell.cell.kernel.gamma()) < (b.cell.train.c, b.cell.kernel.gamma());
        if acc > best_acc || (acc == best_acc && simpler) {
            best_index = i;
        }
    }
    Ok(CvResult {
        best_index,
        best: cells[best_index].cell,
        cells,
        k,
    })
}

/// Evaluates with every test recording cut to each length in turn.
pub fn record_length_sweep(
    diagnoser: &Diagnoser,
    corpus: &LoadedCorpus,
    indices: &[usize],
    lengths_s: &[f64],
) -> Result<Vec<SweepRow>, EvalError> {
    let seg = diagnoser.config().segment_len_s;
    if lengths_s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvalError::InvalidParameter(
            "sweep lengths must be strictly ascending".into(),
        ));
    }
    if let Some(bad) = lengths_s.iter().find(|&&l| !(l >= seg) || !l.is_finite()) {
        return Err(EvalError::InvalidParameter(format!(
            "sweep length {bad} s is shorter than one {seg} s segment"
        )));
    }
    lengths_s
        .par_iter()
        .map(|&length_s| {
            let report = evaluate_with(diagnoser, corpus, indices, |_, buf| Ok(Some(buf.truncated(length_s))))?;
            let shorter_than_length = indices
                .iter()
                .filter(|&&i| corpus.audio[i].duration_seconds() < length_s)
                .map(|&i| corpus.entries()[i].path.clone())
                .collect();
            Ok(SweepRow {
                length_s,
                report,
                shorter_than_length,
            })
        })
        .collect()
}

/// Evaluates clean and then at each SNR. Infinite entries in `snr_list_db`
/// are dropped since the clean row is always present.
pub fn noise_robustness_eval(
    diagnoser: &Diagnoser,
    corpus: &LoadedCorpus,
    indices: &[usize],
    snr_list_db: &[f64],
    seed: u64,
) -> Result<Vec<NoiseRow>, EvalError> {
    if snr_list_db.iter().any(|s| s.is_nan()) {
        return Err(EvalError::InvalidParameter("SNR is NaN".into()));
    }
    let mut levels = vec![None];
    levels.extend(snr_list_db.iter().filter(|s| s.is_finite()).map(|&s| Some(s)));
    levels
        .par_iter()
        .map(|&snr_db| {
            let report = evaluate_with(diagnoser, corpus, indices, |i, buf| {
                let Some(snr) = snr_db else {
                    return Ok(Some(buf.clone()));
                };
                let noise_seed = seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                match features::add_noise(buf, snr, noise_seed) {
                    Ok(b) => Ok(Some(b)),
                    Err(FeatureError::SilentSignal) => Ok(None),
                    Err(e) => Err(EvalError::Pipeline(e.into())),
                }
            })?;
            Ok(NoiseRow { snr_db, report })
        })
        .collect()
}
