use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::label::Label;

/// Recording-level screening metrics; asphyxia is the positive class.
///
/// Ratios with a zero denominator are `None` (serialized as `null`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    /// Test recordings with no usable cry; not part of the confusion counts.
    pub n_skipped: usize,
    pub feature_digest: Option<String>,
    pub model_digest: Option<String>,
    pub synthetic: bool,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Counts `(truth, prediction)` pairs into a report.
pub fn confusion_metrics(pairs: &[(Label, Label)]) -> Result<EvalReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    Ok(EvalReport::from_pairs(pairs))
}

impl EvalReport {
    /// Like [`confusion_metrics`] but accepts an empty slice.
    pub(crate) fn from_pairs(pairs: &[(Label, Label)]) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for &(truth, pred) in pairs {
            match (truth, pred) {
                (Label::Asphyxia, Label::Asphyxia) => tp += 1,
                (Label::Normal, Label::Asphyxia) => fp += 1,
                (Label::Normal, Label::Normal) => tn += 1,
                (Label::Asphyxia, Label::Normal) => fn_ += 1,
            }
        }
        Self {
            tp,
            fp,
            tn,
            fn_,
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
            accuracy: ratio(tp + tn, pairs.len()),
            n_train: 0,
            n_test: pairs.len(),
            n_skipped: 0,
            feature_digest: None,
            model_digest: None,
            synthetic: false,
        }
    }

    pub fn scored(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Aligned plain-text rendering.
    pub fn to_table(&self) -> String {
        let fmt = |r: Option<f64>| r.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
        let mut out = String::new();
        if self.synthetic {
            out.push_str("# SYNTHETIC CORPUS: no clinical validity\n");
        }
        let rows: [(&str, String); 11] = [
            ("sensitivity", fmt(self.sensitivity)),
            ("specificity", fmt(self.specificity)),
            ("accuracy", fmt(self.accuracy)),
            ("tp", self.tp.to_string()),
            ("fp", self.fp.to_string()),
            ("tn", self.tn.to_string()),
            ("fn", self.fn_.to_string()),
            ("n_train", self.n_train.to_string()),
            ("n_test", self.n_test.to_string()),
            ("n_skipped", self.n_skipped.to_string()),
            ("model_digest", self.model_digest.clone().unwrap_or_else(|| "-".into())),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<14}{v:>12}");
        }
        out
    }
}
