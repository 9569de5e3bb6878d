use cryscreen::{Diagnosis, Label};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentOut {
    pub start_s: f64,
    pub label: Label,
    pub decision_value: f64,
}

/// JSON shape shared by `diagnose --json` and `POST /v1/diagnose`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseResponse {
    pub verdict: Label,
    pub confidence: f64,
    pub segments: Vec<SegmentOut>,
    pub elapsed_ms: u64,
    pub model_digest: String,
    pub warnings: Vec<String>,
}

impl From<&Diagnosis> for DiagnoseResponse {
    fn from(d: &Diagnosis) -> Self {
        Self {
            verdict: d.verdict,
            confidence: d.confidence,
            segments: d
                .segment_verdicts
                .iter()
                .map(|s| SegmentOut {
                    start_s: s.start_s,
                    label: s.label,
                    decision_value: s.decision_value,
                })
                .collect(),
            elapsed_ms: d.elapsed_ms(),
            model_digest: d.model_digest.clone(),
            warnings: d.warnings.clone(),
        }
    }
}

/// Error body of the HTTP service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}
