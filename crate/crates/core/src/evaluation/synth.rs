use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Corpus, CorpusEntry, EvalError, MANIFEST_FILE, SYNTHETIC_MARKER};
use crate::audio::{self, AudioBuffer, CANONICAL_RATE_HZ};
use crate::features;
use crate::label::Label;

/// Knobs of the two-class synthetic cry generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub subjects_per_class: usize,
    pub recordings_per_subject: usize,
    pub seed: u64,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub f0_normal_hz: f64,
    pub f0_asphyxia_hz: f64,
    /// Each subject's F0 is drawn uniformly within this many Hz of the class F0.
    pub subject_offset_hz: f64,
    /// Per-recording F0 jitter around the subject's F0.
    pub recording_jitter_hz: f64,
    pub snr_db: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            subjects_per_class: 20,
            recordings_per_subject: 3,
            seed: 42,
            duration_s: 4.0,
            sample_rate_hz: CANONICAL_RATE_HZ,
            f0_normal_hz: 450.0,
            f0_asphyxia_hz: 650.0,
            subject_offset_hz: 30.0,
            recording_jitter_hz: 8.0,
            snr_db: 20.0,
        }
    }
}

impl SynthParams {
    pub fn new(subjects_per_class: usize, recordings_per_subject: usize, seed: u64) -> Self {
        Self {
            subjects_per_class,
            recordings_per_subject,
            seed,
            ..Self::default()
        }
    }

    fn class_f0(&self, label: Label) -> f64 {
        match label {
            Label::Normal => self.f0_normal_hz,
            Label::Asphyxia => self.f0_asphyxia_hz,
        }
    }
}

const HARMONICS: usize = 8;
const PEAK: f64 = 0.6;

/// One recording: leading silence, then cry bursts (harmonic stack with a
/// rise-fall pitch contour and tremolo) separated by short gaps, then white
/// noise at `params.snr_db`.
pub fn synthesize_recording(f0_hz: f64, params: &SynthParams, seed: u64) -> Result<AudioBuffer, EvalError> {
    let rate = params.sample_rate_hz as f64;
    let n = (params.duration_s * rate).round() as usize;
    if n == 0 || !(f0_hz > 0.0) || f0_hz * 2.0 >= rate {
        return Err(EvalError::InvalidParameter(format!(
            "cannot synthesize f0 {f0_hz} Hz over {} s",
            params.duration_s
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let tremolo_hz = rng.random_range(4.0..7.0);
    let mut t0 = rng.random_range(0.1..0.3);
    while t0 < params.duration_s - 0.3 {
        let len = rng.random_range(0.7..1.4_f64).min(params.duration_s - 0.1 - t0);
        let start = (t0 * rate) as usize;
        let end = ((t0 + len) * rate) as usize;
        let mut phase = 0.0;
        for (i, slot) in x.iter_mut().enumerate().take(end.min(n)).skip(start) {
            let u = (i - start) as f64 / (end - start) as f64;
            let contour = 1.0 + 0.06 * (PI * u).sin();
            let f = f0_hz * contour;
            phase += 2.0 * PI * f / rate;
            let env = (PI * u).sin().sqrt() * (0.8 + 0.2 * (2.0 * PI * tremolo_hz * u * len).sin());
            let mut s = 0.0;
            for k in 1..=HARMONICS {
                if f * k as f64 >= rate / 2.0 {
                    break;
                }
                s += (k as f64 * phase).sin() / k as f64;
            }
            *slot = env * s;
        }
        t0 += len + rng.random_range(0.1..0.35);
    }
    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= PEAK / peak);
    }
    let clean = AudioBuffer::new(x, params.sample_rate_hz).map_err(|e| EvalError::InvalidParameter(e.to_string()))?;
    features::add_noise(&clean, params.snr_db, rng.random()).map_err(|e| EvalError::InvalidParameter(e.to_string()))
}

/// Writes `normal/` and `asphyxia/` WAV files, `manifest.csv` and the
/// synthetic marker under `out_dir`. Byte-identical for a given seed.
pub fn generate_synthetic_corpus(out_dir: impl AsRef<Path>, params: &SynthParams) -> Result<Corpus, EvalError> {
    let root = out_dir.as_ref();
    if params.subjects_per_class == 0 || params.recordings_per_subject == 0 {
        return Err(EvalError::InvalidParameter(
            "need at least one subject per class and one recording per subject".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut entries = Vec::new();
    let mut manifest = String::from("path,label,subject_id\n");
    for label in [Label::Normal, Label::Asphyxia] {
        let dir = root.join(label.as_str());
        fs::create_dir_all(&dir).map_err(|e| EvalError::io(&dir, e))?;
        let prefix = &label.as_str()[..1];
        for s in 0..params.subjects_per_class {
            let subject = format!("{prefix}{s:03}");
            let subject_f0 =
                params.class_f0(label) + rng.random_range(-params.subject_offset_hz..=params.subject_offset_hz);
            for r in 0..params.recordings_per_subject {
                let jitter = rng.random_range(-params.recording_jitter_hz..=params.recording_jitter_hz);
                let buf = synthesize_recording(subject_f0 + jitter, params, rng.random())?;
                let rel = format!("{}/{subject}__rec{r}.wav", label.as_str());
                let path = root.join(&rel);
                fs::write(&path, audio::encode_wav_pcm16(&buf)).map_err(|e| EvalError::io(&path, e))?;
                manifest.push_str(&format!("{rel},{label},{subject}\n"));
                entries.push(CorpusEntry {
                    path,
                    label,
                    subject_id: subject.clone(),
                });
            }
        }
    }
    let manifest_path = root.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest).map_err(|e| EvalError::io(&manifest_path, e))?;
    let marker = root.join(SYNTHETIC_MARKER);
    fs::write(&marker, "generated corpus; no clinical validity\n").map_err(|e| EvalError::io(&marker, e))?;
    Ok(Corpus {
        root: root.to_path_buf(),
        entries,
        synthetic: true,
    })
}
