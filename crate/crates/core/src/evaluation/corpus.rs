use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::EvalError;
use crate::audio::{self, AudioBuffer};
use crate::label::Label;

pub const MANIFEST_FILE: &str = "manifest.csv";
/// Present in the root of generated corpora; its presence marks reports as synthetic.
pub const SYNTHETIC_MARKER: &str = "SYNTHETIC";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub path: PathBuf,
    pub label: Label,
    pub subject_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub root: PathBuf,
    pub entries: Vec<CorpusEntry>,
    pub synthetic: bool,
}

/// A corpus with every recording decoded to the canonical rate.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    /// Aligned with `corpus.entries`.
    pub audio: Vec<AudioBuffer>,
}

impl LoadedCorpus {
    pub fn entries(&self) -> &[CorpusEntry] {
        &self.corpus.entries
    }

    pub fn synthetic(&self) -> bool {
        self.corpus.synthetic
    }
}

/// Subject id from a file name: the part before the first `__`, else the whole stem.
pub(crate) fn subject_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match stem.find("__") {
        Some(i) if i > 0 => stem[..i].to_string(),
        _ => stem,
    }
}

#[derive(Deserialize)]
struct ManifestRow {
    path: String,
    label: String,
    subject_id: String,
}

fn load_manifest(root: &Path, manifest: &Path) -> Result<Vec<CorpusEntry>, EvalError> {
    let text = fs::read_to_string(manifest).map_err(|e| EvalError::io(manifest, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| EvalError::BadManifestRow {
            row: 0,
            reason: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "label", "subject_id"] {
        return Err(EvalError::BadManifestRow {
            row: 0,
            reason: "header must be path,label,subject_id".into(),
        });
    }
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in reader.deserialize::<ManifestRow>().enumerate() {
        let row_no = i + 1;
        let bad = |reason: String| EvalError::BadManifestRow { row: row_no, reason };
        let row = row.map_err(|e| bad(e.to_string()))?;
        let label: Label = row
            .label
            .parse()
            .map_err(|e: crate::label::UnknownLabel| bad(e.to_string()))?;
        if row.subject_id.is_empty() {
            return Err(bad("empty subject_id".into()));
        }
        if row.path.is_empty() {
            return Err(bad("empty path".into()));
        }
        let path = root.join(&row.path);
        if !seen.insert(path.clone()) {
            return Err(EvalError::DuplicatePath(path));
        }
        entries.push(CorpusEntry {
            path,
            label,
            subject_id: row.subject_id,
        });
    }
    Ok(entries)
}

fn load_directories(root: &Path) -> Result<Vec<CorpusEntry>, EvalError> {
    let mut entries = Vec::new();
    for label in [Label::Normal, Label::Asphyxia] {
        let dir = root.join(label.as_str());
        if !dir.is_dir() {
            return Err(EvalError::MissingClassDir {
                root: root.to_path_buf(),
                class: label.as_str(),
            });
        }
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| EvalError::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("wav")))
            .collect();
        paths.sort();
        entries.extend(paths.into_iter().map(|path| CorpusEntry {
            subject_id: subject_from_path(&path),
            path,
            label,
        }));
    }
    Ok(entries)
}

/// Reads `manifest.csv` when present, otherwise `normal/` and `asphyxia/`.
pub fn load_corpus(root: impl AsRef<Path>) -> Result<Corpus, EvalError> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(EvalError::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory not found"),
        ));
    }
    let manifest = root.join(MANIFEST_FILE);
    let entries = if manifest.is_file() {
        load_manifest(root, &manifest)?
    } else {
        load_directories(root)?
    };
    Ok(Corpus {
        root: root.to_path_buf(),
        entries,
        synthetic: root.join(SYNTHETIC_MARKER).is_file(),
    })
}

/// Decodes every recording (in parallel, order preserved) at `rate_hz`.
pub fn load_audio(corpus: Corpus, rate_hz: u32) -> Result<LoadedCorpus, EvalError> {
    let audio = corpus
        .entries
        .par_iter()
        .map(|e| {
            let bytes = fs::read(&e.path).map_err(|err| EvalError::io(&e.path, err))?;
            audio::decode_wav(&bytes, rate_hz).map_err(|source| EvalError::Audio {
                path: e.path.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LoadedCorpus { corpus, audio })
}
