use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{CorpusEntry, EvalError};
use crate::label::Label;

/// Subject-disjoint train/test partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitPlan {
    pub train_subjects: BTreeSet<String>,
    pub test_subjects: BTreeSet<String>,
    pub fraction: f64,
    pub seed: u64,
}

impl SplitPlan {
    pub fn train_indices(&self, entries: &[CorpusEntry]) -> Vec<usize> {
        indices_in(entries, &self.train_subjects)
    }

    pub fn test_indices(&self, entries: &[CorpusEntry]) -> Vec<usize> {
        indices_in(entries, &self.test_subjects)
    }
}

pub(crate) fn indices_in(entries: &[CorpusEntry], subjects: &BTreeSet<String>) -> Vec<usize> {
    entries
        .iter()
        .enumerate()
        .filter(|(_, e)| subjects.contains(&e.subject_id))
        .map(|(i, _)| i)
        .collect()
}

/// Sorted subject lists per class.
fn subjects_by_class(entries: &[CorpusEntry]) -> Result<[Vec<String>; 2], EvalError> {
    let mut labels: BTreeMap<&str, Label> = BTreeMap::new();
    for e in entries {
        match labels.insert(&e.subject_id, e.label) {
            Some(prev) if prev != e.label => return Err(EvalError::MixedSubjectLabels(e.subject_id.clone())),
            _ => {}
        }
    }
    let pick = |l: Label| {
        labels
            .iter()
            .filter(|(_, &v)| v == l)
            .map(|(k, _)| k.to_string())
            .collect::<Vec<_>>()
    };
    Ok([pick(Label::Normal), pick(Label::Asphyxia)])
}

fn require_two_per_class(classes: &[Vec<String>; 2]) -> Result<(), EvalError> {
    for (subjects, label) in classes.iter().zip([Label::Normal, Label::Asphyxia]) {
        if subjects.len() < 2 {
            return Err(EvalError::TooFewSubjects(format!(
                "class {label} has {} subject(s), need at least 2",
                subjects.len()
            )));
        }
    }
    Ok(())
}

/// Shuffles each class's subjects with `seed` and sends about `fraction` of
/// them (at least one, and leaving at least one) to the training side.
pub fn split_by_subject(entries: &[CorpusEntry], fraction: f64, seed: u64) -> Result<SplitPlan, EvalError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EvalError::InvalidParameter(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut classes = subjects_by_class(entries)?;
    require_two_per_class(&classes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_subjects = BTreeSet::new();
    let mut test_subjects = BTreeSet::new();
    for subjects in classes.iter_mut() {
        subjects.shuffle(&mut rng);
        let n = subjects.len();
        let n_train = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
        train_subjects.extend(subjects[..n_train].iter().cloned());
        test_subjects.extend(subjects[n_train..].iter().cloned());
    }
    Ok(SplitPlan {
        train_subjects,
        test_subjects,
        fraction,
        seed,
    })
}

/// Deals subjects into `k` folds: each class is shuffled, the classes are
/// concatenated, and subject `i` goes to fold `i mod k`. Returns the held-out
/// subjects of each fold.
pub fn subject_folds(entries: &[CorpusEntry], k: usize, seed: u64) -> Result<Vec<BTreeSet<String>>, EvalError> {
    let mut classes = subjects_by_class(entries)?;
    require_two_per_class(&classes)?;
    let total = classes[0].len() + classes[1].len();
    if k < 2 || k > total {
        return Err(EvalError::TooFewSubjects(format!(
            "{k}-fold cross-validation needs 2 <= k <= {total} subjects"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![BTreeSet::new(); k];
    let mut i = 0;
    for subjects in classes.iter_mut() {
        subjects.shuffle(&mut rng);
        for s in subjects.iter() {
            folds[i % k].insert(s.clone());
            i += 1;
        }
    }
    Ok(folds)
}
