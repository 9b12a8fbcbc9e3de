use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{DatasetManifest, Label, SplitTag};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Challenge,
    StratifiedKfold,
    GroupedKfold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
    pub folds: Vec<Fold>,
    /// Patients with samples on both sides of some fold.
    pub patient_overlap: usize,
}

impl SplitPlan {
    fn from_assignment(kind: SplitKind, seed: u64, m: &DatasetManifest, fold_of: &[usize], k: usize) -> Self {
        let folds: Vec<Fold> = (0..k)
            .map(|f| {
                let (test, train): (Vec<_>, Vec<_>) = m.records.iter().zip(fold_of).partition(|(_, &g)| g == f);
                Fold {
                    train: train.into_iter().map(|(r, _)| r.id().to_string()).collect(),
                    test: test.into_iter().map(|(r, _)| r.id().to_string()).collect(),
                }
            })
            .collect();
        let mut plan = SplitPlan { kind, seed, folds, patient_overlap: 0 };
        plan.patient_overlap = plan.overlapping_patients(m).len();
        plan
    }

    /// Patients appearing in both train and test of any fold.
    pub fn overlapping_patients(&self, m: &DatasetManifest) -> BTreeSet<String> {
        let patient: BTreeMap<&str, &str> = m.records.iter().map(|r| (r.id(), r.patient_id.as_str())).collect();
        let mut out = BTreeSet::new();
        for f in &self.folds {
            let train: BTreeSet<&str> = f.train.iter().filter_map(|id| patient.get(id.as_str()).copied()).collect();
            for id in &f.test {
                if let Some(&p) = patient.get(id.as_str()) {
                    if train.contains(p) {
                        out.insert(p.to_string());
                    }
                }
            }
        }
        out
    }
}

/// One fold taken from the manifest's own train/test tags.
pub fn split_challenge(m: &DatasetManifest) -> Result<SplitPlan> {
    if let Some(r) = m.records.iter().find(|r| r.split == SplitTag::Unassigned) {
        return Err(Error::Split(format!("{} has no train/test tag", r.path)));
    }
    let fold_of: Vec<usize> = m.records.iter().map(|r| usize::from(r.split == SplitTag::Train)).collect();
    let mut plan = SplitPlan::from_assignment(SplitKind::Challenge, 0, m, &fold_of, 2);
    plan.folds.truncate(1);
    Ok(plan)
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Split(format!("need at least 2 folds, got {k}")));
    }
    Ok(())
}

/// Per-class seeded shuffle, then round-robin over folds. The round-robin
/// position carries over between classes so fold sizes stay balanced too.
pub fn stratified_kfold(m: &DatasetManifest, k: usize, seed: u64) -> Result<SplitPlan> {
    check_k(k)?;
    let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, r) in m.records.iter().enumerate() {
        by_class.entry(r.label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; m.len()];
    let mut next = 0;
    for (label, mut idx) in by_class {
        if idx.len() < k {
            return Err(Error::Split(format!("class {label} has {} samples, fewer than {k} folds", idx.len())));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(SplitPlan::from_assignment(SplitKind::StratifiedKfold, seed, m, &fold_of, k))
}

/// Patient-level folds: no patient has samples in both train and test.
///
/// Patients are grouped by majority label (shuffled within each label),
/// stably sorted by sample count descending, and each is placed in the fold
/// with the fewest samples; ties go to the fold with fewest patients of that
/// label, then the lowest index.
pub fn grouped_kfold(m: &DatasetManifest, k: usize, seed: u64) -> Result<SplitPlan> {
    check_k(k)?;
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in m.records.iter().enumerate() {
        members.entry(r.patient_id.as_str()).or_default().push(i);
    }
    if members.len() < k {
        return Err(Error::Split(format!("{} patients, fewer than {k} folds", members.len())));
    }
    let majority = |idx: &[usize]| {
        let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
        for &i in idx {
            *counts.entry(m.records[i].label).or_default() += 1;
        }
        let top = counts.values().copied().max().unwrap_or(0);
        counts.into_iter().find(|&(_, c)| c == top).map(|(l, _)| l).unwrap_or(Label::Unlabeled)
    };
    let mut by_label: BTreeMap<Label, Vec<(&str, usize)>> = BTreeMap::new();
    for (p, idx) in &members {
        by_label.entry(majority(idx)).or_default().push((p, idx.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<(Label, &str, usize)> = Vec::new();
    for (label, mut ps) in by_label {
        ps.shuffle(&mut rng);
        order.extend(ps.into_iter().map(|(p, n)| (label, p, n)));
    }
    order.sort_by_key(|e| std::cmp::Reverse(e.2));

    let mut size = vec![0usize; k];
    let mut label_count: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    let mut fold_of_patient: BTreeMap<&str, usize> = BTreeMap::new();
    for (label, p, n) in order {
        let lc = label_count.entry(label).or_insert_with(|| vec![0; k]);
        let f = (0..k).min_by_key(|&f| (size[f], lc[f], f)).expect("k ≥ 2");
        size[f] += n;
        lc[f] += 1;
        fold_of_patient.insert(p, f);
    }
    let fold_of: Vec<usize> = m.records.iter().map(|r| fold_of_patient[r.patient_id.as_str()]).collect();
    let plan = SplitPlan::from_assignment(SplitKind::GroupedKfold, seed, m, &fold_of, k);
    if plan.patient_overlap != 0 {
        return Err(Error::Leakage("grouped split placed a patient on both sides".into()));
    }
    Ok(plan)
}
