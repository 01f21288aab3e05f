//! Shuffle-permutation feature importance.
//!
//! `metric1` is per source column: all columns derived from the source are
//! shuffled with one shared permutation and the score drop is recorded, so
//! higher means more important. `metric2` is per derived column: every
//! sibling column from the same source is shuffled except the target, and the
//! score drop is recorded; a low value means the target alone carries most of
//! what the source contributes.
//!
//! Scores are oriented so a drop is positive for both tasks: accuracy for
//! classification, mean squared log error (negated) for regression.

mod tree;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tidytable::{CellValue, TidyTable};
use crate::treeengine::{apply, FitArtifact};

pub use tree::{builtin_tree, BaggedTrees, Forest, Tree, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

/// A model that can be trained on encoded features.
pub trait PredictorAdapter: Sync {
    type Handle: Sync;
    fn task(&self) -> Task;
    fn train(&self, features: &TidyTable, labels: &[CellValue]) -> Result<Self::Handle>;
    fn predict(&self, handle: &Self::Handle, features: &TidyTable) -> Vec<CellValue>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceConfig {
    pub val_fraction: f64,
    pub seed: u64,
    /// Permutations averaged per feature.
    pub repeats: usize,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        Self {
            val_fraction: 0.2,
            seed: 0,
            repeats: 1,
        }
    }
}

pub const MIN_VALIDATION_ROWS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub task: Task,
    /// `accuracy` or `msle`.
    pub metric: String,
    pub base_score: f64,
    pub metric1: BTreeMap<String, f64>,
    pub metric2: BTreeMap<String, f64>,
    pub seed: u64,
    pub validation_rows: usize,
}

impl ImportanceReport {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let value = serde_json::to_value(self).map_err(|e| Error::Malformed(e.to_string()))?;
        let mut out = serde_json::to_vec_pretty(&value).map_err(|e| Error::Malformed(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }

    /// Source features by metric1, most important first.
    pub fn ranked(&self) -> Vec<(&String, f64)> {
        let mut v: Vec<(&String, f64)> = self.metric1.iter().map(|(k, &s)| (k, s)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "base {}: {:.6} ({} validation rows, seed {})\n\nmetric1 (higher = more important)\n",
            self.metric, self.base_score, self.validation_rows, self.seed
        );
        for (k, s) in self.ranked() {
            out.push_str(&format!("  {s:>+10.6}  {k}\n"));
        }
        out.push_str("\nmetric2 (lower = more important within its source)\n");
        let mut m2: Vec<(&String, f64)> = self.metric2.iter().map(|(k, &s)| (k, s)).collect();
        m2.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        for (k, s) in m2 {
            out.push_str(&format!("  {s:>+10.6}  {k}\n"));
        }
        out
    }
}

pub fn accuracy(pred: &[CellValue], truth: &[CellValue]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = pred
        .iter()
        .zip(truth)
        .filter(|(p, t)| p.as_text() == t.as_text())
        .count();
    hits as f64 / truth.len() as f64
}

/// Mean squared log error; negative values are clamped to 0 before the log.
pub fn msle(pred: &[CellValue], truth: &[CellValue]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let lg = |c: &CellValue| c.as_number().unwrap_or(0.0).max(0.0).ln_1p();
    let s: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (lg(p) - lg(t)).powi(2))
        .sum();
    s / truth.len() as f64
}

/// Score where higher is better.
fn oriented(task: Task, pred: &[CellValue], truth: &[CellValue]) -> f64 {
    match task {
        Task::Classification => accuracy(pred, truth),
        Task::Regression => -msle(pred, truth),
    }
}

fn reported(task: Task, oriented: f64) -> f64 {
    match task {
        Task::Classification => oriented,
        Task::Regression => -oriented,
    }
}

/// Permutation for one (seed, feature, repeat) triple.
pub fn feature_permutation(seed: u64, feature: usize, repeat: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((feature as u64) << 20) | repeat as u64);
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng);
    p
}

fn shuffled(table: &TidyTable, headers: &[&String], perm: &[usize]) -> TidyTable {
    let (names, mut cols) = table.clone().into_parts();
    for (name, col) in names.iter().zip(cols.iter_mut()) {
        if headers.contains(&name) {
            *col = perm.iter().map(|&r| col[r].clone()).collect();
        }
    }
    TidyTable::new(names, cols).expect("same shape")
}

/// Splits, encodes with the artifact, trains on the train split and scores
/// shuffled validation copies. `labels` is aligned with `table` rows.
pub fn permutation_importance<A: PredictorAdapter>(
    artifact: &FitArtifact,
    table: &TidyTable,
    labels: &[CellValue],
    adapter: &A,
    cfg: &ImportanceConfig,
) -> Result<ImportanceReport> {
    let n = table.row_count();
    if labels.len() != n {
        return Err(Error::Importance(format!("{} labels for {n} rows", labels.len())));
    }
    if !(0.0..1.0).contains(&cfg.val_fraction) {
        return Err(Error::Importance("val_fraction must be in [0, 1)".into()));
    }
    let n_val = (n as f64 * cfg.val_fraction).round() as usize;
    if n_val < MIN_VALIDATION_ROWS || n_val >= n {
        return Err(Error::Importance(format!(
            "validation split has {n_val} rows; need at least {MIN_VALIDATION_ROWS} and a non-empty train split"
        )));
    }
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let (val_rows, train_rows) = rows.split_at(n_val);

    let task = adapter.task();
    let val_labels: Vec<CellValue> = val_rows.iter().map(|&r| labels[r].clone()).collect();
    let train_labels: Vec<CellValue> = train_rows.iter().map(|&r| labels[r].clone()).collect();
    if task == Task::Classification {
        let first = val_labels[0].as_text();
        if val_labels.iter().all(|l| l.as_text() == first) {
            return Err(Error::Importance(
                "validation split holds a single class; choose another seed".into(),
            ));
        }
    }

    let encoded = apply(artifact, table)?;
    let train = encoded.select_rows(train_rows);
    let val = encoded.select_rows(val_rows);
    let handle = adapter.train(&train, &train_labels)?;
    let base = oriented(task, &adapter.predict(&handle, &val), &val_labels);

    let score_with = |headers: &[&String], feature: usize| -> f64 {
        let repeats = cfg.repeats.max(1);
        let total: f64 = (0..repeats)
            .map(|k| {
                let perm = feature_permutation(cfg.seed, feature, k, n_val);
                let v = shuffled(&val, headers, &perm);
                base - oriented(task, &adapter.predict(&handle, &v), &val_labels)
            })
            .sum();
        total / repeats as f64
    };

    let mut metric1 = BTreeMap::new();
    let mut metric2 = BTreeMap::new();
    for (fi, (h, sf)) in artifact.sources().enumerate() {
        let derived: Vec<&String> = sf.retained_headers().collect();
        metric1.insert(h.clone(), score_with(&derived, fi));
        for target in &derived {
            let others: Vec<&String> = derived.iter().copied().filter(|d| d != target).collect();
            let delta = if others.is_empty() { 0.0 } else { score_with(&others, fi) };
            metric2.insert((*target).clone(), delta);
        }
    }

    Ok(ImportanceReport {
        task,
        metric: match task {
            Task::Classification => "accuracy".into(),
            Task::Regression => "msle".into(),
        },
        base_score: reported(task, base),
        metric1,
        metric2,
        seed: cfg.seed,
        validation_rows: n_val,
    })
}
