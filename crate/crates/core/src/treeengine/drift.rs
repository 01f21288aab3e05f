//! Distribution drift between the train basis and new data.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tidytable::{column_stats, infer_coltype, CellValue, ColType, TidyTable};

use super::FitArtifact;

const TOP_K: usize = 10;

/// Train-basis summary of a source column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceProfile {
    Numeric {
        mean: f64,
        std: f64,
    },
    Categoric {
        /// Most frequent entries with their share of non-missing rows.
        top: Vec<(String, f64)>,
        uniques: BTreeSet<String>,
    },
    Empty,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn shares(col: &[CellValue]) -> (Vec<(String, f64)>, usize) {
    let stats = column_stats(col);
    let present: usize = stats.freq.values().sum();
    let mut ranked: Vec<(String, usize)> = stats.freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let out = ranked
        .into_iter()
        .map(|(k, c)| (k, c as f64 / present.max(1) as f64))
        .collect();
    (out, present)
}

impl SourceProfile {
    pub fn of(col: &[CellValue]) -> Self {
        match infer_coltype(col) {
            ColType::AllMissing => SourceProfile::Empty,
            ColType::Numeric => {
                let values: Vec<f64> = col.iter().filter_map(CellValue::as_number).collect();
                let (mean, std) = mean_std(&values);
                SourceProfile::Numeric { mean, std }
            }
            ColType::Categoric => {
                let (ranked, _) = shares(col);
                let uniques = ranked.iter().map(|(k, _)| k.clone()).collect();
                SourceProfile::Categoric {
                    top: ranked.into_iter().take(TOP_K).collect(),
                    uniques,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericDrift {
    pub train_mean: f64,
    pub train_std: f64,
    pub new_mean: f64,
    pub new_std: f64,
    pub mean_delta: f64,
    pub std_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqRow {
    pub entry: String,
    pub train_share: f64,
    pub new_share: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricDrift {
    pub top: Vec<FreqRow>,
    /// Share of non-missing new rows whose entry was never seen in train.
    pub unseen_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceDrift {
    Numeric(NumericDrift),
    Categoric(CategoricDrift),
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub sources: Vec<(String, SourceDrift)>,
}

impl DriftReport {
    pub fn get(&self, header: &str) -> Option<&SourceDrift> {
        self.sources.iter().find(|(h, _)| h == header).map(|(_, d)| d)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (h, d) in &self.sources {
            match d {
                SourceDrift::Numeric(n) => out.push_str(&format!(
                    "{h}: mean {:.6} -> {:.6} (delta {:+.6}), std {:.6} -> {:.6} (delta {:+.6})\n",
                    n.train_mean, n.new_mean, n.mean_delta, n.train_std, n.new_std, n.std_delta
                )),
                SourceDrift::Categoric(c) => {
                    out.push_str(&format!("{h}: unseen rate {:.4}\n", c.unseen_rate));
                    for r in &c.top {
                        out.push_str(&format!(
                            "  {:<24} {:.4} -> {:.4} (delta {:+.4})\n",
                            r.entry, r.train_share, r.new_share, r.delta
                        ));
                    }
                }
                SourceDrift::Empty => out.push_str(&format!("{h}: no train values\n")),
            }
        }
        out
    }
}

/// Compares new data with the stored train profiles. Deltas are new − train.
pub fn drift_report(artifact: &FitArtifact, new: &TidyTable) -> Result<DriftReport> {
    let mut sources = Vec::new();
    for (h, sf) in artifact.sources() {
        let col = new.column(h).ok_or_else(|| Error::MissingColumn(h.clone()))?;
        let d = match &sf.profile {
            SourceProfile::Empty => SourceDrift::Empty,
            SourceProfile::Numeric { mean, std } => {
                let values: Vec<f64> = col.iter().filter_map(CellValue::as_number).collect();
                let (new_mean, new_std) = mean_std(&values);
                SourceDrift::Numeric(NumericDrift {
                    train_mean: *mean,
                    train_std: *std,
                    new_mean,
                    new_std,
                    mean_delta: new_mean - mean,
                    std_delta: new_std - std,
                })
            }
            SourceProfile::Categoric { top, uniques } => {
                let (new_shares, present) = shares(col);
                let unseen = col
                    .iter()
                    .filter_map(CellValue::as_text)
                    .filter(|t| !uniques.contains(t.as_ref()))
                    .count();
                let rows = top
                    .iter()
                    .map(|(entry, train_share)| {
                        let new_share = new_shares
                            .iter()
                            .find(|(k, _)| k == entry)
                            .map_or(0.0, |(_, s)| *s);
                        FreqRow {
                            entry: entry.clone(),
                            train_share: *train_share,
                            new_share,
                            delta: new_share - train_share,
                        }
                    })
                    .collect();
                SourceDrift::Categoric(CategoricDrift {
                    top: rows,
                    unseen_rate: if present == 0 { 0.0 } else { unseen as f64 / present as f64 },
                })
            }
        };
        sources.push((h.clone(), d));
    }
    Ok(DriftReport { sources })
}
