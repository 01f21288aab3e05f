//! Missing-data infill.
//!
//! Targets are decided on the source column according to the root category
//! ([`TargetRule`]); fill values for the statistical kinds are computed once on
//! the train rows and stored, so applying infill never looks at test statistics.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract_search::{nmcm_extract, ExtractFlags};
use crate::registry::ColtypeClass;
use crate::tidytable::CellValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InfillKind {
    #[serde(rename = "stdrdinfill")]
    TransformDefault,
    #[serde(rename = "zeroinfill")]
    Zero,
    #[serde(rename = "oneinfill")]
    One,
    #[serde(rename = "adjinfill")]
    Adjacent,
    #[serde(rename = "meaninfill")]
    Mean,
    #[serde(rename = "medianinfill")]
    Median,
    #[serde(rename = "modeinfill")]
    Mode,
    #[serde(rename = "negzeroinfill")]
    NegZero,
}

impl InfillKind {
    pub const ALL: [InfillKind; 8] = [
        InfillKind::TransformDefault,
        InfillKind::Zero,
        InfillKind::One,
        InfillKind::Adjacent,
        InfillKind::Mean,
        InfillKind::Median,
        InfillKind::Mode,
        InfillKind::NegZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InfillKind::TransformDefault => "stdrdinfill",
            InfillKind::Zero => "zeroinfill",
            InfillKind::One => "oneinfill",
            InfillKind::Adjacent => "adjinfill",
            InfillKind::Mean => "meaninfill",
            InfillKind::Median => "medianinfill",
            InfillKind::Mode => "modeinfill",
            InfillKind::NegZero => "negzeroinfill",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Which source cells count as infill targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetRule {
    /// Only missing cells.
    MissingOnly,
    /// Missing cells and text that is not a decimal number.
    NonNumeric,
    /// Missing cells and entries with no extractable numeric partition.
    NoNumericExtract(ExtractFlags),
}

pub fn mark_targets(col: &[CellValue], rule: TargetRule) -> Vec<bool> {
    match rule {
        TargetRule::MissingOnly => col.iter().map(CellValue::is_missing).collect(),
        TargetRule::NonNumeric => col.iter().map(|c| c.as_number().is_none()).collect(),
        TargetRule::NoNumericExtract(flags) => {
            let mut memo: HashMap<&str, bool> = HashMap::new();
            col.iter()
                .map(|c| match c {
                    CellValue::Missing => true,
                    CellValue::Number(_) => false,
                    CellValue::Text(s) => *memo
                        .entry(s.as_str())
                        .or_insert_with(|| nmcm_extract(s, flags).is_none()),
                })
                .collect()
        }
    }
}

/// Infill kind plus the train-basis fill value where one is needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfillSpec {
    pub kind: InfillKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<CellValue>,
}

impl InfillSpec {
    pub fn transform_default() -> Self {
        Self {
            kind: InfillKind::TransformDefault,
            fill: None,
        }
    }

    /// Computes the fill value from the non-target rows of a train column.
    pub fn fit(
        kind: InfillKind,
        col: &[CellValue],
        mask: &[bool],
        class: ColtypeClass,
    ) -> Result<Self> {
        let present = || {
            col.iter()
                .zip(mask)
                .filter(|(c, &m)| !m && !c.is_missing())
                .map(|(c, _)| c)
        };
        let fill = match kind {
            InfillKind::TransformDefault | InfillKind::Adjacent => None,
            InfillKind::Zero => Some(CellValue::Number(0.0)),
            InfillKind::One => Some(CellValue::Number(1.0)),
            InfillKind::NegZero => Some(CellValue::Number(-0.0)),
            InfillKind::Mean | InfillKind::Median => {
                if !matches!(class, ColtypeClass::NumericOutput | ColtypeClass::Passthrough) {
                    return Err(Error::Config(format!(
                        "{} requested on a {class:?} column",
                        kind.name()
                    )));
                }
                let mut values: Vec<f64> = present().filter_map(CellValue::as_number).collect();
                let v = if values.is_empty() {
                    0.0
                } else if kind == InfillKind::Mean {
                    values.iter().sum::<f64>() / values.len() as f64
                } else {
                    values.sort_by(f64::total_cmp);
                    let n = values.len();
                    if n % 2 == 1 {
                        values[n / 2]
                    } else {
                        (values[n / 2 - 1] + values[n / 2]) / 2.0
                    }
                };
                Some(CellValue::Number(v))
            }
            InfillKind::Mode => Some(mode(present()).unwrap_or(CellValue::Number(0.0))),
        };
        Ok(Self { kind, fill })
    }

    pub fn apply(&self, col: &mut [CellValue], mask: &[bool]) {
        match (self.kind, &self.fill) {
            (InfillKind::TransformDefault, _) => {}
            (InfillKind::Adjacent, _) => adjacent_fill(col, mask),
            (_, Some(v)) => {
                for (c, &m) in col.iter_mut().zip(mask) {
                    if m {
                        *c = v.clone();
                    }
                }
            }
            (_, None) => {}
        }
    }
}

/// Most frequent value; ties go to the smallest (numeric order for numbers).
fn mode<'a>(values: impl Iterator<Item = &'a CellValue>) -> Option<CellValue> {
    let mut counts: Vec<(&CellValue, usize)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for v in values {
        let key = v.as_text().map(|t| t.into_owned()).unwrap_or_default();
        match index.get(&key) {
            Some(&i) => counts[i].1 += 1,
            None => {
                index.insert(key, counts.len());
                counts.push((v, 1));
            }
        }
    }
    counts
        .into_iter()
        .min_by(|(a, ca), (b, cb)| cb.cmp(ca).then_with(|| value_order(a, b)))
        .map(|(v, _)| v.clone())
}

fn value_order(a: &CellValue, b: &CellValue) -> Ordering {
    match (a, b) {
        (CellValue::Number(x), CellValue::Number(y)) => x.total_cmp(y),
        _ => a.as_text().cmp(&b.as_text()),
    }
}

/// Previous non-target value; leading targets take the next one; a column
/// with no non-target rows fills with zero.
fn adjacent_fill(col: &mut [CellValue], mask: &[bool]) {
    let Some(first) = mask.iter().position(|&m| !m) else {
        for c in col.iter_mut() {
            *c = CellValue::Number(0.0);
        }
        return;
    };
    let mut last = col[first].clone();
    for i in 0..col.len() {
        if mask[i] {
            col[i] = last.clone();
        } else {
            last = col[i].clone();
        }
    }
}
