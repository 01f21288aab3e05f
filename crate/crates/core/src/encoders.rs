//! Baseline categoric and numeric transforms.
//!
//! Categoric encoders share one ranking: entries sorted by train frequency
//! (descending), ties alphabetical. Code 0 (or the all-zero activation) is
//! reserved for missing and unseen entries.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infill::{mark_targets, TargetRule};
use crate::registry::CategoryKey;
use crate::tidytable::{column_stats, infer_coltype, CellValue, ColType, UniqueSetStats};

/// Default cardinality above which automation switches to ordinal encoding.
pub const DEFAULT_CATEGORY_THRESHOLD: usize = 255;

/// Train entries in rank order; entry `i` carries code `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeMap {
    pub entries: Vec<String>,
}

impl CodeMap {
    pub fn fit(col: &[CellValue]) -> Self {
        Self::from_stats(&column_stats(col))
    }

    pub fn from_stats(stats: &UniqueSetStats) -> Self {
        let mut ranked: Vec<(&String, usize)> = stats.freq.iter().map(|(k, &c)| (k, c)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Self {
            entries: ranked.into_iter().map(|(k, _)| k.clone()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry → 1-based code.
    pub fn index(&self) -> HashMap<&str, usize> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_str(), i + 1))
            .collect()
    }

    pub fn decode(&self, code: usize) -> Option<&str> {
        code.checked_sub(1)
            .and_then(|i| self.entries.get(i))
            .map(String::as_str)
    }

    /// Code per row; 0 for missing or unseen.
    pub fn codes(&self, col: &[CellValue]) -> Vec<usize> {
        let index = self.index();
        col.iter()
            .map(|c| match c {
                CellValue::Text(s) => index.get(s.as_str()).copied().unwrap_or(0),
                CellValue::Number(_) => c
                    .as_text()
                    .and_then(|t| index.get(t.as_ref()).copied())
                    .unwrap_or(0),
                CellValue::Missing => 0,
            })
            .collect()
    }
}

fn flag(b: bool) -> CellValue {
    CellValue::Number(if b { 1.0 } else { 0.0 })
}

/// Uppercases text cells (simple one-to-one case mapping). Numbers become
/// their canonical text; missing stays missing. `active = false` passes
/// text through unchanged.
pub fn upcs(col: &[CellValue], active: bool) -> Vec<CellValue> {
    col.iter()
        .map(|c| match c.as_text() {
            None => CellValue::Missing,
            Some(t) if active => CellValue::text(simple_uppercase(&t)),
            Some(t) => CellValue::text(t.into_owned()),
        })
        .collect()
}

pub fn simple_uppercase(s: &str) -> String {
    s.chars()
        .map(|c| {
            let mut up = c.to_uppercase();
            match (up.next(), up.next()) {
                (Some(u), None) => u,
                _ => c,
            }
        })
        .collect()
}

pub fn narw(col: &[CellValue], rule: TargetRule) -> Vec<CellValue> {
    mark_targets(col, rule).into_iter().map(flag).collect()
}

pub fn ord3_apply(map: &CodeMap, col: &[CellValue]) -> Vec<CellValue> {
    map.codes(col)
        .into_iter()
        .map(|c| CellValue::Number(c as f64))
        .collect()
}

/// Fits and applies ordinal encoding in one go.
pub fn ord3(col: &[CellValue]) -> (Vec<CellValue>, CodeMap) {
    let map = CodeMap::fit(col);
    (ord3_apply(&map, col), map)
}

/// One column per train entry, in rank order.
pub fn onht_apply(map: &CodeMap, col: &[CellValue]) -> Vec<Vec<CellValue>> {
    let codes = map.codes(col);
    (1..=map.len())
        .map(|k| codes.iter().map(|&c| flag(c == k)).collect())
        .collect()
}

pub fn onht(col: &[CellValue]) -> (Vec<Vec<CellValue>>, CodeMap) {
    let map = CodeMap::fit(col);
    (onht_apply(&map, col), map)
}

/// Two-entry encoding: `one` is the more frequent entry (alphabetical on ties).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryFit {
    pub one: String,
    pub zero: String,
}

impl BinaryFit {
    pub fn fit(col: &[CellValue]) -> Result<Self> {
        let map = CodeMap::fit(col);
        if map.len() != 2 {
            return Err(Error::Precondition(format!(
                "bnry needs exactly 2 distinct entries, found {}",
                map.len()
            )));
        }
        Ok(Self {
            one: map.entries[0].clone(),
            zero: map.entries[1].clone(),
        })
    }

    /// Missing and unseen entries take the mode's code.
    pub fn apply(&self, col: &[CellValue]) -> Vec<CellValue> {
        col.iter()
            .map(|c| flag(c.as_text().as_deref() != Some(self.zero.as_str())))
            .collect()
    }
}

pub fn bnry(col: &[CellValue]) -> Result<(Vec<CellValue>, BinaryFit)> {
    let fit = BinaryFit::fit(col)?;
    Ok((fit.apply(col), fit))
}

/// Bits needed for codes `0..=n`, i.e. `ceil(log2(n + 1))`; at least 1.
pub fn binary_width(n: usize) -> usize {
    ((usize::BITS - n.leading_zeros()) as usize).max(1)
}

/// Code `code` rendered as `width` big-endian bit columns.
pub fn code_bits(code: usize, width: usize) -> impl Iterator<Item = bool> {
    (0..width).map(move |j| (code >> (width - 1 - j)) & 1 == 1)
}

pub fn b1010_apply(map: &CodeMap, col: &[CellValue]) -> Vec<Vec<CellValue>> {
    let width = binary_width(map.len());
    let codes = map.codes(col);
    (0..width)
        .map(|j| {
            codes
                .iter()
                .map(|&c| flag((c >> (width - 1 - j)) & 1 == 1))
                .collect()
        })
        .collect()
}

pub fn b1010(col: &[CellValue]) -> (Vec<Vec<CellValue>>, CodeMap) {
    let map = CodeMap::fit(col);
    (b1010_apply(&map, col), map)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormFit {
    /// z-score with population standard deviation. `residual` is the mean of
    /// `x - mean` left over from rounding `mean`; it is subtracted too so
    /// tightly clustered columns still come out centred.
    Zscore {
        mean: f64,
        std: f64,
        #[serde(default)]
        residual: f64,
    },
    MinMax { min: f64, max: f64, mean: f64 },
}

impl NormFit {
    pub fn zscore(col: &[CellValue]) -> Self {
        let values: Vec<f64> = col.iter().filter_map(CellValue::as_number).collect();
        if values.is_empty() {
            return NormFit::Zscore {
                mean: 0.0,
                std: 0.0,
                residual: 0.0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let residual = values.iter().map(|v| v - mean).sum::<f64>() / n;
        let var = values
            .iter()
            .map(|v| (v - mean) - residual)
            .map(|d| d * d)
            .sum::<f64>()
            / n;
        NormFit::Zscore {
            mean,
            std: var.sqrt(),
            residual,
        }
    }

    pub fn minmax(col: &[CellValue]) -> Self {
        let values: Vec<f64> = col.iter().filter_map(CellValue::as_number).collect();
        if values.is_empty() {
            return NormFit::MinMax {
                min: 0.0,
                max: 0.0,
                mean: 0.0,
            };
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        NormFit::MinMax { min, max, mean }
    }

    pub fn scale(&self, x: f64) -> f64 {
        let v = match *self {
            NormFit::Zscore { mean, std, residual } => {
                if std > 0.0 {
                    ((x - mean) - residual) / std
                } else {
                    0.0
                }
            }
            NormFit::MinMax { min, max, .. } => {
                if max > min {
                    (x - min) / (max - min)
                } else {
                    0.0
                }
            }
        };
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }

    pub fn unscale(&self, y: f64) -> f64 {
        match *self {
            NormFit::Zscore { mean, std, residual } => y * std + residual + mean,
            NormFit::MinMax { min, max, .. } => y * (max - min) + min,
        }
    }

    /// Value written for missing or non-numeric cells.
    pub fn infill_value(&self) -> f64 {
        match *self {
            NormFit::Zscore { .. } => 0.0,
            NormFit::MinMax { mean, .. } => self.scale(mean),
        }
    }

    pub fn apply(&self, col: &[CellValue]) -> Vec<CellValue> {
        let fill = self.infill_value();
        col.iter()
            .map(|c| CellValue::Number(c.as_number().map_or(fill, |x| self.scale(x))))
            .collect()
    }
}

pub fn nmbr(col: &[CellValue]) -> (Vec<CellValue>, NormFit) {
    let fit = NormFit::zscore(col);
    (fit.apply(col), fit)
}

pub fn mnmx(col: &[CellValue]) -> (Vec<CellValue>, NormFit) {
    let fit = NormFit::minmax(col);
    (fit.apply(col), fit)
}

/// Default root category for a column nobody assigned.
pub fn auto_root_select(col: &[CellValue], stats: &UniqueSetStats, threshold: usize) -> CategoryKey {
    let name = auto_root_name(infer_coltype(col), stats.n_unique, threshold);
    CategoryKey::new(name).expect("built-in key")
}

pub fn auto_root_name(coltype: ColType, n_unique: usize, threshold: usize) -> &'static str {
    match coltype {
        ColType::Numeric => "nmbr",
        ColType::AllMissing => "excl",
        ColType::Categoric => match n_unique {
            2 => "bnry",
            3 => "onht",
            n if n > threshold => "ord3",
            _ => "1010",
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use CellValue::*;

    fn t(s: &str) -> CellValue {
        Text(s.into())
    }

    fn col(v: &[&str]) -> Vec<CellValue> {
        v.iter().map(|s| t(s)).collect()
    }

    fn values(c: &[CellValue]) -> Vec<f64> {
        c.iter().map(|v| v.as_number().unwrap()).collect()
    }

    #[test]
    fn upcs_consolidates_case() {
        assert_eq!(upcs(&col(&["usa", "Usa", "USA"]), true), col(&["USA"; 3]));
        assert_eq!(upcs(&[Missing], true), vec![Missing]);
        assert_eq!(upcs(&col(&["a1_b"]), true), col(&["A1_B"]));
        assert_eq!(upcs(&col(&["usa"]), false), col(&["usa"]));
        // ß has no single-character uppercase
        assert_eq!(simple_uppercase("straße"), "STRAßE");
    }

    #[test]
    fn narw_marks_targets() {
        assert_eq!(
            values(&narw(&[t("x"), Missing, t("y")], TargetRule::MissingOnly)),
            [0.0, 1.0, 0.0]
        );
        assert_eq!(
            values(&narw(&col(&["3", "q"]), TargetRule::NonNumeric)),
            [0.0, 1.0]
        );
        assert_eq!(
            values(&narw(&col(&["a", "b"]), TargetRule::MissingOnly)),
            [0.0, 0.0]
        );
    }

    #[test]
    fn ord3_frequency_then_alphabetical() {
        // counts: b=2, a=1, c=1 → b, a, c
        let (enc, map) = ord3(&col(&["b", "a", "b", "c"]));
        assert_eq!(map.entries, ["b", "a", "c"]);
        assert_eq!(values(&enc), [1.0, 2.0, 1.0, 3.0]);

        let (enc, map) = ord3(&col(&["triangle", "circle", "square"]));
        assert_eq!(map.entries, ["circle", "square", "triangle"]);
        assert_eq!(values(&enc), [3.0, 1.0, 2.0]);

        assert_eq!(values(&ord3_apply(&map, &[t("zzz"), Missing])), [0.0, 0.0]);
    }

    #[test]
    fn onht_rows() {
        let (cols, _) = onht(&col(&["a", "b"]));
        assert_eq!(values(&cols[0]), [1.0, 0.0]);
        assert_eq!(values(&cols[1]), [0.0, 1.0]);

        let (cols, map) = onht(&col(&["b", "a", "b"]));
        assert_eq!(map.entries, ["b", "a"]);
        assert_eq!(values(&cols[0]), [1.0, 0.0, 1.0]);
        assert_eq!(values(&cols[1]), [0.0, 1.0, 0.0]);

        let unseen = onht_apply(&map, &[t("q")]);
        assert_eq!(unseen.iter().map(|c| values(c)[0]).sum::<f64>(), 0.0);
    }

    #[test]
    fn bnry_mode_rule() {
        let (enc, fit) = bnry(&col(&["y", "n", "y"])).unwrap();
        assert_eq!(fit.one, "y");
        assert_eq!(values(&enc), [1.0, 0.0, 1.0]);
        assert_eq!(values(&fit.apply(&[Missing])), [1.0]);
        assert!(bnry(&col(&["a", "b", "c"])).is_err());
        // tie → alphabetically first gets 1
        let (_, fit) = bnry(&col(&["q", "p"])).unwrap();
        assert_eq!(fit.one, "p");
    }

    #[test]
    fn binary_widths() {
        assert_eq!(binary_width(1), 1);
        assert_eq!(binary_width(3), 2);
        assert_eq!(binary_width(8), 4);
        assert_eq!(binary_width(0), 1);

        let (cols, map) = b1010(&col(&["a", "b", "c"]));
        assert_eq!(cols.len(), 2);
        let row = |r: usize| (values(&cols[0])[r], values(&cols[1])[r]);
        assert_eq!(row(0), (0.0, 1.0));
        assert_eq!(row(1), (1.0, 0.0));
        assert_eq!(row(2), (1.0, 1.0));
        let miss = b1010_apply(&map, &[Missing]);
        assert_eq!((values(&miss[0])[0], values(&miss[1])[0]), (0.0, 0.0));

        let (cols, _) = b1010(&col(&["only"]));
        assert_eq!(cols.len(), 1);
        assert_eq!(values(&cols[0]), [1.0]);
    }

    #[test]
    fn zscore_and_minmax() {
        let (enc, _) = nmbr(&[Number(1.0), Number(2.0), Number(3.0)]);
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in values(&enc).iter().zip(expect) {
            assert!((a - b).abs() < 1e-4);
        }
        let (enc, _) = nmbr(&vec![Number(5.0); 3]);
        assert_eq!(values(&enc), [0.0, 0.0, 0.0]);

        let (_, fit) = mnmx(&[Number(0.0), Number(10.0)]);
        assert_eq!(values(&fit.apply(&[Number(20.0)])), [2.0]);
        assert_eq!(values(&fit.apply(&[Missing])), [0.5]);
    }

    #[test]
    fn auto_selection() {
        let stats = |n| UniqueSetStats {
            n_unique: n,
            ..Default::default()
        };
        let cat = [t("x")];
        assert_eq!(auto_root_select(&cat, &stats(2), 255).as_str(), "bnry");
        assert_eq!(auto_root_select(&cat, &stats(3), 255).as_str(), "onht");
        assert_eq!(auto_root_select(&cat, &stats(4), 255).as_str(), "1010");
        assert_eq!(auto_root_select(&cat, &stats(255), 255).as_str(), "1010");
        assert_eq!(auto_root_select(&cat, &stats(300), 255).as_str(), "ord3");
        assert_eq!(
            auto_root_select(&[Number(1.0)], &stats(1), 255).as_str(),
            "nmbr"
        );
        assert_eq!(auto_root_select(&[Missing], &stats(0), 255).as_str(), "excl");
    }

    fn small_col() -> impl Strategy<Value = Vec<CellValue>> {
        prop::collection::vec(
            prop_oneof![
                4 => "[a-e]{1,2}".prop_map(CellValue::Text),
                1 => Just(CellValue::Missing),
            ],
            0..40,
        )
    }

    proptest! {
        #[test]
        fn ord3_rank_respects_counts(c in small_col()) {
            let stats = column_stats(&c);
            let map = CodeMap::from_stats(&stats);
            let idx = map.index();
            for (a, ca) in &stats.freq {
                for (b, cb) in &stats.freq {
                    if ca > cb || (ca == cb && a < b) {
                        prop_assert!(idx[a.as_str()] < idx[b.as_str()]);
                    }
                }
            }
        }

        #[test]
        fn encoders_are_injective(c in small_col()) {
            let map = CodeMap::fit(&c);
            for e in &map.entries {
                let one = [t(e)];
                let code = map.codes(&one)[0];
                prop_assert_eq!(map.decode(code), Some(e.as_str()));
                let rows = onht_apply(&map, &one);
                prop_assert_eq!(rows.iter().map(|r| values(r)[0]).sum::<f64>(), 1.0);
                let bits = b1010_apply(&map, &one);
                prop_assert!(bits.iter().any(|b| values(b)[0] == 1.0));
            }
        }

        #[test]
        fn zscore_output_is_standardized(v in prop::collection::vec(-1e3f64..1e3, 2..60)) {
            let c: Vec<CellValue> = v.iter().map(|&x| Number(x)).collect();
            let (enc, fit) = nmbr(&c);
            if let NormFit::Zscore { std, .. } = fit {
                if std > 1e-6 {
                    let out = values(&enc);
                    let n = out.len() as f64;
                    let m = out.iter().sum::<f64>() / n;
                    let s = (out.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
                    prop_assert!(m.abs() < 1e-9);
                    prop_assert!((s - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
