//! Parsing for unbounded categoric sets: numeric partition extraction and
//! substring search.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::encoders::simple_uppercase;
use crate::error::{Error, Result};
use crate::tidytable::CellValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractFlags {
    pub allow_commas: bool,
    pub allow_decimal: bool,
    pub allow_negative: bool,
}

impl Default for ExtractFlags {
    fn default() -> Self {
        Self {
            allow_commas: true,
            allow_decimal: true,
            allow_negative: false,
        }
    }
}

/// Length of the longest numeric partition starting at `start`, if any.
///
/// Partition grammar: optional `-`, a digit run, any number of `,digits`
/// groups, then an optional `.digits` fraction.
fn match_at(chars: &[char], start: usize, flags: ExtractFlags) -> Option<usize> {
    let digits = |from: usize| {
        chars[from..]
            .iter()
            .take_while(|c| c.is_ascii_digit())
            .count()
    };
    let mut i = start;
    if flags.allow_negative && chars.get(i) == Some(&'-') {
        i += 1;
    }
    let d = digits(i);
    if d == 0 {
        return None;
    }
    i += d;
    if flags.allow_commas {
        while chars.get(i) == Some(&',') {
            let d = digits(i + 1);
            if d == 0 {
                break;
            }
            i += 1 + d;
        }
    }
    if flags.allow_decimal && chars.get(i) == Some(&'.') {
        let d = digits(i + 1);
        if d > 0 {
            i += 1 + d;
        }
    }
    Some(i - start)
}

/// Extracts the longest numeric partition of `entry` (earliest on ties),
/// with commas stripped. `None` when the entry has no digits.
pub fn nmcm_extract(entry: &str, flags: ExtractFlags) -> Option<f64> {
    let chars: Vec<char> = entry.chars().collect();
    let mut best: Option<(usize, usize)> = None;
    for start in 0..chars.len() {
        if let Some(len) = match_at(&chars, start, flags) {
            if best.is_none_or(|(_, l)| len > l) {
                best = Some((start, len));
            }
        }
    }
    let (start, len) = best?;
    let text: String = chars[start..start + len]
        .iter()
        .filter(|&&c| c != ',')
        .collect();
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Train-basis lookup of extracted values per distinct entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericExtractFit {
    pub lookup: BTreeMap<String, Option<f64>>,
    pub flags: ExtractFlags,
}

fn value_cell(v: Option<f64>) -> CellValue {
    v.map_or(CellValue::Missing, CellValue::Number)
}

impl NumericExtractFit {
    pub fn fit(col: &[CellValue], flags: ExtractFlags) -> Self {
        let mut lookup = BTreeMap::new();
        for c in col {
            if let Some(t) = c.as_text() {
                if !lookup.contains_key(t.as_ref()) {
                    let v = nmcm_extract(&t, flags);
                    lookup.insert(t.into_owned(), v);
                }
            }
        }
        Self { lookup, flags }
    }

    /// Parses every distinct entry afresh (memoized within the call).
    pub fn apply_fresh(&self, col: &[CellValue]) -> Vec<CellValue> {
        let mut memo: HashMap<String, Option<f64>> = HashMap::new();
        col.iter()
            .map(|c| match c.as_text() {
                None => CellValue::Missing,
                Some(t) => {
                    if let Some(v) = memo.get(t.as_ref()) {
                        return value_cell(*v);
                    }
                    let v = nmcm_extract(&t, self.flags);
                    memo.insert(t.into_owned(), v);
                    value_cell(v)
                }
            })
            .collect()
    }

    /// Looks up train entries and parses only unseen ones. Returns the
    /// column and the number of fresh extractions performed.
    pub fn apply_lookup(&self, col: &[CellValue]) -> (Vec<CellValue>, usize) {
        let mut memo: HashMap<String, Option<f64>> = HashMap::new();
        let mut fresh = 0;
        let out = col
            .iter()
            .map(|c| match c.as_text() {
                None => CellValue::Missing,
                Some(t) => {
                    if let Some(v) = self.lookup.get(t.as_ref()) {
                        return value_cell(*v);
                    }
                    if let Some(v) = memo.get(t.as_ref()) {
                        return value_cell(*v);
                    }
                    fresh += 1;
                    let v = nmcm_extract(&t, self.flags);
                    memo.insert(t.into_owned(), v);
                    value_cell(v)
                }
            })
            .collect();
        (out, fresh)
    }
}

pub fn nmcm(col: &[CellValue], flags: ExtractFlags) -> (Vec<CellValue>, NumericExtractFit) {
    let fit = NumericExtractFit::fit(col, flags);
    let out = col
        .iter()
        .map(|c| match c.as_text() {
            None => CellValue::Missing,
            Some(t) => value_cell(fit.lookup[t.as_ref()]),
        })
        .collect();
    (out, fit)
}

pub fn nmc7_apply(fit: &NumericExtractFit, col: &[CellValue]) -> Vec<CellValue> {
    fit.apply_lookup(col).0
}

/// One activation group: any of its terms present activates the group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchGroup {
    pub label: String,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub groups: Vec<SearchGroup>,
    #[serde(default)]
    pub ordinal: bool,
    #[serde(default)]
    pub case_sensitive: bool,
}

impl SearchSpec {
    /// Single terms become their own groups; aggregates share one group
    /// labelled by their terms joined with `|`.
    pub fn new(search: &[String], aggregate: &[Vec<String>], ordinal: bool) -> Result<Self> {
        let mut groups: Vec<SearchGroup> = search
            .iter()
            .map(|t| SearchGroup {
                label: t.clone(),
                terms: vec![t.clone()],
            })
            .collect();
        groups.extend(aggregate.iter().map(|terms| SearchGroup {
            label: terms.join("|"),
            terms: terms.clone(),
        }));
        let spec = Self {
            groups,
            ordinal,
            case_sensitive: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidParam {
            category: "srch".into(),
            param: "search".into(),
            reason: reason.into(),
        };
        if self.groups.is_empty() {
            return Err(bad("no search terms"));
        }
        let mut labels = HashSet::new();
        for g in &self.groups {
            if g.terms.is_empty() || g.terms.iter().any(String::is_empty) {
                return Err(bad("empty search term"));
            }
            if !labels.insert(g.label.as_str()) {
                return Err(bad(&format!("duplicate group {:?}", g.label)));
            }
        }
        Ok(())
    }

    fn normalize(&self, s: &str) -> String {
        if self.case_sensitive {
            s.to_string()
        } else {
            simple_uppercase(s)
        }
    }

    /// Indices of the groups present in `entry`.
    fn matches(&self, entry: &str) -> Vec<bool> {
        let entry = self.normalize(entry);
        self.groups
            .iter()
            .map(|g| g.terms.iter().any(|t| entry.contains(&self.normalize(t))))
            .collect()
    }

    /// Per-group boolean columns, or one ordinal column (0 = no match,
    /// otherwise the first matching group in spec order, 1-based).
    pub fn apply(&self, col: &[CellValue]) -> Vec<Vec<CellValue>> {
        let mut memo: HashMap<String, Vec<bool>> = HashMap::new();
        let rows: Vec<Option<Vec<bool>>> = col
            .iter()
            .map(|c| {
                c.as_text().map(|t| {
                    memo.entry(t.into_owned())
                        .or_insert_with_key(|k| self.matches(k))
                        .clone()
                })
            })
            .collect();
        if self.ordinal {
            let codes = rows
                .iter()
                .map(|r| {
                    let code = r
                        .as_ref()
                        .and_then(|m| m.iter().position(|&b| b))
                        .map_or(0, |i| i + 1);
                    CellValue::Number(code as f64)
                })
                .collect();
            vec![codes]
        } else {
            (0..self.groups.len())
                .map(|g| {
                    rows.iter()
                        .map(|r| {
                            let hit = r.as_ref().is_some_and(|m| m[g]);
                            CellValue::Number(if hit { 1.0 } else { 0.0 })
                        })
                        .collect()
                })
                .collect()
        }
    }
}

pub fn srch(col: &[CellValue], spec: &SearchSpec) -> Result<Vec<Vec<CellValue>>> {
    spec.validate()?;
    Ok(spec.apply(col))
}
