//! Overlap detection between the unique entries of a categoric column.
//!
//! The scan starts at window length `longest entry − 1` and steps down to the
//! configured minimum. At each window length every length-`w` substring of an
//! entry is compared with every length-`w` substring of the other entries;
//! shared substrings are overlaps. In single-identification mode an entry is
//! assigned the first (longest) overlap it takes part in and is not
//! considered as a target again, though it keeps supporting other entries.
//!
//! The encoders built on the scan:
//!
//! | variant | output |
//! |---------|--------|
//! | `splt`  | one boolean column per assigned overlap |
//! | `sp15`  | like `splt`, every supported overlap activates |
//! | `sp19`  | `sp15` activation sets binary-encoded |
//! | `sbst`  | like `splt`, candidates are whole entries |
//! | `spl2`  | entries replaced by their overlap |
//! | `spl5`  | like `spl2`, unassigned entries become a plug value |
//! | `spl9`/`sp10` | `spl2`/`spl5` with lookup-only apply |

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::encoders::{binary_width, CodeMap};
use crate::tidytable::{column_stats, CellValue};

pub const DEFAULT_MIN_LEN: usize = 5;
pub const DEFAULT_PLUG: &str = "zzzplug";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapScanConfig {
    pub min_len: usize,
    pub exclude_chars: BTreeSet<char>,
    pub single_id: bool,
    pub test_subset_assumption: bool,
}

impl Default for OverlapScanConfig {
    fn default() -> Self {
        Self {
            min_len: DEFAULT_MIN_LEN,
            exclude_chars: BTreeSet::new(),
            single_id: true,
            test_subset_assumption: false,
        }
    }
}

impl OverlapScanConfig {
    pub fn with_min_len(min_len: usize) -> Self {
        Self {
            min_len,
            ..Self::default()
        }
    }

    fn admits(&self, window: &[char]) -> bool {
        self.exclude_chars.is_empty() || !window.iter().any(|c| self.exclude_chars.contains(c))
    }
}

/// Space plus ASCII punctuation.
pub fn space_and_punctuation() -> BTreeSet<char> {
    std::iter::once(' ')
        .chain((0u8..=127).map(char::from).filter(char::is_ascii_punctuation))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapMap {
    /// Overlap → every train entry containing it.
    pub overlaps: BTreeMap<String, BTreeSet<String>>,
    /// Entry → its overlaps (at most one in single mode; longest first).
    pub assignment: BTreeMap<String, Vec<String>>,
}

impl OverlapMap {
    pub fn is_empty(&self) -> bool {
        self.overlaps.is_empty()
    }

    /// Single-mode assignment of an entry.
    pub fn assigned(&self, entry: &str) -> Option<&str> {
        self.assignment
            .get(entry)
            .and_then(|v| v.first())
            .map(String::as_str)
    }
}

fn to_chars(entries: &BTreeSet<String>) -> Vec<Vec<char>> {
    entries.iter().map(|e| e.chars().collect()).collect()
}

fn has_window(haystack: &[char], needle: &[char]) -> bool {
    haystack.len() >= needle.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Longest first, then lexicographic.
fn by_length_then_text(a: &String, b: &String) -> std::cmp::Ordering {
    b.chars()
        .count()
        .cmp(&a.chars().count())
        .then_with(|| a.cmp(b))
}

pub fn scan_overlaps<S: AsRef<str>>(uniques: &[S], cfg: &OverlapScanConfig) -> OverlapMap {
    let set: BTreeSet<String> = uniques.iter().map(|s| s.as_ref().to_string()).collect();
    if cfg.single_id {
        scan_single(&set, cfg)
    } else {
        scan_multi(&set, cfg)
    }
}

fn scan_single(set: &BTreeSet<String>, cfg: &OverlapScanConfig) -> OverlapMap {
    let names: Vec<&String> = set.iter().collect();
    let entries = to_chars(set);
    let min_len = cfg.min_len.max(2);
    let longest = entries.iter().map(Vec::len).max().unwrap_or(0);
    let mut assigned: Vec<Option<Vec<char>>> = vec![None; entries.len()];

    for w in (min_len..longest).rev() {
        let mut round: Vec<(usize, Vec<char>)> = Vec::new();
        for (ei, e) in entries.iter().enumerate() {
            if assigned[ei].is_some() || e.len() < w {
                continue;
            }
            let mut best: Option<&[char]> = None;
            for s in e.windows(w) {
                if !cfg.admits(s) || best.is_some_and(|b| s >= b) {
                    continue;
                }
                let shared = entries
                    .iter()
                    .enumerate()
                    .any(|(fi, f)| fi != ei && f.len() >= w && f.windows(w).any(|t| t == s));
                if shared {
                    best = Some(s);
                }
            }
            if let Some(b) = best {
                round.push((ei, b.to_vec()));
            }
        }
        for (ei, s) in round {
            assigned[ei] = Some(s);
        }
    }

    let mut map = OverlapMap::default();
    for (ei, a) in assigned.iter().enumerate() {
        if let Some(s) = a {
            let overlap: String = s.iter().collect();
            map.assignment
                .insert(names[ei].clone(), vec![overlap.clone()]);
            map.overlaps.entry(overlap).or_insert_with(|| {
                let support = entries
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| has_window(f, s))
                    .map(|(fi, _)| names[fi].clone())
                    .collect();
                support
            });
        }
    }
    map
}

/// Records every shared substring that is not implied by a longer recorded
/// overlap with the same supporting entries.
fn scan_multi(set: &BTreeSet<String>, cfg: &OverlapScanConfig) -> OverlapMap {
    let names: Vec<&String> = set.iter().collect();
    let entries = to_chars(set);
    let min_len = cfg.min_len.max(2);
    let longest = entries.iter().map(Vec::len).max().unwrap_or(0);
    let mut recorded: Vec<(Vec<char>, BTreeSet<usize>)> = Vec::new();

    for w in (min_len..longest).rev() {
        let mut seen: BTreeSet<&[char]> = BTreeSet::new();
        let mut round = Vec::new();
        for e in &entries {
            for s in e.windows(w) {
                if !cfg.admits(s) || !seen.insert(s) {
                    continue;
                }
                let support: BTreeSet<usize> = entries
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| f.len() >= w && f.windows(w).any(|t| t == s))
                    .map(|(fi, _)| fi)
                    .collect();
                if support.len() < 2 {
                    continue;
                }
                let implied = recorded
                    .iter()
                    .any(|(t, ts)| *ts == support && has_window(t, s));
                if !implied {
                    round.push((s.to_vec(), support));
                }
            }
        }
        recorded.extend(round);
    }

    let mut map = OverlapMap::default();
    for (s, support) in &recorded {
        let overlap: String = s.iter().collect();
        for &fi in support {
            map.assignment
                .entry(names[fi].clone())
                .or_default()
                .push(overlap.clone());
        }
        map.overlaps
            .insert(overlap, support.iter().map(|&fi| names[fi].clone()).collect());
    }
    for v in map.assignment.values_mut() {
        v.sort_by(by_length_then_text);
    }
    map
}

/// Whole-entry containment: each entry is assigned the longest other entry
/// (at least `min_len` characters) it contains.
pub fn scan_subsets<S: AsRef<str>>(uniques: &[S], cfg: &OverlapScanConfig) -> OverlapMap {
    let set: BTreeSet<String> = uniques.iter().map(|s| s.as_ref().to_string()).collect();
    let names: Vec<&String> = set.iter().collect();
    let entries = to_chars(&set);
    let min_len = cfg.min_len.max(1);
    let mut map = OverlapMap::default();
    for (ai, a) in entries.iter().enumerate() {
        let mut best: Option<usize> = None;
        for (bi, b) in entries.iter().enumerate() {
            if bi == ai || b.len() < min_len || !cfg.admits(b) || !has_window(a, b) {
                continue;
            }
            let better = match best {
                None => true,
                Some(x) => {
                    let cur = &entries[x];
                    b.len() > cur.len() || (b.len() == cur.len() && b < cur)
                }
            };
            if better {
                best = Some(bi);
            }
        }
        if let Some(bi) = best {
            map.assignment
                .insert(names[ai].clone(), vec![names[bi].clone()]);
            map.overlaps
                .entry(names[bi].clone())
                .or_default()
                .insert(names[ai].clone());
        }
    }
    map
}

/// Header-safe token: outer non-alphanumerics trimmed, inner ones hex-escaped
/// as `x<hex>`.
pub fn sanitize_token(s: &str) -> String {
    let trimmed = s.trim_matches(|c: char| !c.is_ascii_alphanumeric());
    let src = if trimmed.is_empty() { s } else { trimmed };
    let mut out = String::with_capacity(src.len());
    for c in src.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else {
            out.push_str(&format!("x{:02x}", c as u32));
        }
    }
    out
}

fn distinct_texts(col: &[CellValue]) -> Vec<String> {
    column_stats(col).freq.into_keys().collect()
}

/// Longest (then lexicographically smallest) candidate contained in `entry`.
fn longest_contained<'a>(entry: &str, candidates: &'a [String]) -> Option<&'a str> {
    candidates
        .iter()
        .filter(|c| entry.contains(c.as_str()))
        .min_by(|a, b| by_length_then_text(a, b))
        .map(String::as_str)
}

fn bool_cell(b: bool) -> CellValue {
    CellValue::Number(if b { 1.0 } else { 0.0 })
}

/// Per-row memo keyed by the cell's text form.
fn map_rows<T: Clone>(col: &[CellValue], mut f: impl FnMut(&str) -> T, missing: T) -> Vec<T> {
    let mut memo: HashMap<String, T> = HashMap::new();
    col.iter()
        .map(|c| match c.as_text() {
            None => missing.clone(),
            Some(t) => {
                if let Some(v) = memo.get(t.as_ref()) {
                    return v.clone();
                }
                let v = f(&t);
                memo.insert(t.into_owned(), v.clone());
                v
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationMode {
    /// One activation per entry (`splt`).
    Single,
    /// Every supported overlap activates (`sp15`).
    Multi,
    /// Whole-entry candidates (`sbst`).
    Subset,
}

/// Boolean overlap activations (`splt`, `sp15`, `sbst`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationFit {
    pub mode: ActivationMode,
    pub map: OverlapMap,
    /// Overlap per output column.
    pub columns: Vec<String>,
    pub train_entries: BTreeSet<String>,
}

impl ActivationFit {
    pub fn fit(col: &[CellValue], mode: ActivationMode, cfg: &OverlapScanConfig) -> Self {
        let uniques = distinct_texts(col);
        let map = match mode {
            ActivationMode::Single => scan_overlaps(&uniques, &OverlapScanConfig {
                single_id: true,
                ..cfg.clone()
            }),
            ActivationMode::Multi => scan_overlaps(&uniques, &OverlapScanConfig {
                single_id: false,
                ..cfg.clone()
            }),
            ActivationMode::Subset => scan_subsets(&uniques, cfg),
        };
        let mut columns: Vec<String> = map.overlaps.keys().cloned().collect();
        columns.sort_by(by_length_then_text);
        Self {
            mode,
            map,
            columns,
            train_entries: uniques.into_iter().collect(),
        }
    }

    /// Overlaps an entry activates. Train entries use the stored assignment;
    /// unseen entries are checked for containment of the train overlaps.
    fn activations<'a>(&'a self, entry: &str) -> Vec<&'a str> {
        if let Some(a) = self.map.assignment.get(entry) {
            return a.iter().map(String::as_str).collect();
        }
        if self.train_entries.contains(entry) {
            return Vec::new();
        }
        match self.mode {
            ActivationMode::Multi => self
                .columns
                .iter()
                .filter(|c| entry.contains(c.as_str()))
                .map(String::as_str)
                .collect(),
            ActivationMode::Single | ActivationMode::Subset => {
                longest_contained(entry, &self.columns).into_iter().collect()
            }
        }
    }

    pub fn apply(&self, col: &[CellValue]) -> Vec<Vec<CellValue>> {
        let index: HashMap<&str, usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let width = self.columns.len();
        let rows = map_rows(
            col,
            |e| {
                let mut v = vec![false; width];
                for a in self.activations(e) {
                    v[index[a]] = true;
                }
                v
            },
            vec![false; width],
        );
        (0..width)
            .map(|j| rows.iter().map(|r| bool_cell(r[j])).collect())
            .collect()
    }
}

/// Entry replacement by overlap (`spl2`, `spl5`, `spl9`, `sp10`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplaceFit {
    pub map: OverlapMap,
    /// Train entries, for telling seen from unseen at apply time.
    pub train_entries: BTreeSet<String>,
    /// Replacement for entries without an overlap (`spl5`, `sp10`).
    pub plug: Option<String>,
    /// Lookup-only apply: unseen entries are not parsed (`spl9`, `sp10`).
    pub lookup_only: bool,
}

impl ReplaceFit {
    pub fn fit(
        col: &[CellValue],
        cfg: &OverlapScanConfig,
        plug: Option<&str>,
        lookup_only: bool,
    ) -> Self {
        let uniques = distinct_texts(col);
        let map = scan_overlaps(&uniques, &OverlapScanConfig {
            single_id: true,
            ..cfg.clone()
        });
        let plug = plug.map(|p| {
            let mut candidate = p.to_string();
            let mut n = 0;
            while map.overlaps.contains_key(&candidate) {
                n += 1;
                candidate = format!("{p}_{n}");
            }
            candidate
        });
        Self {
            map,
            train_entries: uniques.into_iter().collect(),
            plug,
            lookup_only,
        }
    }

    fn replace(&self, entry: &str, overlaps: &[String]) -> CellValue {
        let found = match self.map.assigned(entry) {
            Some(o) => Some(o),
            None if self.lookup_only || self.train_entries.contains(entry) => None,
            None => longest_contained(entry, overlaps),
        };
        match (found, &self.plug) {
            (Some(o), _) => CellValue::Text(o.to_string()),
            (None, Some(p)) => CellValue::Text(p.clone()),
            (None, None) => CellValue::text(entry),
        }
    }

    pub fn apply(&self, col: &[CellValue]) -> Vec<CellValue> {
        let overlaps: Vec<String> = self.map.overlaps.keys().cloned().collect();
        map_rows(col, |e| self.replace(e, &overlaps), CellValue::Missing)
    }
}

/// `sp19`: multi-overlap activation sets, binary encoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFit {
    pub activations: ActivationFit,
    /// Non-empty activation patterns (as `0`/`1` strings) in rank order.
    pub patterns: CodeMap,
    pub width: usize,
}

impl PatternFit {
    pub fn fit(col: &[CellValue], cfg: &OverlapScanConfig) -> Self {
        let activations = ActivationFit::fit(col, ActivationMode::Multi, cfg);
        let keys = activations.pattern_keys(col);
        let patterns = CodeMap::fit(&keys);
        let width = binary_width(patterns.len());
        Self {
            activations,
            patterns,
            width,
        }
    }

    pub fn apply(&self, col: &[CellValue]) -> Vec<Vec<CellValue>> {
        let keys = self.activations.pattern_keys(col);
        let codes = self.patterns.codes(&keys);
        (0..self.width)
            .map(|j| {
                codes
                    .iter()
                    .map(|&c| bool_cell((c >> (self.width - 1 - j)) & 1 == 1))
                    .collect()
            })
            .collect()
    }
}

impl ActivationFit {
    /// Activation pattern per row as a bit string; empty patterns are missing.
    fn pattern_keys(&self, col: &[CellValue]) -> Vec<CellValue> {
        let cols = self.apply(col);
        (0..col.len())
            .map(|r| {
                let bits: String = cols
                    .iter()
                    .map(|c| if c[r] == CellValue::Number(1.0) { '1' } else { '0' })
                    .collect();
                if bits.contains('1') {
                    CellValue::Text(bits)
                } else {
                    CellValue::Missing
                }
            })
            .collect()
    }
}
