//! Tidy tables: one feature per column, one observation per row.
//!
//! Cells are typed as text, number, or missing. CSV ingestion classifies each
//! field independently; a column's overall type is decided later by
//! [`infer_coltype`].

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tokens treated as missing when no explicit set is given.
pub const DEFAULT_MISSING_TOKENS: [&str; 4] = ["", "NA", "NaN", "null"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellValue {
    Text(String),
    Number(f64),
    Missing,
}

impl CellValue {
    /// Builds a number cell, normalizing non-finite values to `Missing`.
    pub fn number(v: f64) -> Self {
        if v.is_finite() {
            CellValue::Number(v)
        } else {
            CellValue::Missing
        }
    }

    /// Builds a text cell. The empty string is the missing sentinel.
    pub fn text(s: impl Into<String>) -> Self {
        let s = s.into();
        if s.is_empty() {
            CellValue::Missing
        } else {
            CellValue::Text(s)
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, CellValue::Missing)
    }

    /// Text form used for categoric encoding. Numbers render as their
    /// shortest round-trip decimal.
    pub fn as_text(&self) -> Option<Cow<'_, str>> {
        match self {
            CellValue::Text(s) => Some(Cow::Borrowed(s)),
            CellValue::Number(v) => Some(Cow::Owned(format_number(*v))),
            CellValue::Missing => None,
        }
    }

    /// Numeric reading of the cell: numbers as-is, text only when it parses
    /// fully as a finite decimal.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            CellValue::Number(v) => Some(*v),
            CellValue::Text(s) => parse_decimal(s),
            CellValue::Missing => None,
        }
    }

    /// Bitwise equality, so `-0.0 != 0.0` and outputs can be compared exactly.
    pub fn bit_eq(&self, other: &CellValue) -> bool {
        match (self, other) {
            (CellValue::Number(a), CellValue::Number(b)) => a.to_bits() == b.to_bits(),
            (a, b) => a == b,
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Text(s) => f.write_str(s),
            CellValue::Number(v) => f.write_str(&format_number(*v)),
            CellValue::Missing => Ok(()),
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

/// Parses `s` as a plain decimal (optional sign, digits, optional fraction,
/// optional exponent). Words such as `inf` or `nan` are not numbers here,
/// and overflow to infinity is rejected.
pub fn parse_decimal(s: &str) -> Option<f64> {
    parse_decimal_raw(s).filter(|v| v.is_finite())
}

fn parse_decimal_raw(s: &str) -> Option<f64> {
    if !s.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    if !s
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E'))
    {
        return None;
    }
    s.parse::<f64>().ok()
}

/// Column type as seen by the automation heuristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColType {
    Numeric,
    Categoric,
    AllMissing,
}

pub fn infer_coltype(col: &[CellValue]) -> ColType {
    let mut any = false;
    for cell in col {
        match cell {
            CellValue::Missing => {}
            CellValue::Number(_) => any = true,
            CellValue::Text(_) => return ColType::Categoric,
        }
    }
    if any {
        ColType::Numeric
    } else {
        ColType::AllMissing
    }
}

/// Distinct-value statistics of one column (`N`, `L` and counts).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UniqueSetStats {
    pub n_unique: usize,
    pub avg_len: f64,
    pub freq: BTreeMap<String, usize>,
}

pub fn column_stats(col: &[CellValue]) -> UniqueSetStats {
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for cell in col {
        if let Some(t) = cell.as_text() {
            *freq.entry(t.into_owned()).or_default() += 1;
        }
    }
    let n_unique = freq.len();
    let avg_len = if n_unique == 0 {
        0.0
    } else {
        freq.keys().map(|k| k.chars().count()).sum::<usize>() as f64 / n_unique as f64
    };
    UniqueSetStats {
        n_unique,
        avg_len,
        freq,
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TidyTable {
    headers: Vec<String>,
    columns: Vec<Vec<CellValue>>,
    row_count: usize,
}

impl TidyTable {
    pub fn new(headers: Vec<String>, columns: Vec<Vec<CellValue>>) -> Result<Self> {
        if headers.len() != columns.len() {
            return Err(Error::Precondition(format!(
                "{} headers for {} columns",
                headers.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(Error::DuplicateHeader(h.clone()));
            }
        }
        let row_count = columns.first().map_or(0, Vec::len);
        for (h, c) in headers.iter().zip(&columns) {
            if c.len() != row_count {
                return Err(Error::ColumnLength {
                    column: h.clone(),
                    found: c.len(),
                    expected: row_count,
                });
            }
        }
        Ok(Self {
            headers,
            columns,
            row_count,
        })
    }

    /// Convenience constructor from `(header, column)` pairs.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<CellValue>)>,
        S: Into<String>,
    {
        let (headers, columns) = pairs.into_iter().map(|(h, c)| (h.into(), c)).unzip();
        Self::new(headers, columns)
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn columns(&self) -> &[Vec<CellValue>] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn n_cols(&self) -> usize {
        self.headers.len()
    }

    pub fn column_index(&self, header: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == header)
    }

    pub fn column(&self, header: &str) -> Option<&[CellValue]> {
        self.column_index(header).map(|i| self.columns[i].as_slice())
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<Vec<CellValue>>) {
        (self.headers, self.columns)
    }

    /// New table holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> TidyTable {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r].clone()).collect())
            .collect();
        TidyTable {
            headers: self.headers.clone(),
            columns,
            row_count: rows.len(),
        }
    }

    /// New table without the named columns (absent names are ignored).
    pub fn drop_columns(&self, names: &[&str]) -> TidyTable {
        let (headers, columns) = self
            .headers
            .iter()
            .zip(&self.columns)
            .filter(|(h, _)| !names.contains(&h.as_str()))
            .map(|(h, c)| (h.clone(), c.clone()))
            .unzip();
        TidyTable {
            headers,
            columns,
            row_count: self.row_count,
        }
    }

    /// Cell-wise bitwise equality, including header order.
    pub fn bit_eq(&self, other: &TidyTable) -> bool {
        self.headers == other.headers
            && self.row_count == other.row_count
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.bit_eq(y)))
    }
}

/// Classifies one raw CSV field.
pub fn classify_field(field: &str, missing_tokens: &BTreeSet<String>) -> CellValue {
    if field.is_empty() || missing_tokens.contains(field) {
        return CellValue::Missing;
    }
    match parse_decimal_raw(field) {
        Some(v) => CellValue::number(v),
        None => CellValue::Text(field.to_string()),
    }
}

pub fn default_missing_tokens() -> BTreeSet<String> {
    DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect()
}

pub fn load_csv(path: impl AsRef<Path>, missing_tokens: &BTreeSet<String>) -> Result<TidyTable> {
    let file = std::fs::File::open(path)?;
    read_csv(file, missing_tokens)
}

/// Reads CSV from any reader. Ragged rows report their zero-based data row index.
pub fn read_csv<R: Read>(reader: R, missing_tokens: &BTreeSet<String>) -> Result<TidyTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateHeader(h.clone()));
        }
    }
    let mut columns: Vec<Vec<CellValue>> = vec![Vec::new(); headers.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::RaggedRow {
                row,
                found: record.len(),
                expected: headers.len(),
            });
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            col.push(classify_field(field, missing_tokens));
        }
    }
    TidyTable::new(headers, columns)
}

pub fn write_csv(table: &TidyTable, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(table, file)
}

pub fn write_csv_to<W: Write>(table: &TidyTable, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(writer);
    wtr.write_record(table.headers())?;
    let mut record = Vec::with_capacity(table.n_cols());
    for r in 0..table.row_count() {
        record.clear();
        record.extend(table.columns().iter().map(|c| c[r].to_string()));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<TidyTable> {
        read_csv(s.as_bytes(), &default_missing_tokens())
    }

    fn t(s: &str) -> CellValue {
        CellValue::Text(s.into())
    }

    #[test]
    fn loads_numbers_text_and_missing() {
        let table = parse("a,b\n1,x\n,y").unwrap();
        assert_eq!(table.n_cols(), 2);
        assert_eq!(
            table.column("a").unwrap(),
            &[CellValue::Number(1.0), CellValue::Missing]
        );
        assert_eq!(table.column("b").unwrap(), &[t("x"), t("y")]);
    }

    #[test]
    fn nan_token_is_missing() {
        let table = parse("a\nNaN").unwrap();
        assert_eq!(table.column("a").unwrap(), &[CellValue::Missing]);
    }

    #[test]
    fn duplicate_header_is_rejected() {
        match parse("a,a\n1,2") {
            Err(Error::DuplicateHeader(h)) => assert_eq!(h, "a"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_row_names_index() {
        match parse("a,b\n1,2\n3") {
            Err(Error::RaggedRow { row, .. }) => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn words_that_rust_parses_stay_text() {
        let tokens = default_missing_tokens();
        assert_eq!(classify_field("inf", &tokens), t("inf"));
        assert_eq!(classify_field("nan", &tokens), t("nan"));
        assert_eq!(classify_field("1e999", &tokens), CellValue::Missing);
        assert_eq!(classify_field("-2.5e3", &tokens), CellValue::Number(-2500.0));
        assert_eq!(classify_field(" 1", &tokens), t(" 1"));
    }

    #[test]
    fn writes_quoted_fields_and_empty_missing() {
        let table = TidyTable::from_pairs([
            ("a", vec![t("a,b"), CellValue::Missing]),
            ("n", vec![CellValue::Number(2.5), CellValue::Number(1.0)]),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_csv_to(&table, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,n\n\"a,b\",2.5\n,1\n");
    }

    #[test]
    fn stats_skip_missing() {
        let s = column_stats(&[t("b"), t("a"), t("b"), CellValue::Missing]);
        assert_eq!(s.n_unique, 2);
        assert_eq!(s.freq["b"], 2);
        assert_eq!(s.freq["a"], 1);
        assert_eq!(s.avg_len, 1.0);

        let empty = column_stats(&[]);
        assert_eq!(empty.n_unique, 0);
        assert!(empty.freq.is_empty());

        // "chrome 62.0" is 11 characters including the space
        let s = column_stats(&[t("chrome 62.0"), t("chrome 49.0")]);
        assert_eq!(s.n_unique, 2);
        assert_eq!(s.avg_len, 11.0);
    }

    #[test]
    fn coltype_rules() {
        use CellValue::*;
        assert_eq!(
            infer_coltype(&[Number(1.0), Number(2.0), Missing]),
            ColType::Numeric
        );
        assert_eq!(infer_coltype(&[t("x"), Number(3.0)]), ColType::Categoric);
        assert_eq!(infer_coltype(&[Missing, Missing]), ColType::AllMissing);
        assert_eq!(infer_coltype(&[]), ColType::AllMissing);
    }

    #[test]
    fn unequal_columns_rejected() {
        let err = TidyTable::from_pairs([
            ("a", vec![CellValue::Missing]),
            ("b", vec![]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::ColumnLength { .. }));
    }
}
