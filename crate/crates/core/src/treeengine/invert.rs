//! Recovering source columns from an encoded table.

use crate::encoders::CodeMap;
use crate::error::{Error, Result};
use crate::registry::Behavior;
use crate::tidytable::{CellValue, TidyTable};

use super::{ColumnFit, FitArtifact, SourceFit, StepInput, StepRecord};

const PREFERENCE: [Behavior; 7] = [
    Behavior::Binary1010,
    Behavior::Onht,
    Behavior::Bnry,
    Behavior::Ord3,
    Behavior::Mnmx,
    Behavior::Nmbr,
    Behavior::Excl,
];

#[derive(Debug, Clone)]
pub struct Inversion {
    pub table: TidyTable,
    /// Sources with no retained lossless path in the encoded table.
    pub non_invertible: Vec<String>,
}

/// Only case normalization and passthrough may sit between the source and
/// an inverted step.
fn clean_path(sf: &SourceFit, step: &StepRecord) -> bool {
    let mut input = step.input;
    while let StepInput::Step { step, .. } = input {
        let s = &sf.steps[step];
        if !matches!(s.behavior, Behavior::Upcs | Behavior::Excl) {
            return false;
        }
        input = s.input;
    }
    true
}

fn best_path<'a>(sf: &'a SourceFit, encoded: &TidyTable) -> Option<&'a StepRecord> {
    PREFERENCE.iter().find_map(|&b| {
        sf.steps.iter().find(|s| {
            s.retained
                && s.behavior == b
                && s.output_headers.iter().all(|h| encoded.column(h).is_some())
                && clean_path(sf, s)
        })
    })
}

fn cols<'a>(encoded: &'a TidyTable, step: &StepRecord) -> Vec<&'a [CellValue]> {
    step.output_headers
        .iter()
        .map(|h| encoded.column(h).expect("checked by best_path"))
        .collect()
}

fn flag(c: &CellValue) -> Option<bool> {
    match c.as_number() {
        Some(v) if v == 1.0 => Some(true),
        Some(v) if v == 0.0 => Some(false),
        _ => None,
    }
}

fn decode(map: &CodeMap, code: usize) -> Option<CellValue> {
    if code == 0 {
        Some(CellValue::Missing)
    } else {
        map.decode(code).map(CellValue::text)
    }
}

fn render(c: &CellValue) -> String {
    c.as_text().map_or_else(|| "<missing>".to_string(), |t| t.into_owned())
}

fn invert_step(source: &str, step: &StepRecord, encoded: &TidyTable) -> Result<Vec<CellValue>> {
    let columns = cols(encoded, step);
    let rows = encoded.row_count();
    let bad = |pattern: String| Error::InvalidPattern {
        header: source.to_string(),
        pattern,
    };
    let mut out = Vec::with_capacity(rows);
    match &step.fit {
        ColumnFit::Base2 { map } => {
            for r in 0..rows {
                let bits: Option<Vec<bool>> = columns.iter().map(|c| flag(&c[r])).collect();
                let pattern = || columns.iter().map(|c| render(&c[r])).collect::<Vec<_>>().join(",");
                let bits = bits.ok_or_else(|| bad(pattern()))?;
                let code = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
                out.push(decode(map, code).ok_or_else(|| bad(pattern()))?);
            }
        }
        ColumnFit::OneHot { map } => {
            for r in 0..rows {
                let pattern = || columns.iter().map(|c| render(&c[r])).collect::<Vec<_>>().join(",");
                let bits: Vec<bool> = columns
                    .iter()
                    .map(|c| flag(&c[r]))
                    .collect::<Option<_>>()
                    .ok_or_else(|| bad(pattern()))?;
                let hot: Vec<usize> = bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
                out.push(match hot.as_slice() {
                    [] => CellValue::Missing,
                    [i] => CellValue::text(map.entries[*i].clone()),
                    _ => return Err(bad(pattern())),
                });
            }
        }
        ColumnFit::Binary { fit } => {
            for c in columns[0] {
                out.push(match flag(c) {
                    Some(true) => CellValue::text(fit.one.clone()),
                    Some(false) => CellValue::text(fit.zero.clone()),
                    None => return Err(bad(render(c))),
                });
            }
        }
        ColumnFit::Ordinal { map } => {
            for c in columns[0] {
                let code = c
                    .as_number()
                    .filter(|v| *v >= 0.0 && v.fract() == 0.0)
                    .map(|v| v as usize);
                out.push(code.and_then(|k| decode(map, k)).ok_or_else(|| bad(render(c)))?);
            }
        }
        ColumnFit::Norm { fit } => {
            for c in columns[0] {
                out.push(c.as_number().map_or(CellValue::Missing, |y| CellValue::number(fit.unscale(y))));
            }
        }
        ColumnFit::Passthrough => out.extend(columns[0].iter().cloned()),
        other => unreachable!("no inverse for {other:?}"),
    }
    Ok(out)
}

/// Inverts each source through its preferred lossless path. Rows flagged by
/// the source's missing marker recover as missing.
pub fn invert(artifact: &FitArtifact, encoded: &TidyTable) -> Result<Inversion> {
    let mut headers = Vec::new();
    let mut columns = Vec::new();
    let mut non_invertible = Vec::new();
    for (h, sf) in artifact.sources() {
        let Some(step) = best_path(sf, encoded) else {
            non_invertible.push(h.clone());
            continue;
        };
        let mut col = invert_step(h, step, encoded)?;
        let marker = sf.steps.iter().find(|s| {
            s.retained && s.behavior == Behavior::Narw && encoded.column(&s.output_headers[0]).is_some()
        });
        if let Some(m) = marker {
            let flags = encoded.column(&m.output_headers[0]).expect("checked");
            for (c, f) in col.iter_mut().zip(flags) {
                if flag(f) == Some(true) {
                    *c = CellValue::Missing;
                }
            }
        }
        headers.push(h.clone());
        columns.push(col);
    }
    if headers.is_empty() {
        return Err(Error::NotInvertible(format!(
            "no invertible path for any source column ({})",
            non_invertible.join(", ")
        )));
    }
    Ok(Inversion {
        table: TidyTable::new(headers, columns)?,
        non_invertible,
    })
}
