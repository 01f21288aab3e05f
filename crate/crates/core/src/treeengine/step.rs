//! Fitting and applying a single transform step.

use serde::{Deserialize, Serialize};

use crate::encoders::{b1010_apply, binary_width, narw, onht_apply, ord3_apply, upcs, BinaryFit, CodeMap, NormFit};
use crate::error::Result;
use crate::extract_search::{NumericExtractFit, SearchSpec};
use crate::infill::TargetRule;
use crate::registry::Behavior;
use crate::stringparse::{sanitize_token, ActivationFit, ActivationMode, PatternFit, ReplaceFit};
use crate::tidytable::CellValue;

use super::params::StepParams;

/// Train-basis parameters of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnFit {
    Passthrough,
    Upcs { active: bool },
    NaRow { rule: TargetRule },
    Ordinal { map: CodeMap },
    OneHot { map: CodeMap },
    Binary { fit: BinaryFit },
    Base2 { map: CodeMap },
    Norm { fit: NormFit },
    Activation { fit: ActivationFit },
    Pattern { fit: PatternFit },
    Replace { fit: ReplaceFit },
    NumericExtract { fit: NumericExtractFit, lookup: bool },
    Search { spec: SearchSpec },
}

/// Fits a step and returns the distinguishing header token of each output
/// column (`None` for single-column outputs).
pub fn fit_step(
    behavior: Behavior,
    params: &StepParams,
    input: &[CellValue],
    rule: TargetRule,
) -> Result<(ColumnFit, Vec<Option<String>>)> {
    use Behavior::*;
    let single = vec![None];
    let scan = &params.scan;
    let fit = match behavior {
        Excl => ColumnFit::Passthrough,
        Narw => ColumnFit::NaRow { rule },
        Upcs => ColumnFit::Upcs {
            active: params.upcs_active,
        },
        Ord3 => ColumnFit::Ordinal {
            map: CodeMap::fit(input),
        },
        Onht => {
            let map = CodeMap::fit(input);
            let tokens = (1..=map.len()).map(|k| Some(k.to_string())).collect();
            return Ok((ColumnFit::OneHot { map }, tokens));
        }
        Bnry => ColumnFit::Binary {
            fit: BinaryFit::fit(input)?,
        },
        Binary1010 => {
            let map = CodeMap::fit(input);
            let tokens = bit_tokens(binary_width(map.len()));
            return Ok((ColumnFit::Base2 { map }, tokens));
        }
        Nmbr => ColumnFit::Norm {
            fit: NormFit::zscore(input),
        },
        Mnmx => ColumnFit::Norm {
            fit: NormFit::minmax(input),
        },
        Splt | Sp15 | Sbst => {
            let mode = match behavior {
                Splt => ActivationMode::Single,
                Sp15 => ActivationMode::Multi,
                _ => ActivationMode::Subset,
            };
            let fit = ActivationFit::fit(input, mode, scan);
            let tokens = fit
                .columns
                .iter()
                .map(|c| Some(sanitize_token(c)))
                .collect();
            return Ok((ColumnFit::Activation { fit }, tokens));
        }
        Sp19 => {
            let fit = PatternFit::fit(input, scan);
            let tokens = bit_tokens(fit.width);
            return Ok((ColumnFit::Pattern { fit }, tokens));
        }
        Spl2 | Spl5 | Spl9 | Sp10 => {
            let plug = matches!(behavior, Spl5 | Sp10).then_some(params.plug.as_str());
            let lookup_only = matches!(behavior, Spl9 | Sp10) || scan.test_subset_assumption;
            ColumnFit::Replace {
                fit: ReplaceFit::fit(input, scan, plug, lookup_only),
            }
        }
        Nmcm | Nmc7 => ColumnFit::NumericExtract {
            fit: NumericExtractFit::fit(input, params.extract),
            lookup: behavior == Nmc7,
        },
        Srch => {
            let spec = params
                .search
                .clone()
                .expect("srch params carry a search spec");
            let tokens = if spec.ordinal {
                single
            } else {
                spec.groups
                    .iter()
                    .map(|g| Some(sanitize_token(&g.label)))
                    .collect()
            };
            return Ok((ColumnFit::Search { spec }, tokens));
        }
    };
    Ok((fit, single))
}

fn bit_tokens(width: usize) -> Vec<Option<String>> {
    (0..width).map(|j| Some(j.to_string())).collect()
}

/// Output columns of a fitted step. `source` is the raw source column, read
/// only by the missing-marker step.
pub fn apply_step(fit: &ColumnFit, input: &[CellValue], source: &[CellValue]) -> Vec<Vec<CellValue>> {
    match fit {
        ColumnFit::Passthrough => vec![input.to_vec()],
        ColumnFit::Upcs { active } => vec![upcs(input, *active)],
        ColumnFit::NaRow { rule } => vec![narw(source, *rule)],
        ColumnFit::Ordinal { map } => vec![ord3_apply(map, input)],
        ColumnFit::OneHot { map } => onht_apply(map, input),
        ColumnFit::Binary { fit } => vec![fit.apply(input)],
        ColumnFit::Base2 { map } => b1010_apply(map, input),
        ColumnFit::Norm { fit } => vec![fit.apply(input)],
        ColumnFit::Activation { fit } => fit.apply(input),
        ColumnFit::Pattern { fit } => fit.apply(input),
        ColumnFit::Replace { fit } => vec![fit.apply(input)],
        ColumnFit::NumericExtract { fit, lookup } => {
            if *lookup {
                vec![fit.apply_lookup(input).0]
            } else {
                vec![fit.apply_fresh(input)]
            }
        }
        ColumnFit::Search { spec } => spec.apply(input),
    }
}
