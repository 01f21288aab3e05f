//! Fit and apply over family trees.
//!
//! Each source column is expanded from its root category: the root's upstream
//! slots are applied to the source, and every offspring-bearing entry recurses
//! into that category's downstream slots with the step output as input. Steps
//! are recorded in depth-first order (slot order parents, siblings,
//! auntsuncles, cousins; downstream children, niecesnephews, coworkers,
//! friends); the retained ones make up the returned table in that order.
//!
//! Fitting a source produces the same columns [`apply`] would produce on the
//! train table, because fit outputs are computed by the apply code path from
//! the freshly fitted parameters.

mod drift;
mod invert;
pub mod params;
mod step;

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::{auto_root_select, CodeMap, DEFAULT_CATEGORY_THRESHOLD};
use crate::error::{Error, Result};
use crate::infill::{mark_targets, InfillKind, InfillSpec, TargetRule};
use crate::registry::{Behavior, CategoryKey, FamilyTree, Registry, Severity, Slot, DEFAULT_MAX_DEPTH};
use crate::tidytable::{column_stats, infer_coltype, CellValue, ColType, TidyTable};

pub use drift::{drift_report, CategoricDrift, DriftReport, FreqRow, NumericDrift, SourceDrift, SourceProfile};
pub use invert::{invert, Inversion};
pub use params::{AssignParam, ParamMap, StepParams};
pub use step::{apply_step, fit_step, ColumnFit};

pub const FORMAT_VERSION: u64 = 1;
pub const ARTIFACT_EXTENSION: &str = ".pmz.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Cardinality threshold for automatic root selection.
    pub threshold: usize,
    /// Unassigned columns pass through unchanged instead of being auto-encoded.
    pub passthrough_unassigned: bool,
    pub seed: u64,
    /// Shuffle the rows of the returned train table (seeded).
    pub shuffle_train: bool,
    pub max_depth: usize,
    pub label_column: Option<String>,
    pub assignparam: AssignParam,
    /// Source header → infill kind for all its returned columns.
    pub assigninfill: BTreeMap<String, InfillKind>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_CATEGORY_THRESHOLD,
            passthrough_unassigned: false,
            seed: 0,
            shuffle_train: false,
            max_depth: DEFAULT_MAX_DEPTH,
            label_column: None,
            assignparam: AssignParam::default(),
            assigninfill: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepInput {
    Source,
    Step { step: usize, column: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub category: CategoryKey,
    pub behavior: Behavior,
    pub input_header: String,
    pub input: StepInput,
    pub output_headers: Vec<String>,
    pub fit: ColumnFit,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFit {
    pub root: CategoryKey,
    pub rule: TargetRule,
    pub profile: SourceProfile,
    /// Depth-first, parents before their offspring.
    pub steps: Vec<StepRecord>,
}

impl SourceFit {
    pub fn retained_headers(&self) -> impl Iterator<Item = &String> {
        self.steps
            .iter()
            .filter(|s| s.retained)
            .flat_map(|s| s.output_headers.iter())
    }

    /// Runs every step on a source column; outputs indexed by step.
    pub fn replay(&self, source: &[CellValue]) -> Vec<Vec<Vec<CellValue>>> {
        let mut outputs: Vec<Vec<Vec<CellValue>>> = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            let out = {
                let input = match s.input {
                    StepInput::Source => source,
                    StepInput::Step { step, column } => &outputs[step][column],
                };
                apply_step(&s.fit, input, source)
            };
            outputs.push(out);
        }
        outputs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelFit {
    pub header: String,
    pub fit: ColumnFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub format_version: u64,
    pub options: Options,
    pub registry_snapshot: Registry,
    /// Source headers in train-table order.
    pub source_order: Vec<String>,
    pub per_source: BTreeMap<String, SourceFit>,
    pub output_order: Vec<String>,
    pub infill_spec: BTreeMap<String, InfillSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelFit>,
}

impl FitArtifact {
    pub fn sources(&self) -> impl Iterator<Item = (&String, &SourceFit)> {
        self.source_order.iter().map(|h| (h, &self.per_source[h]))
    }

    pub fn step_count(&self) -> usize {
        self.per_source.values().map(|s| s.steps.len()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub encoded: TidyTable,
    /// Encoded label column, when one is configured.
    pub labels: Option<Vec<CellValue>>,
    pub artifact: FitArtifact,
}

struct DraftStep {
    category: CategoryKey,
    behavior: Behavior,
    input: StepInput,
    suffix: String,
    tokens: Vec<Option<String>>,
    fit: ColumnFit,
    retained: bool,
}

struct SourceDraft {
    root: CategoryKey,
    rule: TargetRule,
    profile: SourceProfile,
    steps: Vec<DraftStep>,
    outputs: Vec<Vec<Vec<CellValue>>>,
}

struct Builder<'a> {
    reg: &'a Registry,
    opts: &'a Options,
    header: &'a str,
    source: &'a [CellValue],
    rule: TargetRule,
    steps: Vec<DraftStep>,
    outputs: Vec<Vec<Vec<CellValue>>>,
}

fn replaces_input(tree: &FamilyTree, downstream: bool) -> bool {
    let slots = if downstream { Slot::DOWNSTREAM } else { Slot::UPSTREAM };
    slots
        .iter()
        .any(|&s| !s.semantics().retain_source && !tree.slot(s).is_empty())
}

impl Builder<'_> {
    fn generation(&mut self, tree: &FamilyTree, downstream: bool, input: StepInput, depth: usize) -> Result<()> {
        if depth > self.opts.max_depth {
            return Err(Error::InvalidRegistry(format!(
                "column {}: family tree deeper than {}",
                self.header, self.opts.max_depth
            )));
        }
        let slots = if downstream { Slot::DOWNSTREAM } else { Slot::UPSTREAM };
        for slot in slots {
            for key in tree.slot(slot) {
                let idx = self.run(key, input)?;
                if slot.semantics().offspring {
                    let child = self.reg.lookup(key.as_str())?.clone();
                    self.steps[idx].retained = !replaces_input(&child, true);
                    for column in 0..self.outputs[idx].len() {
                        self.generation(&child, true, StepInput::Step { step: idx, column }, depth + 1)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn run(&mut self, key: &CategoryKey, input: StepInput) -> Result<usize> {
        let entry = self.reg.entry(key.as_str())?;
        let params = self.opts.assignparam.resolve(key.as_str(), entry.behavior, self.header);
        let sp = StepParams::parse(key.as_str(), entry.behavior, &params)?;
        let input_col: &[CellValue] = match input {
            StepInput::Source => self.source,
            StepInput::Step { step, column } => &self.outputs[step][column],
        };
        let (fit, tokens) = fit_step(entry.behavior, &sp, input_col, self.rule).map_err(|e| in_column(self.header, e))?;
        let out = apply_step(&fit, input_col, self.source);
        debug_assert_eq!(out.len(), tokens.len());
        self.steps.push(DraftStep {
            category: key.clone(),
            behavior: entry.behavior,
            input,
            suffix: entry.suffix.clone(),
            tokens,
            fit,
            retained: true,
        });
        self.outputs.push(out);
        Ok(self.steps.len() - 1)
    }
}

fn in_column(header: &str, e: Error) -> Error {
    match e {
        Error::Precondition(m) => Error::Precondition(format!("column {header}: {m}")),
        other => other,
    }
}

/// Infill target rule implied by a root category.
pub fn root_rule(reg: &Registry, opts: &Options, root: &CategoryKey, header: &str) -> Result<TargetRule> {
    let entry = reg.entry(root.as_str())?;
    Ok(match entry.behavior {
        Behavior::Nmbr | Behavior::Mnmx => TargetRule::NonNumeric,
        Behavior::Nmcm | Behavior::Nmc7 => {
            let params = opts.assignparam.resolve(root.as_str(), entry.behavior, header);
            let sp = StepParams::parse(root.as_str(), entry.behavior, &params)?;
            TargetRule::NoNumericExtract(sp.extract)
        }
        _ => TargetRule::MissingOnly,
    })
}

fn fit_source(reg: &Registry, opts: &Options, header: &str, source: &[CellValue], root: &CategoryKey) -> Result<SourceDraft> {
    let rule = root_rule(reg, opts, root, header)?;
    let tree = reg.lookup(root.as_str())?.clone();
    let mut b = Builder {
        reg,
        opts,
        header,
        source,
        rule,
        steps: Vec::new(),
        outputs: Vec::new(),
    };
    b.generation(&tree, false, StepInput::Source, 0)?;
    Ok(SourceDraft {
        root: root.clone(),
        rule,
        profile: SourceProfile::of(source),
        steps: b.steps,
        outputs: b.outputs,
    })
}

fn compose_header(input: &str, suffix: &str, token: Option<&str>) -> String {
    let mut h = input.to_string();
    for part in [Some(suffix), token].into_iter().flatten() {
        if !part.is_empty() {
            h.push('_');
            h.push_str(part);
        }
    }
    h
}

fn unique_header(base: String, taken: &mut HashSet<String>) -> String {
    let mut h = base.clone();
    let mut n = 0;
    while taken.contains(&h) {
        n += 1;
        h = format!("{base}_{n}");
    }
    taken.insert(h.clone());
    h
}

fn label_fit(header: &str, col: &[CellValue]) -> LabelFit {
    let fit = if infer_coltype(col) == ColType::Numeric {
        ColumnFit::Passthrough
    } else {
        ColumnFit::Ordinal {
            map: CodeMap::fit(col),
        }
    };
    LabelFit {
        header: header.to_string(),
        fit,
    }
}

/// Per-source retained columns after infill, in output order.
fn finish_source(
    sf: &SourceFit,
    mut outputs: Vec<Vec<Vec<CellValue>>>,
    source: &[CellValue],
    infill: &BTreeMap<String, InfillSpec>,
) -> Vec<Vec<CellValue>> {
    let mask = mark_targets(source, sf.rule);
    let mut cols = Vec::new();
    for (s, out) in sf.steps.iter().zip(outputs.iter_mut()) {
        if !s.retained {
            continue;
        }
        for (h, col) in s.output_headers.iter().zip(out.drain(..)) {
            let mut col = col;
            if let Some(spec) = infill.get(h) {
                spec.apply(&mut col, &mask);
            }
            cols.push(col);
        }
    }
    cols
}

/// Fits every source column and returns the encoded train table with the
/// artifact needed to repeat the encoding.
pub fn fit(train: &TidyTable, assignments: &BTreeMap<String, String>, reg: &Registry, opts: &Options) -> Result<FitOutput> {
    if train.row_count() == 0 {
        return Err(Error::Precondition("train table has no rows".into()));
    }
    let diags = reg.validate(opts.max_depth);
    if let Some(d) = diags.iter().find(|d| d.severity == Severity::Error) {
        return Err(Error::InvalidRegistry(d.to_string()));
    }
    for d in diags.iter().filter(|d| d.severity == Severity::Warning) {
        log::warn!("{d}");
    }
    for h in assignments.keys().chain(opts.assigninfill.keys()) {
        if train.column(h).is_none() {
            return Err(Error::Precondition(format!("assigned column {h:?} is not in the train table")));
        }
    }
    let label = match &opts.label_column {
        Some(l) => {
            if assignments.contains_key(l) {
                return Err(Error::Config(format!("label column {l:?} also has a root assignment")));
            }
            let col = train
                .column(l)
                .ok_or_else(|| Error::Precondition(format!("label column {l:?} is not in the train table")))?;
            Some(label_fit(l, col))
        }
        None => None,
    };

    let sources: Vec<&String> = train
        .headers()
        .iter()
        .filter(|h| Some(*h) != opts.label_column.as_ref())
        .collect();
    let mut roots = Vec::with_capacity(sources.len());
    for h in &sources {
        let col = train.column(h).expect("header from table");
        let root = match assignments.get(*h) {
            Some(name) => reg.resolve_name(name)?,
            None if opts.passthrough_unassigned => CategoryKey::new("excl")?,
            None => auto_root_select(col, &column_stats(col), opts.threshold),
        };
        reg.lookup(root.as_str())?;
        roots.push(root);
    }

    let drafts: Vec<SourceDraft> = sources
        .par_iter()
        .zip(roots.par_iter())
        .map(|(h, root)| fit_source(reg, opts, h, train.column(h).expect("header from table"), root))
        .collect::<Result<_>>()?;

    // Header assignment and infill fitting, in source order.
    let mut taken = HashSet::new();
    let mut per_source = BTreeMap::new();
    let mut output_order = Vec::new();
    let mut infill_spec = BTreeMap::new();
    let mut columns = Vec::new();
    for (h, draft) in sources.iter().zip(drafts) {
        let source = train.column(h).expect("header from table");
        let mut steps: Vec<StepRecord> = Vec::with_capacity(draft.steps.len());
        for d in draft.steps {
            let input_header = match d.input {
                StepInput::Source => (*h).clone(),
                StepInput::Step { step, column } => steps[step].output_headers[column].clone(),
            };
            let output_headers = d
                .tokens
                .iter()
                .map(|t| unique_header(compose_header(&input_header, &d.suffix, t.as_deref()), &mut taken))
                .collect();
            steps.push(StepRecord {
                category: d.category,
                behavior: d.behavior,
                input_header,
                input: d.input,
                output_headers,
                fit: d.fit,
                retained: d.retained,
            });
        }
        let sf = SourceFit {
            root: draft.root,
            rule: draft.rule,
            profile: draft.profile,
            steps,
        };

        let mask = mark_targets(source, sf.rule);
        let assigned = opts.assigninfill.get(*h).copied();
        for (s, out) in sf.steps.iter().zip(&draft.outputs) {
            if !s.retained {
                continue;
            }
            let entry = reg.entry(s.category.as_str())?;
            let kind = match (s.behavior, assigned) {
                (Behavior::Narw, _) => InfillKind::TransformDefault,
                (_, Some(k)) => k,
                (_, None) => entry.default_infill,
            };
            for (oh, col) in s.output_headers.iter().zip(out) {
                let spec = InfillSpec::fit(kind, col, &mask, entry.coltype_class).map_err(|e| match e {
                    Error::Config(m) => Error::Config(format!("column {h}: {m}")),
                    other => other,
                })?;
                infill_spec.insert(oh.clone(), spec);
            }
        }
        output_order.extend(sf.retained_headers().cloned());
        columns.extend(finish_source(&sf, draft.outputs, source, &infill_spec));
        per_source.insert((*h).clone(), sf);
    }

    let artifact = FitArtifact {
        format_version: FORMAT_VERSION,
        options: opts.clone(),
        registry_snapshot: reg.clone(),
        source_order: sources.iter().map(|h| (*h).clone()).collect(),
        per_source,
        output_order: output_order.clone(),
        infill_spec,
        label,
    };
    let mut encoded = TidyTable::new(output_order, columns)?;
    let mut labels = encode_labels(&artifact, train)?;
    if opts.shuffle_train {
        let mut rows: Vec<usize> = (0..encoded.row_count()).collect();
        rows.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
        encoded = encoded.select_rows(&rows);
        labels = labels.map(|l| rows.iter().map(|&r| l[r].clone()).collect());
    }
    Ok(FitOutput {
        encoded,
        labels,
        artifact,
    })
}

/// Encodes a table with a fitted artifact. Output headers and their order are
/// fixed by the artifact.
pub fn apply(artifact: &FitArtifact, test: &TidyTable) -> Result<TidyTable> {
    for h in &artifact.source_order {
        if test.column(h).is_none() {
            return Err(Error::MissingColumn(h.clone()));
        }
    }
    let label = artifact.label.as_ref().map(|l| l.header.as_str());
    for h in test.headers() {
        if !artifact.per_source.contains_key(h) && Some(h.as_str()) != label {
            log::warn!("ignoring column {h:?} not seen at fit time");
        }
    }
    let per_source: Vec<Vec<Vec<CellValue>>> = artifact
        .source_order
        .par_iter()
        .map(|h| {
            let sf = &artifact.per_source[h];
            let source = test.column(h).expect("checked above");
            finish_source(sf, sf.replay(source), source, &artifact.infill_spec)
        })
        .collect();
    let columns: Vec<Vec<CellValue>> = per_source.into_iter().flatten().collect();
    TidyTable::new(artifact.output_order.clone(), columns)
}

/// Encoded label column if the artifact has a label fit and the table
/// carries the label.
pub fn encode_labels(artifact: &FitArtifact, table: &TidyTable) -> Result<Option<Vec<CellValue>>> {
    let Some(l) = &artifact.label else {
        return Ok(None);
    };
    Ok(table.column(&l.header).map(|col| {
        apply_step(&l.fit, col, col)
            .pop()
            .expect("label encoders emit one column")
    }))
}

/// Canonical JSON: sorted keys, shortest round-trip floats.
pub fn serialize(artifact: &FitArtifact) -> Result<Vec<u8>> {
    let value = serde_json::to_value(artifact).map_err(|e| Error::Malformed(e.to_string()))?;
    let mut out = serde_json::to_vec_pretty(&value).map_err(|e| Error::Malformed(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn deserialize(bytes: &[u8]) -> Result<FitArtifact> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Malformed("missing format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Malformed(e.to_string()))
}

pub fn save_artifact(artifact: &FitArtifact, path: impl AsRef<std::path::Path>) -> Result<()> {
    std::fs::write(path, serialize(artifact)?)?;
    Ok(())
}

pub fn load_artifact(path: impl AsRef<std::path::Path>) -> Result<FitArtifact> {
    deserialize(&std::fs::read(path)?)
}
