use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use parsemunge::importance::{builtin_tree, permutation_importance, ImportanceConfig, Task};
use parsemunge::infill::TargetRule;
use parsemunge::tidytable::{default_missing_tokens, infer_coltype, load_csv, write_csv, CellValue, ColType, TidyTable};
use parsemunge::treeengine::{
    apply, drift_report, encode_labels, fit, invert, load_artifact, save_artifact, ColumnFit, FitArtifact,
    SourceProfile, StepInput, ARTIFACT_EXTENSION,
};
use parsemunge::{Error, Result};

use crate::config::RunConfig;

pub struct FitArgs {
    pub train: PathBuf,
    pub test: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub threshold: Option<usize>,
    pub labels: Option<String>,
}

fn read_table(path: &Path) -> Result<TidyTable> {
    load_csv(path, &default_missing_tokens()).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn label_table(header: &str, labels: Vec<CellValue>) -> Result<TidyTable> {
    TidyTable::from_pairs([(header, labels)])
}

fn rule_name(rule: &TargetRule) -> &'static str {
    match rule {
        TargetRule::MissingOnly => "missing",
        TargetRule::NonNumeric => "missing or non-numeric",
        TargetRule::NoNumericExtract(_) => "missing or no numeric partition",
    }
}

/// Per-source derivation trees, returned headers and train cardinality.
pub fn report(artifact: &FitArtifact) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "format version {}; {} sources, {} steps, {} returned columns",
        artifact.format_version,
        artifact.source_order.len(),
        artifact.step_count(),
        artifact.output_order.len()
    );
    for (h, sf) in artifact.sources() {
        let card = match &sf.profile {
            SourceProfile::Numeric { mean, std } => format!("numeric, mean {mean:.6}, std {std:.6}"),
            SourceProfile::Categoric { uniques, .. } => format!("{} uniques", uniques.len()),
            SourceProfile::Empty => "no values".to_string(),
        };
        let _ = writeln!(out, "\n{h}: root {} ({card}; infill targets: {})", sf.root, rule_name(&sf.rule));
        let mut depth = Vec::with_capacity(sf.steps.len());
        for s in &sf.steps {
            let d = match s.input {
                StepInput::Source => 0,
                StepInput::Step { step, .. } => depth[step] + 1,
            };
            depth.push(d);
            let mark = if s.retained { "" } else { "  (replaced)" };
            let _ = writeln!(
                out,
                "  {}{} [{}] {} -> {}{mark}",
                "  ".repeat(d),
                s.category,
                s.behavior.name(),
                s.input_header,
                s.output_headers.join(", ")
            );
        }
        let kept: Vec<&str> = sf.retained_headers().map(String::as_str).collect();
        let _ = writeln!(out, "  returned: {}", kept.join(", "));
    }
    if let Some(l) = &artifact.label {
        let kind = match &l.fit {
            ColumnFit::Ordinal { map } => format!("ordinal, {} classes", map.len()),
            _ => "passthrough".to_string(),
        };
        let _ = writeln!(out, "\nlabel: {} ({kind})", l.header);
    }
    out
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let mut opts = cfg.options()?;
    if let Some(s) = args.seed {
        opts.seed = s;
    }
    if let Some(t) = args.threshold {
        opts.threshold = t;
    }
    if let Some(l) = &args.labels {
        opts.label_column = Some(l.clone());
    }
    let reg = cfg.registry()?;
    let assignments = cfg.assignments()?;
    let train = read_table(&args.train)?;
    cfg.check_headers(&opts, &train)?;
    let test = args.test.as_deref().map(read_table).transpose()?;

    let out = fit(&train, &assignments, &reg, &opts)?;
    let test_encoded = test.as_ref().map(|t| apply(&out.artifact, t)).transpose()?;

    prepare_out_dir(&args.out_dir)?;
    write_csv(&out.encoded, args.out_dir.join("train_encoded.csv"))?;
    if let (Some(l), Some(labels)) = (&out.artifact.label, out.labels) {
        write_csv(&label_table(&l.header, labels)?, args.out_dir.join("train_labels.csv"))?;
    }
    if let (Some(t), Some(enc)) = (&test, &test_encoded) {
        write_csv(enc, args.out_dir.join("test_encoded.csv"))?;
        if let (Some(l), Some(labels)) = (&out.artifact.label, encode_labels(&out.artifact, t)?) {
            write_csv(&label_table(&l.header, labels)?, args.out_dir.join("test_labels.csv"))?;
        }
    }
    let artifact_path = args.out_dir.join(format!("fit{ARTIFACT_EXTENSION}"));
    save_artifact(&out.artifact, &artifact_path)?;
    fs::write(args.out_dir.join("fit_report.txt"), report(&out.artifact))?;

    println!(
        "fit: {} rows, {} sources -> {} columns; artifact {}",
        train.row_count(),
        out.artifact.source_order.len(),
        out.artifact.output_order.len(),
        artifact_path.display()
    );
    Ok(())
}

pub fn cmd_apply(artifact: &Path, test: &Path, out_dir: &Path, drift: bool) -> Result<()> {
    let artifact = load_artifact(artifact)?;
    let table = read_table(test)?;
    let encoded = apply(&artifact, &table)?;
    prepare_out_dir(out_dir)?;
    write_csv(&encoded, out_dir.join("test_encoded.csv"))?;
    if let (Some(l), Some(labels)) = (&artifact.label, encode_labels(&artifact, &table)?) {
        write_csv(&label_table(&l.header, labels)?, out_dir.join("test_labels.csv"))?;
    }
    println!(
        "apply: {} rows -> {} columns in {}",
        encoded.row_count(),
        encoded.n_cols(),
        out_dir.join("test_encoded.csv").display()
    );
    if drift {
        print!("{}", drift_report(&artifact, &table)?.render());
    }
    Ok(())
}

pub fn cmd_invert(artifact: &Path, encoded: &Path, out_dir: &Path) -> Result<()> {
    let artifact = load_artifact(artifact)?;
    let table = read_table(encoded)?;
    let inv = invert(&artifact, &table)?;
    for h in &inv.non_invertible {
        eprintln!("not invertible: {h}");
    }
    prepare_out_dir(out_dir)?;
    write_csv(&inv.table, out_dir.join("inverted.csv"))?;
    println!(
        "invert: {} of {} sources recovered in {}",
        inv.table.n_cols(),
        artifact.source_order.len(),
        out_dir.join("inverted.csv").display()
    );
    Ok(())
}

/// Text labels and small integer label sets are classes; other numbers regress.
fn infer_task(labels: &[CellValue]) -> Task {
    if infer_coltype(labels) != ColType::Numeric {
        return Task::Classification;
    }
    let values: Vec<f64> = labels.iter().filter_map(CellValue::as_number).collect();
    let integral = values.iter().all(|v| v.fract() == 0.0);
    let mut distinct: Vec<u64> = values.iter().map(|v| v.to_bits()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if integral && distinct.len() <= 10 {
        Task::Classification
    } else {
        Task::Regression
    }
}

pub struct ImportanceArgs {
    pub train: PathBuf,
    pub config: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub threshold: Option<usize>,
    pub labels: Option<String>,
}

pub fn cmd_importance(args: &ImportanceArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let mut opts = cfg.options()?;
    if let Some(s) = args.seed {
        opts.seed = s;
    }
    if let Some(t) = args.threshold {
        opts.threshold = t;
    }
    if let Some(l) = &args.labels {
        opts.label_column = Some(l.clone());
    }
    let label = opts
        .label_column
        .clone()
        .ok_or_else(|| Error::Config("importance needs labels_column in the config or --labels".into()))?;
    let reg = cfg.registry()?;
    let assignments = cfg.assignments()?;
    let train = read_table(&args.train)?;
    cfg.check_headers(&opts, &train)?;

    let out = fit(&train, &assignments, &reg, &opts)?;
    let labels = train.column(&label).expect("checked above").to_vec();
    let task = match cfg.task.as_deref() {
        Some("regression") => Task::Regression,
        Some(_) => Task::Classification,
        None => infer_task(&labels),
    };
    let model = builtin_tree(task, 8, 10, opts.seed);
    let icfg = ImportanceConfig {
        val_fraction: cfg.valpercent.unwrap_or(ImportanceConfig::default().val_fraction),
        seed: opts.seed,
        ..ImportanceConfig::default()
    };
    let rep = permutation_importance(&out.artifact, &train, &labels, &model, &icfg)?;

    prepare_out_dir(&args.out_dir)?;
    fs::write(args.out_dir.join("importance.json"), rep.to_json()?)?;
    fs::write(args.out_dir.join("importance.txt"), rep.render())?;
    let top = rep.ranked().first().map(|(h, s)| format!("{h} ({s:+.4})")).unwrap_or_default();
    println!(
        "importance: base {} {:.4} on {} validation rows; top feature {top}",
        rep.metric, rep.base_score, rep.validation_rows
    );
    Ok(())
}

pub fn cmd_inspect(artifact: &Path) -> Result<()> {
    let artifact = load_artifact(artifact)?;
    print!("{}", report(&artifact));
    Ok(())
}
