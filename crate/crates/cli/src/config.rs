//! Run configuration read from the `--config` JSON document.

use std::collections::BTreeMap;
use std::path::Path;

use parsemunge::infill::InfillKind;
use parsemunge::registry::{Registry, RegistryOverrides};
use parsemunge::tidytable::TidyTable;
use parsemunge::treeengine::{AssignParam, Options};
use parsemunge::{Error, Result};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root category → source headers.
    #[serde(default)]
    pub assigncat: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub assignparam: Option<Value>,
    /// Infill kind → source headers.
    #[serde(default)]
    pub assigninfill: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub transformdict: Option<Value>,
    #[serde(default)]
    pub processdict: Option<Value>,
    /// Shorthand for `assignparam.srch`: column → search parameters.
    #[serde(default)]
    pub srch: BTreeMap<String, Value>,
    #[serde(default)]
    pub labels_column: Option<String>,
    #[serde(default, alias = "randomseed")]
    pub seed: Option<u64>,
    #[serde(default, alias = "numbercategoryheuristic")]
    pub threshold: Option<usize>,
    /// Validation fraction for importance.
    #[serde(default)]
    pub valpercent: Option<f64>,
    #[serde(default)]
    pub shuffletrain: bool,
    /// `"excl"` passes unassigned columns through untouched.
    #[serde(default)]
    pub powertransform: Option<Value>,
    /// `classification` or `regression`; inferred from the labels when absent.
    #[serde(default)]
    pub task: Option<String>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| config_err(format!("config: {e}")))?;
        if let Some(v) = cfg.valpercent {
            if !(0.0..1.0).contains(&v) {
                return Err(config_err(format!("valpercent must be in [0, 1), got {v}")));
            }
        }
        match &cfg.powertransform {
            None | Some(Value::Bool(false)) => {}
            Some(Value::String(s)) if s == "excl" => {}
            Some(other) => return Err(config_err(format!("powertransform: unsupported value {other}"))),
        }
        if let Some(t) = &cfg.task {
            if t != "classification" && t != "regression" {
                return Err(config_err(format!("task must be classification or regression, got {t:?}")));
            }
        }
        Ok(cfg)
    }

    /// Registry with `transformdict`/`processdict` applied.
    pub fn registry(&self) -> Result<Registry> {
        if self.transformdict.is_none() && self.processdict.is_none() {
            return Ok(Registry::builtin());
        }
        let mut doc = serde_json::Map::new();
        if let Some(t) = &self.transformdict {
            doc.insert("transformdict".into(), t.clone());
        }
        if let Some(p) = &self.processdict {
            doc.insert("processdict".into(), p.clone());
        }
        RegistryOverrides::from_json(&Value::Object(doc).to_string())?.apply(&Registry::builtin())
    }

    /// Source header → root category.
    pub fn assignments(&self) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for (root, headers) in &self.assigncat {
            for h in headers {
                if let Some(prev) = out.insert(h.clone(), root.clone()) {
                    return Err(config_err(format!("assigncat: {h:?} is assigned to both {prev} and {root}")));
                }
            }
        }
        Ok(out)
    }

    fn infill(&self) -> Result<BTreeMap<String, InfillKind>> {
        let mut out = BTreeMap::new();
        for (name, headers) in &self.assigninfill {
            let kind = match InfillKind::from_name(name) {
                Some(k) => k,
                None if name == "MLinfill" => {
                    return Err(config_err("assigninfill: MLinfill is not supported"));
                }
                None => return Err(config_err(format!("assigninfill: unknown infill kind {name:?}"))),
            };
            for h in headers {
                if out.insert(h.clone(), kind).is_some() {
                    return Err(config_err(format!("assigninfill: {h:?} listed under more than one kind")));
                }
            }
        }
        Ok(out)
    }

    fn assignparam(&self) -> Result<AssignParam> {
        let mut ap = match &self.assignparam {
            Some(v) => AssignParam::from_value(v)?,
            None => AssignParam::default(),
        };
        for (column, params) in &self.srch {
            let obj = params
                .as_object()
                .ok_or_else(|| config_err(format!("srch.{column}: expected an object")))?;
            for (k, v) in obj {
                ap.set("srch", column, k, v.clone());
            }
        }
        Ok(ap)
    }

    pub fn options(&self) -> Result<Options> {
        let mut opts = Options {
            passthrough_unassigned: matches!(&self.powertransform, Some(Value::String(s)) if s == "excl"),
            shuffle_train: self.shuffletrain,
            label_column: self.labels_column.clone(),
            assignparam: self.assignparam()?,
            assigninfill: self.infill()?,
            ..Options::default()
        };
        if let Some(s) = self.seed {
            opts.seed = s;
        }
        if let Some(t) = self.threshold {
            opts.threshold = t;
        }
        Ok(opts)
    }

    /// Every header the config names must be in the train table.
    pub fn check_headers(&self, opts: &Options, table: &TidyTable) -> Result<()> {
        let missing = |key: &str, h: &str| -> Result<()> {
            if table.column(h).is_none() {
                return Err(config_err(format!("{key} references column {h:?}, which is not in the train table")));
            }
            Ok(())
        };
        for (root, headers) in &self.assigncat {
            for h in headers {
                missing(&format!("assigncat.{root}"), h)?;
            }
        }
        for (kind, headers) in &self.assigninfill {
            for h in headers {
                missing(&format!("assigninfill.{kind}"), h)?;
            }
        }
        for (category, cols) in &opts.assignparam.per_column {
            for h in cols.keys() {
                missing(&format!("assignparam.{category}"), h)?;
            }
        }
        if let Some(l) = &opts.label_column {
            missing("labels_column", l)?;
        }
        Ok(())
    }
}
