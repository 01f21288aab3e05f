//! Per-step parameters supplied through `assignparam`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::extract_search::{ExtractFlags, SearchSpec};
use crate::registry::Behavior;
use crate::stringparse::{space_and_punctuation, OverlapScanConfig, DEFAULT_PLUG};

pub type ParamMap = BTreeMap<String, Value>;

/// category → source column → parameters, layered over a per-category
/// default and a global layer. Global parameters reach only the categories
/// that accept them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignParam {
    #[serde(default)]
    pub per_column: BTreeMap<String, BTreeMap<String, ParamMap>>,
    #[serde(default)]
    pub default_assignparam: BTreeMap<String, ParamMap>,
    #[serde(default)]
    pub global_assignparam: ParamMap,
}

impl AssignParam {
    /// Parses the config shape: category keys at the top level plus optional
    /// `default_assignparam` and `global_assignparam` blocks.
    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Config("assignparam must be an object".into()))?;
        let mut out = AssignParam::default();
        for (k, inner) in obj {
            if k == "default_assignparam" {
                out.default_assignparam = serde_json::from_value(inner.clone())
                    .map_err(|e| Error::Config(format!("default_assignparam: {e}")))?;
            } else if k == "global_assignparam" {
                out.global_assignparam = serde_json::from_value(inner.clone())
                    .map_err(|e| Error::Config(format!("global_assignparam: {e}")))?;
            } else {
                let cols = serde_json::from_value(inner.clone())
                    .map_err(|e| Error::Config(format!("assignparam.{k}: {e}")))?;
                out.per_column.insert(k.clone(), cols);
            }
        }
        Ok(out)
    }

    /// Global, then default, then column-specific parameters for one step.
    pub fn resolve(&self, category: &str, behavior: Behavior, column: &str) -> ParamMap {
        let allowed = allowed_keys(behavior);
        let mut out: ParamMap = self
            .global_assignparam
            .iter()
            .filter(|(k, _)| allowed.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        if let Some(p) = self.default_assignparam.get(category) {
            out.extend(p.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        if let Some(p) = self.per_column.get(category).and_then(|c| c.get(column)) {
            out.extend(p.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        out
    }

    pub fn set(&mut self, category: &str, column: &str, key: &str, value: Value) {
        self.per_column
            .entry(category.to_string())
            .or_default()
            .entry(column.to_string())
            .or_default()
            .insert(key.to_string(), value);
    }
}

/// Typed view of a step's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StepParams {
    pub upcs_active: bool,
    pub scan: OverlapScanConfig,
    pub plug: String,
    pub extract: ExtractFlags,
    pub search: Option<SearchSpec>,
}

struct Reader<'a> {
    category: &'a str,
    params: &'a ParamMap,
}

impl Reader<'_> {
    fn err(&self, param: &str, reason: impl Into<String>) -> Error {
        Error::InvalidParam {
            category: self.category.to_string(),
            param: param.to_string(),
            reason: reason.into(),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| self.err(key, "expected a boolean")),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| self.err(key, "expected a non-negative integer")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| self.err(key, "expected a string")),
        }
    }

    fn strings(&self, key: &str) -> Result<Vec<String>> {
        match self.params.get(key) {
            None => Ok(Vec::new()),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|_| self.err(key, "expected a list of strings")),
        }
    }

    fn string_groups(&self, key: &str) -> Result<Vec<Vec<String>>> {
        match self.params.get(key) {
            None => Ok(Vec::new()),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|_| self.err(key, "expected a list of string lists")),
        }
    }
}

fn allowed_keys(behavior: Behavior) -> &'static [&'static str] {
    use Behavior::*;
    match behavior {
        Upcs => &["activate"],
        Splt | Sp15 | Sp19 | Sbst | Spl2 | Spl9 => &[
            "min_len",
            "exclude_space_punct",
            "space_and_punctuation",
            "exclude_chars",
            "test_subset_assumption",
        ],
        Spl5 | Sp10 => &[
            "min_len",
            "exclude_space_punct",
            "space_and_punctuation",
            "exclude_chars",
            "test_subset_assumption",
            "plug",
        ],
        Nmcm | Nmc7 => &["allow_commas", "allow_decimal", "allow_negative"],
        Srch => &["search", "aggregate", "ordinal", "case_sensitive"],
        Excl | Narw | Ord3 | Onht | Bnry | Binary1010 | Nmbr | Mnmx => &[],
    }
}

impl StepParams {
    pub fn parse(category: &str, behavior: Behavior, params: &ParamMap) -> Result<Self> {
        let r = Reader { category, params };
        let allowed = allowed_keys(behavior);
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(r.err(k, "unknown parameter"));
        }

        let floor = if behavior == Behavior::Sbst { 1 } else { 2 };
        let min_len = r.usize("min_len", crate::stringparse::DEFAULT_MIN_LEN)?;
        if min_len < floor {
            return Err(r.err("min_len", format!("must be at least {floor}")));
        }
        let mut exclude_chars: BTreeSet<char> = r
            .string("exclude_chars")?
            .unwrap_or_default()
            .chars()
            .collect();
        // `space_and_punctuation: false` is the same switch in the negative
        if r.bool("exclude_space_punct", false)? || !r.bool("space_and_punctuation", true)? {
            exclude_chars.extend(space_and_punctuation());
        }
        let scan = OverlapScanConfig {
            min_len,
            exclude_chars,
            single_id: true,
            test_subset_assumption: r.bool("test_subset_assumption", false)?,
        };

        let plug = r.string("plug")?.unwrap_or_else(|| DEFAULT_PLUG.to_string());
        if plug.is_empty() {
            return Err(r.err("plug", "must not be empty"));
        }

        let defaults = ExtractFlags::default();
        let extract = ExtractFlags {
            allow_commas: r.bool("allow_commas", defaults.allow_commas)?,
            allow_decimal: r.bool("allow_decimal", defaults.allow_decimal)?,
            allow_negative: r.bool("allow_negative", defaults.allow_negative)?,
        };

        let search = if behavior == Behavior::Srch {
            let mut spec = SearchSpec::new(
                &r.strings("search")?,
                &r.string_groups("aggregate")?,
                r.bool("ordinal", false)?,
            )
            .map_err(|e| match e {
                Error::InvalidParam { param, reason, .. } => Error::InvalidParam {
                    category: category.to_string(),
                    param,
                    reason,
                },
                other => other,
            })?;
            spec.case_sensitive = r.bool("case_sensitive", false)?;
            Some(spec)
        } else {
            None
        };

        Ok(Self {
            upcs_active: r.bool("activate", true)?,
            scan,
            plug,
            extract,
            search,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn default_layer_is_overlaid() {
        let ap = AssignParam::from_value(&json!({
            "default_assignparam": {"spl9": {"min_len": 4}},
            "spl9": {"col2": {"min_len": 3, "exclude_space_punct": true}}
        }))
        .unwrap();
        let p = ap.resolve("spl9", Behavior::Spl9, "col2");
        assert_eq!(p["min_len"], json!(3));
        assert_eq!(ap.resolve("spl9", Behavior::Spl9, "other")["min_len"], json!(4));
        let sp = StepParams::parse("spl9", Behavior::Spl9, &p).unwrap();
        assert_eq!(sp.scan.min_len, 3);
        assert!(sp.scan.exclude_chars.contains(&' '));
    }

    #[test]
    fn global_layer_reaches_accepting_categories() {
        let ap = AssignParam::from_value(&json!({
            "global_assignparam": {"min_len": 3, "allow_negative": true}
        }))
        .unwrap();
        assert_eq!(ap.resolve("splt", Behavior::Splt, "c").len(), 1);
        assert_eq!(ap.resolve("nmcm", Behavior::Nmcm, "c").len(), 1);
        assert!(ap.resolve("ord3", Behavior::Ord3, "c").is_empty());
    }

    #[test]
    fn space_and_punctuation_switch() {
        let p: ParamMap = [("space_and_punctuation".to_string(), json!(false))].into();
        let sp = StepParams::parse("splt", Behavior::Splt, &p).unwrap();
        assert!(sp.scan.exclude_chars.contains(&' '));
        assert!(sp.scan.exclude_chars.contains(&'.'));
    }

    #[test]
    fn rejects_bad_params() {
        let p: ParamMap = [("min_len".to_string(), json!(1))].into();
        assert!(StepParams::parse("splt", Behavior::Splt, &p).unwrap_err().is_config());
        let p: ParamMap = [("bogus".to_string(), json!(1))].into();
        assert!(StepParams::parse("ord3", Behavior::Ord3, &p).is_err());
        let p: ParamMap = [("min_len".to_string(), json!(1))].into();
        assert!(StepParams::parse("sbst", Behavior::Sbst, &p).is_ok());
        assert!(StepParams::parse("srch", Behavior::Srch, &ParamMap::new()).is_err());
    }

    #[test]
    fn search_spec_from_params() {
        let p: ParamMap = [
            ("search".to_string(), json!(["Mac"])),
            ("aggregate".to_string(), json!([["USA", "U.S."]])),
        ]
        .into();
        let sp = StepParams::parse("srch", Behavior::Srch, &p).unwrap();
        let spec = sp.search.unwrap();
        assert_eq!(spec.groups.len(), 2);
        assert_eq!(spec.groups[1].label, "USA|U.S.");
    }
}
