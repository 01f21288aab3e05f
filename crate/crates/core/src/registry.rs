//! Transformation category registry.
//!
//! Each category key owns a [`FamilyTree`] (which categories to apply and
//! where) and a [`ProcessEntry`] (which transform behavior it runs and how its
//! output is classified). The eight primitive slots of a family tree carry
//! fixed semantics, see [`Slot::semantics`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infill::InfillKind;

/// Default cap on offspring recursion depth.
pub const DEFAULT_MAX_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CategoryKey(String);

impl CategoryKey {
    pub fn new(key: impl Into<String>) -> Result<Self> {
        let key = key.into();
        if key.is_empty() || key.chars().any(|c| c == '_' || c == ',' || c.is_whitespace()) {
            return Err(Error::InvalidKey(key));
        }
        Ok(Self(key))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CategoryKey {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::new(s)
    }
}

impl From<CategoryKey> for String {
    fn from(k: CategoryKey) -> String {
        k.0
    }
}

impl fmt::Display for CategoryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The eight family tree primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Parents,
    Siblings,
    Auntsuncles,
    Cousins,
    Children,
    Niecesnephews,
    Coworkers,
    Friends,
}

impl Slot {
    pub const UPSTREAM: [Slot; 4] = [Slot::Parents, Slot::Siblings, Slot::Auntsuncles, Slot::Cousins];
    pub const DOWNSTREAM: [Slot; 4] = [
        Slot::Children,
        Slot::Niecesnephews,
        Slot::Coworkers,
        Slot::Friends,
    ];
    pub const ALL: [Slot; 8] = [
        Slot::Parents,
        Slot::Siblings,
        Slot::Auntsuncles,
        Slot::Cousins,
        Slot::Children,
        Slot::Niecesnephews,
        Slot::Coworkers,
        Slot::Friends,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::Parents => "parents",
            Slot::Siblings => "siblings",
            Slot::Auntsuncles => "auntsuncles",
            Slot::Cousins => "cousins",
            Slot::Children => "children",
            Slot::Niecesnephews => "niecesnephews",
            Slot::Coworkers => "coworkers",
            Slot::Friends => "friends",
        }
    }

    /// `(offspring, retain_source)` for this slot.
    pub fn semantics(self) -> PrimitiveSemantics {
        let (offspring, retain_source) = match self {
            Slot::Parents | Slot::Children => (true, false),
            Slot::Siblings | Slot::Niecesnephews => (true, true),
            Slot::Auntsuncles | Slot::Coworkers => (false, false),
            Slot::Cousins | Slot::Friends => (false, true),
        };
        PrimitiveSemantics {
            offspring,
            retain_source,
        }
    }

    /// Upstream slot a downstream slot plays for the next generation.
    pub fn as_upstream(self) -> Slot {
        match self {
            Slot::Children => Slot::Parents,
            Slot::Niecesnephews => Slot::Siblings,
            Slot::Coworkers => Slot::Auntsuncles,
            Slot::Friends => Slot::Cousins,
            upstream => upstream,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimitiveSemantics {
    pub offspring: bool,
    pub retain_source: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyTree {
    pub parents: Vec<CategoryKey>,
    pub siblings: Vec<CategoryKey>,
    pub auntsuncles: Vec<CategoryKey>,
    pub cousins: Vec<CategoryKey>,
    pub children: Vec<CategoryKey>,
    pub niecesnephews: Vec<CategoryKey>,
    pub coworkers: Vec<CategoryKey>,
    pub friends: Vec<CategoryKey>,
}

impl FamilyTree {
    pub fn slot(&self, slot: Slot) -> &[CategoryKey] {
        match slot {
            Slot::Parents => &self.parents,
            Slot::Siblings => &self.siblings,
            Slot::Auntsuncles => &self.auntsuncles,
            Slot::Cousins => &self.cousins,
            Slot::Children => &self.children,
            Slot::Niecesnephews => &self.niecesnephews,
            Slot::Coworkers => &self.coworkers,
            Slot::Friends => &self.friends,
        }
    }

    pub fn slot_mut(&mut self, slot: Slot) -> &mut Vec<CategoryKey> {
        match slot {
            Slot::Parents => &mut self.parents,
            Slot::Siblings => &mut self.siblings,
            Slot::Auntsuncles => &mut self.auntsuncles,
            Slot::Cousins => &mut self.cousins,
            Slot::Children => &mut self.children,
            Slot::Niecesnephews => &mut self.niecesnephews,
            Slot::Coworkers => &mut self.coworkers,
            Slot::Friends => &mut self.friends,
        }
    }

    pub fn has_downstream(&self) -> bool {
        Slot::DOWNSTREAM.iter().any(|&s| !self.slot(s).is_empty())
    }

    fn entries(&self) -> impl Iterator<Item = (Slot, &CategoryKey)> {
        Slot::ALL
            .into_iter()
            .flat_map(move |s| self.slot(s).iter().map(move |k| (s, k)))
    }
}

/// Transform behaviors a process entry can bind to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Behavior {
    #[serde(rename = "excl")]
    Excl,
    #[serde(rename = "NArw")]
    Narw,
    #[serde(rename = "UPCS")]
    Upcs,
    #[serde(rename = "ord3")]
    Ord3,
    #[serde(rename = "onht")]
    Onht,
    #[serde(rename = "bnry")]
    Bnry,
    #[serde(rename = "1010")]
    Binary1010,
    #[serde(rename = "nmbr")]
    Nmbr,
    #[serde(rename = "mnmx")]
    Mnmx,
    #[serde(rename = "splt")]
    Splt,
    #[serde(rename = "sp15")]
    Sp15,
    #[serde(rename = "spl2")]
    Spl2,
    #[serde(rename = "spl5")]
    Spl5,
    #[serde(rename = "sp19")]
    Sp19,
    #[serde(rename = "sbst")]
    Sbst,
    #[serde(rename = "spl9")]
    Spl9,
    #[serde(rename = "sp10")]
    Sp10,
    #[serde(rename = "srch")]
    Srch,
    #[serde(rename = "nmcm")]
    Nmcm,
    #[serde(rename = "nmc7")]
    Nmc7,
}

impl Behavior {
    pub const ALL: [Behavior; 20] = [
        Behavior::Excl,
        Behavior::Narw,
        Behavior::Upcs,
        Behavior::Ord3,
        Behavior::Onht,
        Behavior::Bnry,
        Behavior::Binary1010,
        Behavior::Nmbr,
        Behavior::Mnmx,
        Behavior::Splt,
        Behavior::Sp15,
        Behavior::Spl2,
        Behavior::Spl5,
        Behavior::Sp19,
        Behavior::Sbst,
        Behavior::Spl9,
        Behavior::Sp10,
        Behavior::Srch,
        Behavior::Nmcm,
        Behavior::Nmc7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Behavior::Excl => "excl",
            Behavior::Narw => "NArw",
            Behavior::Upcs => "UPCS",
            Behavior::Ord3 => "ord3",
            Behavior::Onht => "onht",
            Behavior::Bnry => "bnry",
            Behavior::Binary1010 => "1010",
            Behavior::Nmbr => "nmbr",
            Behavior::Mnmx => "mnmx",
            Behavior::Splt => "splt",
            Behavior::Sp15 => "sp15",
            Behavior::Spl2 => "spl2",
            Behavior::Spl5 => "spl5",
            Behavior::Sp19 => "sp19",
            Behavior::Sbst => "sbst",
            Behavior::Spl9 => "spl9",
            Behavior::Sp10 => "sp10",
            Behavior::Srch => "srch",
            Behavior::Nmcm => "nmcm",
            Behavior::Nmc7 => "nmc7",
        }
    }

    pub fn from_name(name: &str) -> Option<Behavior> {
        Behavior::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn coltype_class(self) -> ColtypeClass {
        match self {
            Behavior::Excl => ColtypeClass::Passthrough,
            Behavior::Narw
            | Behavior::Onht
            | Behavior::Bnry
            | Behavior::Binary1010
            | Behavior::Splt
            | Behavior::Sp15
            | Behavior::Sp19
            | Behavior::Sbst => ColtypeClass::BooleanOutput,
            Behavior::Nmbr | Behavior::Mnmx | Behavior::Nmcm | Behavior::Nmc7 => {
                ColtypeClass::NumericOutput
            }
            Behavior::Upcs
            | Behavior::Ord3
            | Behavior::Spl2
            | Behavior::Spl5
            | Behavior::Spl9
            | Behavior::Sp10
            | Behavior::Srch => ColtypeClass::CategoricOutput,
        }
    }

    /// Whether an inverse exists that recovers the step input from its output.
    pub fn invertible(self) -> bool {
        matches!(
            self,
            Behavior::Ord3
                | Behavior::Onht
                | Behavior::Bnry
                | Behavior::Binary1010
                | Behavior::Mnmx
                | Behavior::Nmbr
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColtypeClass {
    NumericOutput,
    CategoricOutput,
    BooleanOutput,
    Passthrough,
}

/// Binds a category to a transform behavior.
///
/// `suffix` is the token appended to headers; it defaults to the key but may
/// differ when several categories share a behavior and header token while
/// carrying different family trees (`nmc8` logs as `nmc7`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessEntry {
    pub behavior: Behavior,
    pub suffix: String,
    pub default_infill: InfillKind,
    pub coltype_class: ColtypeClass,
}

impl ProcessEntry {
    pub fn new(behavior: Behavior, suffix: impl Into<String>) -> Self {
        Self {
            behavior,
            suffix: suffix.into(),
            default_infill: InfillKind::TransformDefault,
            coltype_class: behavior.coltype_class(),
        }
    }

    pub fn invertible(&self) -> bool {
        self.behavior.invertible()
    }
}

/// Process entry as written in a user override document; everything but the
/// behavior falls back to the behavior's defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessEntrySpec {
    pub behavior: String,
    #[serde(default)]
    pub suffix: Option<String>,
    #[serde(default)]
    pub default_infill: Option<InfillKind>,
    #[serde(default)]
    pub coltype_class: Option<ColtypeClass>,
}

impl ProcessEntrySpec {
    pub fn resolve(&self, key: &CategoryKey) -> Result<ProcessEntry> {
        let behavior = Behavior::from_name(&self.behavior).ok_or_else(|| {
            Error::Config(format!(
                "process entry {key} names unknown behavior {:?}",
                self.behavior
            ))
        })?;
        let mut entry = ProcessEntry::new(behavior, key.as_str());
        if let Some(s) = &self.suffix {
            entry.suffix = s.clone();
        }
        if let Some(k) = self.default_infill {
            entry.default_infill = k;
        }
        if let Some(c) = self.coltype_class {
            entry.coltype_class = c;
        }
        Ok(entry)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub category: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}: {}: {}", self.category, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    trees: BTreeMap<CategoryKey, FamilyTree>,
    entries: BTreeMap<CategoryKey, ProcessEntry>,
    #[serde(default)]
    aliases: BTreeMap<String, CategoryKey>,
}

fn key(s: &str) -> CategoryKey {
    CategoryKey::new(s).expect("built-in keys are valid")
}

fn keys(list: &[&str]) -> Vec<CategoryKey> {
    list.iter().map(|s| key(s)).collect()
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            trees: BTreeMap::new(),
            entries: BTreeMap::new(),
            aliases: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, key: CategoryKey, tree: FamilyTree, entry: ProcessEntry) {
        self.trees.insert(key.clone(), tree);
        self.entries.insert(key, entry);
    }

    /// Maps an alias (such as `text`) to its canonical key; other names pass through.
    pub fn resolve_name(&self, name: &str) -> Result<CategoryKey> {
        if let Some(k) = self.aliases.get(name) {
            return Ok(k.clone());
        }
        let k = CategoryKey::new(name).map_err(|_| Error::UnknownCategory(name.to_string()))?;
        if self.entries.contains_key(&k) {
            Ok(k)
        } else {
            Err(Error::UnknownCategory(name.to_string()))
        }
    }

    pub fn contains(&self, key: &CategoryKey) -> bool {
        self.entries.contains_key(key) || self.aliases.contains_key(key.as_str())
    }

    /// Family tree of a category (aliases resolved).
    pub fn lookup(&self, name: &str) -> Result<&FamilyTree> {
        let k = self.resolve_name(name)?;
        self.trees
            .get(&k)
            .ok_or_else(|| Error::UnknownCategory(name.to_string()))
    }

    pub fn entry(&self, name: &str) -> Result<&ProcessEntry> {
        let k = self.resolve_name(name)?;
        self.entries
            .get(&k)
            .ok_or_else(|| Error::UnknownCategory(name.to_string()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &CategoryKey> {
        self.entries.keys()
    }

    fn canonical(&self, k: &CategoryKey) -> CategoryKey {
        self.aliases.get(k.as_str()).cloned().unwrap_or_else(|| k.clone())
    }

    /// Built-in categories.
    pub fn builtin() -> Self {
        let mut reg = Registry::empty();
        let simple = |own: &str| FamilyTree {
            auntsuncles: keys(&[own]),
            cousins: keys(&["NArw"]),
            ..FamilyTree::default()
        };
        let bare = |own: &str| FamilyTree {
            auntsuncles: keys(&[own]),
            ..FamilyTree::default()
        };
        let with_children = |own: &str, children: &[&str]| FamilyTree {
            parents: keys(&[own]),
            cousins: keys(&["NArw"]),
            children: keys(children),
            ..FamilyTree::default()
        };

        for b in [
            Behavior::Ord3,
            Behavior::Onht,
            Behavior::Bnry,
            Behavior::Binary1010,
            Behavior::Nmbr,
            Behavior::Mnmx,
            Behavior::Splt,
            Behavior::Sp15,
            Behavior::Sp19,
            Behavior::Sbst,
            Behavior::Srch,
        ] {
            reg.insert(key(b.name()), simple(b.name()), ProcessEntry::new(b, b.name()));
        }
        reg.insert(key("excl"), bare("excl"), ProcessEntry::new(Behavior::Excl, ""));
        reg.insert(key("NArw"), bare("NArw"), ProcessEntry::new(Behavior::Narw, "NArw"));

        for (b, children) in [
            (Behavior::Spl2, &["ord3"][..]),
            (Behavior::Spl5, &["ord3"][..]),
            (Behavior::Spl9, &["ord3", "sp10"][..]),
            (Behavior::Sp10, &["ord3"][..]),
            (Behavior::Nmcm, &["nmbr"][..]),
            (Behavior::Nmc7, &["nmbr"][..]),
        ] {
            reg.insert(
                key(b.name()),
                with_children(b.name(), children),
                ProcessEntry::new(b, b.name()),
            );
        }
        reg.insert(
            key("nmc8"),
            with_children("nmc8", &["nmbr"]),
            ProcessEntry::new(Behavior::Nmc7, "nmc7"),
        );

        // UPCS as a root just uppercases; reached as offspring of or19 it
        // spawns the parsed branches.
        reg.insert(
            key("UPCS"),
            FamilyTree {
                auntsuncles: keys(&["UPCS"]),
                children: keys(&["nmc8", "spl9"]),
                friends: keys(&["1010"]),
                ..FamilyTree::default()
            },
            ProcessEntry::new(Behavior::Upcs, "UPCS"),
        );
        reg.insert(
            key("or19"),
            FamilyTree {
                parents: keys(&["UPCS"]),
                cousins: keys(&["NArw"]),
                ..FamilyTree::default()
            },
            ProcessEntry::new(Behavior::Upcs, "or19"),
        );

        // or20: same as or19 with one more spl9 tier ahead of sp10.
        reg.insert(
            key("UPC2"),
            FamilyTree {
                auntsuncles: keys(&["UPC2"]),
                children: keys(&["nmc8", "sp9b"]),
                friends: keys(&["1010"]),
                ..FamilyTree::default()
            },
            ProcessEntry::new(Behavior::Upcs, "UPCS"),
        );
        reg.insert(
            key("sp9b"),
            with_children("sp9b", &["ord3", "spl9"]),
            ProcessEntry::new(Behavior::Spl9, "spl9"),
        );
        reg.insert(
            key("or20"),
            FamilyTree {
                parents: keys(&["UPC2"]),
                cousins: keys(&["NArw"]),
                ..FamilyTree::default()
            },
            ProcessEntry::new(Behavior::Upcs, "or20"),
        );

        reg.aliases.insert("text".into(), key("onht"));
        reg
    }

    /// Applies user family trees and process entries on top of `self`.
    pub fn merge_overrides(
        &self,
        trees: &BTreeMap<String, FamilyTree>,
        entries: &BTreeMap<String, ProcessEntrySpec>,
    ) -> Result<Registry> {
        let mut merged = self.clone();
        for (name, spec) in entries {
            let k = CategoryKey::new(name.as_str())?;
            let k = merged.canonical(&k);
            let entry = spec.resolve(&k)?;
            merged.entries.insert(k.clone(), entry);
            merged.trees.entry(k).or_default();
        }
        for (name, tree) in trees {
            let k = CategoryKey::new(name.as_str())?;
            let k = merged.canonical(&k);
            if !merged.entries.contains_key(&k) {
                return Err(Error::MissingProcessEntry(name.clone()));
            }
            let mut tree = tree.clone();
            for slot in Slot::ALL {
                for entry in tree.slot_mut(slot) {
                    *entry = merged.canonical(entry);
                }
            }
            merged.trees.insert(k, tree);
        }
        for (owner, tree) in &merged.trees {
            for (slot, k) in tree.entries() {
                if !merged.entries.contains_key(k) {
                    return Err(Error::DanglingReference {
                        owner: owner.to_string(),
                        slot: slot.name(),
                        key: k.to_string(),
                    });
                }
            }
        }
        let errors: Vec<String> = merged
            .validate(DEFAULT_MAX_DEPTH)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.to_string())
            .collect();
        if !errors.is_empty() {
            return Err(Error::InvalidRegistry(errors.join("; ")));
        }
        Ok(merged)
    }

    /// Structural checks: dangling references, unbounded offspring
    /// recursion, and offspring-bearing root entries with nothing downstream.
    pub fn validate(&self, max_depth: usize) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (owner, tree) in &self.trees {
            for (slot, k) in tree.entries() {
                if !self.entries.contains_key(k) {
                    out.push(Diagnostic {
                        severity: Severity::Error,
                        category: owner.to_string(),
                        message: format!("{} references unregistered category {k}", slot.name()),
                    });
                }
            }
        }

        let mut depth_memo: BTreeMap<&CategoryKey, Option<usize>> = BTreeMap::new();
        let mut reported = BTreeSet::new();
        for owner in self.trees.keys() {
            let mut stack = Vec::new();
            let depth = self.offspring_depth(owner, &mut depth_memo, &mut stack);
            let exceeded = depth.is_none_or(|d| d > max_depth);
            if exceeded && reported.insert(owner.clone()) {
                let message = match depth {
                    None => format!(
                        "offspring recursion does not terminate within depth {max_depth} (cycle)"
                    ),
                    Some(d) => format!("offspring recursion depth {d} exceeds {max_depth}"),
                };
                out.push(Diagnostic {
                    severity: Severity::Error,
                    category: owner.to_string(),
                    message,
                });
            }
        }

        for (owner, tree) in &self.trees {
            for slot in [Slot::Parents, Slot::Siblings] {
                for k in tree.slot(slot) {
                    if let Some(t) = self.trees.get(k) {
                        if !t.has_downstream() {
                            out.push(Diagnostic {
                                severity: Severity::Warning,
                                category: owner.to_string(),
                                message: format!(
                                    "{} entry {k} bears offspring but has an empty downstream tree",
                                    slot.name()
                                ),
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Longest chain of offspring generations below `k` when reached as an
    /// offspring entry; `None` on a cycle.
    fn offspring_depth<'a>(
        &'a self,
        k: &'a CategoryKey,
        memo: &mut BTreeMap<&'a CategoryKey, Option<usize>>,
        stack: &mut Vec<&'a CategoryKey>,
    ) -> Option<usize> {
        if let Some(d) = memo.get(k) {
            return *d;
        }
        if stack.contains(&k) {
            return None;
        }
        let Some(tree) = self.trees.get(k) else {
            return Some(0);
        };
        stack.push(k);
        let mut best = Some(0usize);
        for slot in [Slot::Children, Slot::Niecesnephews] {
            for child in tree.slot(slot) {
                let d = self.offspring_depth(child, memo, stack);
                best = match (best, d) {
                    (Some(b), Some(d)) => Some(b.max(d + 1)),
                    _ => None,
                };
            }
        }
        stack.pop();
        memo.insert(k, best);
        best
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}

/// Override document with `transformdict` and `processdict` blocks.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryOverrides {
    #[serde(default)]
    pub transformdict: BTreeMap<String, FamilyTree>,
    #[serde(default)]
    pub processdict: BTreeMap<String, ProcessEntrySpec>,
}

impl RegistryOverrides {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&self, base: &Registry) -> Result<Registry> {
        base.merge_overrides(&self.transformdict, &self.processdict)
    }
}
