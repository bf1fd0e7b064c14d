//! Complex activity definitions.
//!
//! A complex activity is a named daily activity decomposed into weighted
//! atomic activities, each paired positionally with a weighted context
//! attribute. Core, start and end sets are carried explicitly as id sets and
//! are never re-derived from the weights.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IdKind, Result};

/// Ordinal ids (`At1..Atn`, `Ct1..Ctn`) as a sorted set.
pub type IdSet = BTreeSet<u32>;

/// Both weight families of a definition must sum to one within this tolerance.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicActivity {
    pub id: u32,
    pub label: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextAttribute {
    pub id: u32,
    pub label: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexActivityDefinition {
    pub name: String,
    pub short_code: String,
    /// Alternative labels accepted by annotation logs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    pub threshold: f64,
    pub atomics: Vec<AtomicActivity>,
    pub contexts: Vec<ContextAttribute>,
    pub core_atomics: IdSet,
    pub core_contexts: IdSet,
    pub start_atomics: IdSet,
    pub start_contexts: IdSet,
    pub end_atomics: IdSet,
    pub end_contexts: IdSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ComplexActivityDefinition {
    pub fn atomic_ids(&self) -> IdSet {
        self.atomics.iter().map(|a| a.id).collect()
    }

    pub fn context_ids(&self) -> IdSet {
        self.contexts.iter().map(|c| c.id).collect()
    }

    pub fn atomic_weight(&self, id: u32) -> Option<f64> {
        self.atomics.iter().find(|a| a.id == id).map(|a| a.weight)
    }

    pub fn context_weight(&self, id: u32) -> Option<f64> {
        self.contexts.iter().find(|c| c.id == id).map(|c| c.weight)
    }

    pub fn has_atomic(&self, id: u32) -> bool {
        self.atomics.iter().any(|a| a.id == id)
    }

    pub fn has_context(&self, id: u32) -> bool {
        self.contexts.iter().any(|c| c.id == id)
    }

    /// Checks that every id in `atomics` and `contexts` exists in this definition.
    pub fn check_ids(&self, atomics: &IdSet, contexts: &IdSet) -> Result<()> {
        if let Some(&id) = atomics.iter().find(|&&id| !self.has_atomic(id)) {
            return Err(Error::InvalidId {
                activity: self.name.clone(),
                kind: IdKind::Atomic,
                id,
            });
        }
        if let Some(&id) = contexts.iter().find(|&&id| !self.has_context(id)) {
            return Err(Error::InvalidId {
                activity: self.name.clone(),
                kind: IdKind::Context,
                id,
            });
        }
        Ok(())
    }
}

/// A single broken invariant found by [`validate_definition`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyName,
    Threshold(f64),
    WeightRange { kind: IdKind, id: u32, weight: f64 },
    WeightSum { kind: IdKind, sum: f64 },
    IdSequence { kind: IdKind },
    Pairing { atomics: usize, contexts: usize },
    DanglingId { set: &'static str, id: u32 },
    EmptyBoundary { set: &'static str },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::EmptyName => "empty-name",
            Violation::Threshold(_) => "threshold-range",
            Violation::WeightRange { .. } => "weight-range",
            Violation::WeightSum { .. } => "weight-sum",
            Violation::IdSequence { .. } => "id-sequence",
            Violation::Pairing { .. } => "pairing",
            Violation::DanglingId { .. } => "dangling-id",
            Violation::EmptyBoundary { .. } => "empty-boundary",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.code())?;
        match self {
            Violation::EmptyName => write!(f, "name is empty"),
            Violation::Threshold(t) => write!(f, "threshold {t} is outside (0, 1]"),
            Violation::WeightRange { kind, id, weight } => {
                write!(f, "{kind} {id} has weight {weight} outside [0, 1]")
            }
            Violation::WeightSum { kind, sum } => write!(f, "{kind} weights sum to {sum}"),
            Violation::IdSequence { kind } => {
                write!(f, "{kind} ids are not unique and contiguous from 1")
            }
            Violation::Pairing { atomics, contexts } => write!(
                f,
                "{atomics} atomic activities but {contexts} context attributes"
            ),
            Violation::DanglingId { set, id } => write!(f, "{set} references missing id {id}"),
            Violation::EmptyBoundary { set } => write!(f, "{set} is empty"),
        }
    }
}

/// Lists every invariant `def` breaks; an empty list means the definition is valid.
pub fn validate_definition(def: &ComplexActivityDefinition) -> Vec<Violation> {
    let mut out = Vec::new();
    if def.name.trim().is_empty() {
        out.push(Violation::EmptyName);
    }
    if !(def.threshold > 0.0 && def.threshold <= 1.0) {
        out.push(Violation::Threshold(def.threshold));
    }

    let families = [
        (
            IdKind::Atomic,
            def.atomics
                .iter()
                .map(|a| (a.id, a.weight))
                .collect::<Vec<_>>(),
        ),
        (
            IdKind::Context,
            def.contexts.iter().map(|c| (c.id, c.weight)).collect(),
        ),
    ];
    for (kind, entries) in &families {
        for &(id, weight) in entries {
            if !(0.0..=1.0).contains(&weight) {
                out.push(Violation::WeightRange {
                    kind: *kind,
                    id,
                    weight,
                });
            }
        }
        let sum: f64 = entries.iter().map(|&(_, w)| w).sum();
        if sum.is_nan() || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            out.push(Violation::WeightSum { kind: *kind, sum });
        }
        let mut ids: Vec<u32> = entries.iter().map(|&(id, _)| id).collect();
        ids.sort_unstable();
        if ids.iter().enumerate().any(|(i, &id)| id as usize != i + 1) {
            out.push(Violation::IdSequence { kind: *kind });
        }
    }

    if def.atomics.len() != def.contexts.len() {
        out.push(Violation::Pairing {
            atomics: def.atomics.len(),
            contexts: def.contexts.len(),
        });
    }

    let atomic_sets = [
        ("core_atomics", &def.core_atomics),
        ("start_atomics", &def.start_atomics),
        ("end_atomics", &def.end_atomics),
    ];
    for (set, ids) in atomic_sets {
        for &id in ids.iter().filter(|&&id| !def.has_atomic(id)) {
            out.push(Violation::DanglingId { set, id });
        }
    }
    let context_sets = [
        ("core_contexts", &def.core_contexts),
        ("start_contexts", &def.start_contexts),
        ("end_contexts", &def.end_contexts),
    ];
    for (set, ids) in context_sets {
        for &id in ids.iter().filter(|&&id| !def.has_context(id)) {
            out.push(Violation::DanglingId { set, id });
        }
    }

    if def.start_atomics.is_empty() {
        out.push(Violation::EmptyBoundary {
            set: "start_atomics",
        });
    }
    if def.end_atomics.is_empty() {
        out.push(Violation::EmptyBoundary { set: "end_atomics" });
    }
    out
}

/// The heaviest atomic activity and its paired context attribute.
///
/// Ties resolve to the lowest id. Pairing is positional, so the context id
/// equals the atomic id.
pub fn most_important_pair(def: &ComplexActivityDefinition) -> (u32, u32) {
    let mut best: Option<&AtomicActivity> = None;
    for a in &def.atomics {
        best = match best {
            Some(b) if b.weight > a.weight || (b.weight == a.weight && b.id < a.id) => Some(b),
            _ => Some(a),
        };
    }
    let id = best.map(|a| a.id).unwrap_or(1);
    (id, id)
}

#[derive(Serialize, Deserialize)]
struct DefinitionFile {
    definitions: Vec<ComplexActivityDefinition>,
}

/// A validated, immutable collection of definitions keyed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct DefinitionSet {
    definitions: BTreeMap<String, ComplexActivityDefinition>,
    aliases: BTreeMap<String, String>,
}

impl DefinitionSet {
    pub fn new(definitions: Vec<ComplexActivityDefinition>) -> Result<Self> {
        if definitions.is_empty() {
            return Err(Error::EmptyDefinitionSet);
        }
        let mut map = BTreeMap::new();
        for def in definitions {
            let violations = validate_definition(&def);
            if !violations.is_empty() {
                return Err(Error::Validation {
                    name: def.name,
                    violations,
                });
            }
            if map.contains_key(&def.name) {
                return Err(Error::DuplicateName(def.name));
            }
            map.insert(def.name.clone(), def);
        }
        let mut aliases = BTreeMap::new();
        for def in map.values() {
            for alias in &def.aliases {
                if map.contains_key(alias) && alias != &def.name {
                    return Err(Error::DuplicateName(alias.clone()));
                }
                if aliases.insert(alias.clone(), def.name.clone()).is_some() {
                    return Err(Error::DuplicateName(alias.clone()));
                }
            }
        }
        Ok(Self {
            definitions: map,
            aliases,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::new(parse_definition_file(text)?)
    }

    pub fn to_json_string(&self) -> String {
        let file = DefinitionFile {
            definitions: self.definitions.values().cloned().collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("definitions serialize");
        s.push('\n');
        s
    }

    pub fn get(&self, name: &str) -> Option<&ComplexActivityDefinition> {
        self.definitions.get(name)
    }

    /// Looks up a definition by name or alias.
    pub fn resolve(&self, label: &str) -> Option<&ComplexActivityDefinition> {
        self.definitions.get(label).or_else(|| {
            self.aliases
                .get(label)
                .and_then(|name| self.definitions.get(name))
        })
    }

    pub fn require(&self, name: &str) -> Result<&ComplexActivityDefinition> {
        self.get(name)
            .ok_or_else(|| Error::UnknownActivity(name.to_string()))
    }

    /// Activity names in sorted order.
    pub fn names(&self) -> Vec<String> {
        self.definitions.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexActivityDefinition> {
        self.definitions.values()
    }

    pub fn len(&self) -> usize {
        self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }
}

/// Parses a definition file without validating it.
pub fn parse_definition_file(text: &str) -> Result<Vec<ComplexActivityDefinition>> {
    let file: DefinitionFile = serde_json::from_str(text)?;
    Ok(file.definitions)
}

/// Reads and validates a definition file.
pub fn load_definitions(path: impl AsRef<Path>) -> Result<DefinitionSet> {
    let text = std::fs::read_to_string(path)?;
    DefinitionSet::from_json_str(&text)
}
