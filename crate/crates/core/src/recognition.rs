//! Weighted-threshold occurrence scoring and boundary detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::OccurrenceRecord;
use crate::model::{ComplexActivityDefinition, IdSet};

/// Default share of the score carried by atomic activities.
pub const DEFAULT_LAMBDA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub activity: String,
    pub observed_atomics: IdSet,
    pub satisfied_contexts: IdSet,
}

impl Observation {
    pub fn empty(activity: impl Into<String>) -> Self {
        Self {
            activity: activity.into(),
            observed_atomics: IdSet::new(),
            satisfied_contexts: IdSet::new(),
        }
    }

    /// Every atomic observed and every context satisfied.
    pub fn full(def: &ComplexActivityDefinition) -> Self {
        Self {
            activity: def.name.clone(),
            observed_atomics: def.atomic_ids(),
            satisfied_contexts: def.context_ids(),
        }
    }
}

impl From<&OccurrenceRecord> for Observation {
    fn from(r: &OccurrenceRecord) -> Self {
        Self {
            activity: r.activity.clone(),
            observed_atomics: r.observed_atomics.clone(),
            satisfied_contexts: r.satisfied_contexts.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceVerdict {
    pub score: f64,
    pub completed: bool,
    pub threshold: f64,
}

/// Scores observations against a definition.
///
/// `lambda` weights the atomic family and `1 - lambda` the context family.
/// Each family contributes its observed weight mass as a fraction of the
/// family total, so a complete observation scores exactly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scorer {
    lambda: f64,
}

impl Default for Scorer {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
        }
    }
}

impl Scorer {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange {
                name: "lambda",
                value: lambda,
            });
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn occurrence_weight(
        &self,
        def: &ComplexActivityDefinition,
        obs: &Observation,
    ) -> Result<f64> {
        def.check_ids(&obs.observed_atomics, &obs.satisfied_contexts)?;
        // Sums run in ascending id order so a superset never sums lower.
        let atomic = family_fraction(
            def.atomics.iter().map(|a| (a.id, a.weight)),
            &obs.observed_atomics,
        );
        let context = family_fraction(
            def.contexts.iter().map(|c| (c.id, c.weight)),
            &obs.satisfied_contexts,
        );
        let score = self.lambda * atomic + (1.0 - self.lambda) * context;
        Ok(score.clamp(0.0, 1.0))
    }

    pub fn detect_occurrence(
        &self,
        def: &ComplexActivityDefinition,
        obs: &Observation,
    ) -> Result<OccurrenceVerdict> {
        let score = self.occurrence_weight(def, obs)?;
        Ok(OccurrenceVerdict {
            score,
            completed: score >= def.threshold,
            threshold: def.threshold,
        })
    }
}

fn family_fraction(weights: impl Iterator<Item = (u32, f64)>, present: &IdSet) -> f64 {
    let mut sorted: Vec<(u32, f64)> = weights.collect();
    sorted.sort_by_key(|&(id, _)| id);
    let mut total = 0.0;
    let mut hit = 0.0;
    for (id, w) in sorted {
        total += w;
        if present.contains(&id) {
            hit += w;
        }
    }
    if total > 0.0 {
        hit / total
    } else {
        0.0
    }
}

/// Scores with the default `lambda = 0.5`.
pub fn occurrence_weight(def: &ComplexActivityDefinition, obs: &Observation) -> Result<f64> {
    Scorer::default().occurrence_weight(def, obs)
}

pub fn detect_occurrence(
    def: &ComplexActivityDefinition,
    obs: &Observation,
) -> Result<OccurrenceVerdict> {
    Scorer::default().detect_occurrence(def, obs)
}

/// Locates an activity instance in a time-ordered stream of atomic events.
///
/// The start is the first event in the start set and the end the last event
/// in the end set. Context events carry no timing and are not considered.
pub fn detect_boundaries(
    def: &ComplexActivityDefinition,
    events: &[(i64, u32)],
) -> Option<(i64, i64)> {
    let start = events
        .iter()
        .find(|(_, id)| def.start_atomics.contains(id))
        .map(|&(t, _)| t)?;
    let end = events
        .iter()
        .rev()
        .find(|(_, id)| def.end_atomics.contains(id))
        .map(|&(t, _)| t)?;
    (start <= end).then_some((start, end))
}
