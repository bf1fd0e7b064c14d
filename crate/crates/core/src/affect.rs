//! Per-occurrence emotion inference and the emotion to user-experience mapping.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::OccurrenceRecord;
use crate::model::{most_important_pair, ComplexActivityDefinition, DefinitionSet};
use crate::recognition::{Observation, OccurrenceVerdict};
use crate::time::minute_of_day;

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_BUCKET_WIDTH: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ux {
    Good,
    Bad,
}

impl Emotion {
    pub const ALL: [Emotion; 2] = [Emotion::Positive, Emotion::Negative];

    pub fn as_str(&self) -> &'static str {
        match self {
            Emotion::Positive => "positive",
            Emotion::Negative => "negative",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.trim() {
            "positive" => Some(Emotion::Positive),
            "negative" => Some(Emotion::Negative),
            _ => None,
        }
    }
}

impl Ux {
    pub const ALL: [Ux; 2] = [Ux::Good, Ux::Bad];

    pub fn as_str(&self) -> &'static str {
        match self {
            Ux::Good => "good",
            Ux::Bad => "bad",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.trim() {
            "good" => Some(Ux::Good),
            "bad" => Some(Ux::Bad),
            _ => None,
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Ux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Trailing-window parameters for [`infer_emotion`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffectParams {
    /// Number of most recent prior scores averaged.
    pub window: usize,
    /// Slack below the trailing mean still counted as positive.
    pub epsilon: f64,
}

impl Default for AffectParams {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Infers a binary emotion for the current occurrence of an activity.
///
/// Positive requires all three of:
/// - the current verdict is completed;
/// - the heaviest atomic is observed and its paired context satisfied;
/// - the current score is at least the mean of the last `window` prior
///   scores minus `epsilon` (holds trivially with no history).
pub fn infer_emotion(
    def: &ComplexActivityDefinition,
    history: &[OccurrenceVerdict],
    current: &Observation,
    verdict: &OccurrenceVerdict,
    params: &AffectParams,
) -> Emotion {
    if !verdict.completed {
        return Emotion::Negative;
    }
    let (atomic, context) = most_important_pair(def);
    if !current.observed_atomics.contains(&atomic) || !current.satisfied_contexts.contains(&context)
    {
        return Emotion::Negative;
    }
    let recent = &history[history.len().saturating_sub(params.window)..];
    if !recent.is_empty() {
        let mean = recent.iter().map(|v| v.score).sum::<f64>() / recent.len() as f64;
        if verdict.score < mean - params.epsilon {
            return Emotion::Negative;
        }
    }
    Emotion::Positive
}

pub fn time_bucket(minute_of_day: u32, bucket_width: u32) -> u32 {
    minute_of_day / bucket_width.max(1)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UxKey {
    pub emotion: Emotion,
    pub activity: String,
    pub bucket: u32,
}

/// One supervised example for [`train_ux_mapper`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UxExample {
    pub emotion: Emotion,
    pub activity: String,
    pub bucket: u32,
    pub ux: Ux,
}

/// Majority-vote lookup table from `(emotion, activity, bucket)` to a UX
/// label. Unseen keys fall back to positive -> good, negative -> bad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "UxModelFile", into = "UxModelFile")]
pub struct UxModel {
    pub table: BTreeMap<UxKey, Ux>,
    pub params: AffectParams,
    pub bucket_width: u32,
}

#[derive(Serialize, Deserialize)]
struct UxModelFile {
    window: usize,
    epsilon: f64,
    bucket_width: u32,
    entries: Vec<UxEntry>,
}

#[derive(Serialize, Deserialize)]
struct UxEntry {
    emotion: Emotion,
    activity: String,
    bucket: u32,
    ux: Ux,
}

impl From<UxModelFile> for UxModel {
    fn from(f: UxModelFile) -> Self {
        Self {
            table: f
                .entries
                .into_iter()
                .map(|e| {
                    (
                        UxKey {
                            emotion: e.emotion,
                            activity: e.activity,
                            bucket: e.bucket,
                        },
                        e.ux,
                    )
                })
                .collect(),
            params: AffectParams {
                window: f.window,
                epsilon: f.epsilon,
            },
            bucket_width: f.bucket_width,
        }
    }
}

impl From<UxModel> for UxModelFile {
    fn from(m: UxModel) -> Self {
        Self {
            window: m.params.window,
            epsilon: m.params.epsilon,
            bucket_width: m.bucket_width,
            entries: m
                .table
                .into_iter()
                .map(|(k, ux)| UxEntry {
                    emotion: k.emotion,
                    activity: k.activity,
                    bucket: k.bucket,
                    ux,
                })
                .collect(),
        }
    }
}

impl Default for UxModel {
    fn default() -> Self {
        Self {
            table: BTreeMap::new(),
            params: AffectParams::default(),
            bucket_width: DEFAULT_BUCKET_WIDTH,
        }
    }
}

impl UxModel {
    pub fn untrained(params: AffectParams, bucket_width: u32) -> Self {
        Self {
            table: BTreeMap::new(),
            params,
            bucket_width,
        }
    }

    pub fn is_trained(&self) -> bool {
        !self.table.is_empty()
    }
}

pub fn train_ux_mapper(examples: &[UxExample], params: AffectParams, bucket_width: u32) -> UxModel {
    let mut votes: HashMap<UxKey, (usize, usize)> = HashMap::new();
    for e in examples {
        let key = UxKey {
            emotion: e.emotion,
            activity: e.activity.clone(),
            bucket: e.bucket,
        };
        let tally = votes.entry(key).or_default();
        match e.ux {
            Ux::Good => tally.0 += 1,
            Ux::Bad => tally.1 += 1,
        }
    }
    let table = votes
        .into_iter()
        .map(|(key, (good, bad))| (key, if good >= bad { Ux::Good } else { Ux::Bad }))
        .collect();
    UxModel {
        table,
        params,
        bucket_width,
    }
}

pub fn map_ux(model: &UxModel, emotion: Emotion, activity: &str, bucket: u32) -> Ux {
    let key = UxKey {
        emotion,
        activity: activity.to_string(),
        bucket,
    };
    model.table.get(&key).copied().unwrap_or(match emotion {
        Emotion::Positive => Ux::Good,
        Emotion::Negative => Ux::Bad,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffectAnnotatedOccurrence {
    pub occurrence: OccurrenceRecord,
    pub verdict: OccurrenceVerdict,
    pub emotion: Emotion,
    pub ux: Ux,
}

/// Annotates time-ordered scored occurrences with emotion and UX.
///
/// Each activity keeps its own history of prior verdicts. The UX bucket is
/// taken from the occurrence start time.
pub fn annotate(
    defs: &DefinitionSet,
    scored: &[(OccurrenceRecord, OccurrenceVerdict)],
    model: &UxModel,
) -> Result<Vec<AffectAnnotatedOccurrence>> {
    let mut history: HashMap<&str, Vec<OccurrenceVerdict>> = HashMap::new();
    let mut out = Vec::with_capacity(scored.len());
    for (record, verdict) in scored {
        let def = defs
            .get(&record.activity)
            .ok_or_else(|| Error::UnknownActivity(record.activity.clone()))?;
        let prior = history.entry(def.name.as_str()).or_default();
        let emotion = infer_emotion(
            def,
            prior,
            &Observation::from(record),
            verdict,
            &model.params,
        );
        prior.push(*verdict);
        let bucket = time_bucket(minute_of_day(record.start), model.bucket_width);
        out.push(AffectAnnotatedOccurrence {
            occurrence: record.clone(),
            verdict: *verdict,
            emotion,
            ux: map_ux(model, emotion, &record.activity, bucket),
        });
    }
    Ok(out)
}
