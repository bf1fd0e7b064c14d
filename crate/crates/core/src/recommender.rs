//! Next-activity recommendation.
//!
//! A categorical naive Bayes model with additive smoothing over five
//! features: time-of-day bucket, the activity just performed, its emotion,
//! its UX label, and whether the day is a weekday or weekend. Every activity
//! in the definition set is a class, seen in training or not.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::affect::{time_bucket, AffectAnnotatedOccurrence, Emotion, Ux};
use crate::error::{Error, Result};
use crate::time::{is_weekend, minute_of_day, MINUTES_PER_DAY};

pub const DEFAULT_ALPHA: f64 = 1.0;

/// Table key for the "no previous activity" value.
pub const NO_PREVIOUS: &str = "<none>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayKind {
    Weekday,
    Weekend,
}

impl DayKind {
    pub const ALL: [DayKind; 2] = [DayKind::Weekday, DayKind::Weekend];

    pub fn of(timestamp: i64) -> Self {
        if is_weekend(timestamp) {
            DayKind::Weekend
        } else {
            DayKind::Weekday
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DayKind::Weekday => "weekday",
            DayKind::Weekend => "weekend",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.trim() {
            "weekday" => Some(DayKind::Weekday),
            "weekend" => Some(DayKind::Weekend),
            _ => None,
        }
    }
}

impl fmt::Display for DayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub time_bucket: u32,
    pub previous_activity: Option<String>,
    pub emotion: Emotion,
    pub ux: Ux,
    pub day_kind: DayKind,
}

impl FeatureVector {
    fn previous_key(&self) -> &str {
        self.previous_activity.as_deref().unwrap_or(NO_PREVIOUS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTransition {
    pub features: FeatureVector,
    pub next_activity: String,
}

/// Number of time-of-day buckets for a bucket width in minutes.
pub fn bucket_count(bucket_width: u32) -> u32 {
    MINUTES_PER_DAY.div_ceil(bucket_width.max(1))
}

/// Pairs each occurrence with the one after it: features come from the
/// earlier occurrence (end-time bucket, activity, emotion, UX), the label is
/// the later occurrence's activity.
pub fn extract_transitions(
    annotated: &[AffectAnnotatedOccurrence],
    bucket_width: u32,
) -> Vec<LabeledTransition> {
    annotated
        .windows(2)
        .map(|pair| {
            let (cur, next) = (&pair[0], &pair[1]);
            LabeledTransition {
                features: FeatureVector {
                    time_bucket: time_bucket(minute_of_day(cur.occurrence.end), bucket_width),
                    previous_activity: Some(cur.occurrence.activity.clone()),
                    emotion: cur.emotion,
                    ux: cur.ux,
                    day_kind: DayKind::of(cur.occurrence.end),
                },
                next_activity: next.occurrence.activity.clone(),
            }
        })
        .collect()
}

/// Smoothed conditional probabilities of each feature value for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTables {
    /// Indexed by bucket.
    pub time_bucket: Vec<f64>,
    pub previous_activity: BTreeMap<String, f64>,
    pub emotion: BTreeMap<Emotion, f64>,
    pub ux: BTreeMap<Ux, f64>,
    pub day_kind: BTreeMap<DayKind, f64>,
    /// Probability of a value outside the feature domain: `alpha / (count + alpha * |domain|)`
    /// for the previous-activity feature. Used for labels the model never heard of.
    pub unseen_previous: f64,
    pub unseen_bucket: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommenderModel {
    /// Class labels, sorted.
    pub activities: Vec<String>,
    pub alpha: f64,
    pub bucket_width: u32,
    pub class_counts: BTreeMap<String, u64>,
    pub priors: BTreeMap<String, f64>,
    pub conditionals: BTreeMap<String, ClassTables>,
}

fn smoothed(count: u64, class_total: u64, alpha: f64, domain: usize) -> f64 {
    (count as f64 + alpha) / (class_total as f64 + alpha * domain as f64)
}

/// Fits class priors and per-feature conditionals from transition counts.
///
/// Priors are `(count + alpha) / (n + alpha * K)` and each conditional is
/// `(count + alpha) / (class count + alpha * |domain|)`.
pub fn train(
    transitions: &[LabeledTransition],
    activities: &[String],
    alpha: f64,
    bucket_width: u32,
) -> Result<RecommenderModel> {
    if transitions.is_empty() || activities.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
        });
    }
    if bucket_width == 0 || bucket_width > MINUTES_PER_DAY {
        return Err(Error::OutOfRange {
            name: "bucket_width",
            value: bucket_width as f64,
        });
    }
    let mut classes: Vec<String> = activities.to_vec();
    classes.sort();
    classes.dedup();
    let index: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let n_buckets = bucket_count(bucket_width) as usize;
    let mut previous_domain: Vec<String> = vec![NO_PREVIOUS.to_string()];
    previous_domain.extend(classes.iter().cloned());

    #[derive(Clone)]
    struct Counts {
        total: u64,
        bucket: Vec<u64>,
        previous: BTreeMap<String, u64>,
        emotion: BTreeMap<Emotion, u64>,
        ux: BTreeMap<Ux, u64>,
        day: BTreeMap<DayKind, u64>,
    }
    let empty = Counts {
        total: 0,
        bucket: vec![0; n_buckets],
        previous: BTreeMap::new(),
        emotion: BTreeMap::new(),
        ux: BTreeMap::new(),
        day: BTreeMap::new(),
    };
    let mut counts = vec![empty; classes.len()];

    for t in transitions {
        let &ci = index
            .get(t.next_activity.as_str())
            .ok_or_else(|| Error::UnknownActivity(t.next_activity.clone()))?;
        let f = &t.features;
        if f.time_bucket as usize >= n_buckets {
            return Err(Error::OutOfRange {
                name: "time_bucket",
                value: f.time_bucket as f64,
            });
        }
        if let Some(prev) = &f.previous_activity {
            if !index.contains_key(prev.as_str()) {
                return Err(Error::UnknownActivity(prev.clone()));
            }
        }
        let c = &mut counts[ci];
        c.total += 1;
        c.bucket[f.time_bucket as usize] += 1;
        *c.previous.entry(f.previous_key().to_string()).or_default() += 1;
        *c.emotion.entry(f.emotion).or_default() += 1;
        *c.ux.entry(f.ux).or_default() += 1;
        *c.day.entry(f.day_kind).or_default() += 1;
    }

    let n = transitions.len() as u64;
    let k = classes.len();
    let mut class_counts = BTreeMap::new();
    let mut priors = BTreeMap::new();
    let mut conditionals = BTreeMap::new();
    for (class, c) in classes.iter().zip(&counts) {
        class_counts.insert(class.clone(), c.total);
        priors.insert(class.clone(), smoothed(c.total, n, alpha, k));
        let tables = ClassTables {
            time_bucket: c
                .bucket
                .iter()
                .map(|&b| smoothed(b, c.total, alpha, n_buckets))
                .collect(),
            previous_activity: previous_domain
                .iter()
                .map(|v| {
                    let cnt = c.previous.get(v).copied().unwrap_or(0);
                    (
                        v.clone(),
                        smoothed(cnt, c.total, alpha, previous_domain.len()),
                    )
                })
                .collect(),
            emotion: Emotion::ALL
                .iter()
                .map(|&e| {
                    (
                        e,
                        smoothed(c.emotion.get(&e).copied().unwrap_or(0), c.total, alpha, 2),
                    )
                })
                .collect(),
            ux: Ux::ALL
                .iter()
                .map(|&u| {
                    (
                        u,
                        smoothed(c.ux.get(&u).copied().unwrap_or(0), c.total, alpha, 2),
                    )
                })
                .collect(),
            day_kind: DayKind::ALL
                .iter()
                .map(|&d| {
                    (
                        d,
                        smoothed(c.day.get(&d).copied().unwrap_or(0), c.total, alpha, 2),
                    )
                })
                .collect(),
            unseen_previous: smoothed(0, c.total, alpha, previous_domain.len()),
            unseen_bucket: smoothed(0, c.total, alpha, n_buckets),
        };
        conditionals.insert(class.clone(), tables);
    }

    Ok(RecommenderModel {
        activities: classes,
        alpha,
        bucket_width,
        class_counts,
        priors,
        conditionals,
    })
}

/// Normalized per-activity likelihoods of the next activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceVector(BTreeMap<String, f64>);

impl ConfidenceVector {
    /// Scales non-negative scores to sum to one. An all-zero input becomes uniform.
    pub fn from_unnormalized(scores: BTreeMap<String, f64>) -> Self {
        let total: f64 = scores.values().sum();
        let n = scores.len() as f64;
        Self(
            scores
                .into_iter()
                .map(|(k, v)| {
                    let p = if total > 0.0 { v / total } else { 1.0 / n };
                    (k, p)
                })
                .collect(),
        )
    }

    pub fn get(&self, activity: &str) -> Option<f64> {
        self.0.get(activity).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.values().sum()
    }
}

impl RecommenderModel {
    fn log_likelihood(&self, class: &str, f: &FeatureVector) -> f64 {
        let t = &self.conditionals[class];
        let bucket = t
            .time_bucket
            .get(f.time_bucket as usize)
            .copied()
            .unwrap_or(t.unseen_bucket);
        let previous = t
            .previous_activity
            .get(f.previous_key())
            .copied()
            .unwrap_or(t.unseen_previous);
        self.priors[class].ln()
            + bucket.ln()
            + previous.ln()
            + t.emotion[&f.emotion].ln()
            + t.ux[&f.ux].ln()
            + t.day_kind[&f.day_kind].ln()
    }
}

/// Posterior over all activities: prior times the product of the feature
/// conditionals, normalized. Computed in log space.
pub fn predict_confidences(model: &RecommenderModel, features: &FeatureVector) -> ConfidenceVector {
    let logs: Vec<(String, f64)> = model
        .activities
        .iter()
        .map(|a| (a.clone(), model.log_likelihood(a, features)))
        .collect();
    let max = logs
        .iter()
        .map(|&(_, l)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    ConfidenceVector::from_unnormalized(
        logs.into_iter()
            .map(|(a, l)| (a, (l - max).exp()))
            .collect(),
    )
}

/// The most confident activity; ties go to the lexicographically first name.
pub fn recommend(confidences: &ConfidenceVector) -> String {
    let mut best: Option<(&str, f64)> = None;
    for (activity, c) in confidences.iter() {
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((activity, c));
        }
    }
    best.map(|(a, _)| a.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{OccurrenceRecord, Source};
    use crate::recognition::OccurrenceVerdict;

    fn fv(bucket: u32, prev: Option<&str>) -> FeatureVector {
        FeatureVector {
            time_bucket: bucket,
            previous_activity: prev.map(str::to_string),
            emotion: Emotion::Positive,
            ux: Ux::Good,
            day_kind: DayKind::Weekday,
        }
    }

    fn tr(bucket: u32, prev: Option<&str>, next: &str) -> LabeledTransition {
        LabeledTransition {
            features: fv(bucket, prev),
            next_activity: next.into(),
        }
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn annotated(activity: &str, start: i64) -> AffectAnnotatedOccurrence {
        AffectAnnotatedOccurrence {
            occurrence: OccurrenceRecord {
                activity: activity.into(),
                start,
                end: start + 1800,
                observed_atomics: Default::default(),
                satisfied_contexts: Default::default(),
                source: Source::Synthetic,
            },
            verdict: OccurrenceVerdict {
                score: 1.0,
                completed: true,
                threshold: 0.7,
            },
            emotion: Emotion::Positive,
            ux: Ux::Good,
        }
    }

    #[test]
    fn transitions_pair_consecutive_occurrences() {
        assert!(extract_transitions(&[], 30).is_empty());
        assert!(extract_transitions(&[annotated("Breakfast", 0)], 30).is_empty());
        let seq = [
            annotated("Breakfast", 8 * 3600),
            annotated("Leaving", 9 * 3600),
            annotated("Lunch", 13 * 3600),
        ];
        let t = extract_transitions(&seq, 30);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].next_activity, "Leaving");
        assert_eq!(t[1].next_activity, "Lunch");
        assert_eq!(
            t[0].features.previous_activity.as_deref(),
            Some("Breakfast")
        );
        // Breakfast ends 08:30 -> bucket 17
        assert_eq!(t[0].features.time_bucket, 17);
        // 1970-01-01 was a Thursday
        assert_eq!(t[0].features.day_kind, DayKind::Weekday);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(matches!(
            train(&[], &names(&["A"]), 1.0, 30),
            Err(Error::EmptyTrainingSet)
        ));
    }

    #[test]
    fn single_label_dominates_on_training_features() {
        let data: Vec<_> = (0..10)
            .map(|i| tr(20 + i % 3, Some("Breakfast"), "Lunch"))
            .collect();
        let classes = names(&["Breakfast", "Leaving", "Lunch"]);
        let m = train(&data, &classes, 1.0, 30).unwrap();
        assert!(m.priors["Lunch"] > 0.8);
        for t in &data {
            assert_eq!(recommend(&predict_confidences(&m, &t.features)), "Lunch");
        }
    }

    #[test]
    fn single_class_model_is_certain() {
        let m = train(&[tr(1, None, "Only")], &names(&["Only"]), 1.0, 30).unwrap();
        let c = predict_confidences(&m, &fv(5, Some("Only")));
        assert_eq!(c.get("Only"), Some(1.0));
    }

    #[test]
    fn symmetric_classes_split_evenly() {
        let data = [tr(3, None, "A"), tr(3, None, "B")];
        let m = train(&data, &names(&["A", "B"]), 1.0, 30).unwrap();
        assert!((m.priors["A"] - m.priors["B"]).abs() < 1e-12);
        let c = predict_confidences(&m, &fv(3, None));
        assert!((c.get("A").unwrap() - 0.5).abs() < 1e-12);
        assert!((c.get("B").unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(recommend(&c), "A");
    }

    #[test]
    fn three_class_hand_counts() {
        // Bucket width 480 -> 3 buckets. Counts: A x3, B x2, C x1.
        let data = [
            tr(0, None, "A"),
            tr(0, Some("B"), "A"),
            tr(1, None, "A"),
            tr(1, Some("A"), "B"),
            tr(2, Some("A"), "B"),
            tr(2, Some("C"), "C"),
        ];
        let m = train(&data, &names(&["A", "B", "C"]), 1.0, 480).unwrap();
        // priors (n_c + 1) / (6 + 3)
        assert!((m.priors["A"] - 4.0 / 9.0).abs() < 1e-15);
        assert!((m.priors["B"] - 3.0 / 9.0).abs() < 1e-15);
        assert!((m.priors["C"] - 2.0 / 9.0).abs() < 1e-15);
        // P(bucket=0 | A) = (2 + 1) / (3 + 3)
        assert!((m.conditionals["A"].time_bucket[0] - 0.5).abs() < 1e-15);
        // P(prev=<none> | A) = (2 + 1) / (3 + 4)
        assert!((m.conditionals["A"].previous_activity[NO_PREVIOUS] - 3.0 / 7.0).abs() < 1e-15);
        // P(prev=A | B) = (2 + 1) / (2 + 4)
        assert!((m.conditionals["B"].previous_activity["A"] - 0.5).abs() < 1e-15);
        // P(emotion=negative | C) = (0 + 1) / (1 + 2)
        assert!((m.conditionals["C"].emotion[&Emotion::Negative] - 1.0 / 3.0).abs() < 1e-15);

        // Posterior for bucket 0, prev none, positive/good/weekday:
        //   A: 4/9 * 3/6 * 3/7 * 4/5 * 4/5 * 4/5
        //   B: 3/9 * 1/5 * 1/6 * 3/4 * 3/4 * 3/4
        //   C: 2/9 * 1/4 * 1/5 * 2/3 * 2/3 * 2/3
        let a = 4.0 / 9.0 * 0.5 * 3.0 / 7.0 * 0.8f64.powi(3);
        let b = 3.0 / 9.0 * 0.2 * 1.0 / 6.0 * 0.75f64.powi(3);
        let c = 2.0 / 9.0 * 0.25 * 0.2 * (2.0f64 / 3.0).powi(3);
        let z = a + b + c;
        let conf = predict_confidences(&m, &fv(0, None));
        assert!((conf.get("A").unwrap() - a / z).abs() < 1e-9);
        assert!((conf.get("B").unwrap() - b / z).abs() < 1e-9);
        assert!((conf.get("C").unwrap() - c / z).abs() < 1e-9);
    }

    #[test]
    fn recommend_examples() {
        let cv = |pairs: &[(&str, f64)]| {
            ConfidenceVector::from_unnormalized(
                pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            )
        };
        assert_eq!(
            recommend(&cv(&[
                ("Breakfast", 0.477),
                ("Leaving", 0.495),
                ("Lunch", 0.028),
                ("Sleeping", 0.0)
            ])),
            "Leaving"
        );
        assert_eq!(
            recommend(&cv(&[("Showering", 1.0), ("Sleeping", 0.0)])),
            "Showering"
        );
        let uniform: Vec<(&str, f64)> = [
            "Snack",
            "Lunch",
            "Breakfast",
            "Sleeping",
            "Leaving",
            "TV",
            "Showering",
        ]
        .iter()
        .map(|&n| (n, 1.0 / 7.0))
        .collect();
        assert_eq!(recommend(&cv(&uniform)), "Breakfast");
    }

    #[test]
    fn unknown_label_rejected() {
        let r = train(&[tr(0, None, "Z")], &names(&["A"]), 1.0, 30);
        assert!(matches!(r, Err(Error::UnknownActivity(_))));
    }

    #[test]
    fn model_json_round_trip() {
        let m = train(
            &[tr(0, None, "A"), tr(1, Some("A"), "B")],
            &names(&["A", "B"]),
            0.5,
            720,
        )
        .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: RecommenderModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
