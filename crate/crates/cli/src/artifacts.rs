//! CSV layouts of the intermediate stage outputs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use adl_core::affect::{AffectAnnotatedOccurrence, Emotion, Ux, UxExample};
use adl_core::ingest::{format_id_set, parse_id_set, OccurrenceRecord, Source};
use adl_core::recognition::OccurrenceVerdict;
use adl_core::recommender::{DayKind, FeatureVector, LabeledTransition, NO_PREVIOUS};
use adl_core::time::{format_iso8601, parse_iso8601};
use anyhow::{anyhow, bail, Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub const OCCURRENCES: &str = "occurrences.csv";
pub const VERDICTS: &str = "verdicts.csv";
pub const ANNOTATED: &str = "annotated.csv";
pub const UX_MODEL: &str = "ux_model.json";
pub const CLUSTERS: &str = "clusters.csv";
pub const MODEL: &str = "model.json";
pub const TRAIN_FEATURES: &str = "train_features.csv";
pub const TEST_FEATURES: &str = "test_features.csv";
pub const PREDICTIONS: &str = "predictions.csv";
pub const CONFUSION: &str = "confusion.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const SUMMARY: &str = "summary.json";

#[derive(Debug, Serialize, Deserialize)]
struct OccurrenceRow {
    activity: String,
    start: String,
    end: String,
    score: f64,
    completed: bool,
    threshold: f64,
    observed_atomics: String,
    satisfied_contexts: String,
    source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    emotion: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ux: Option<String>,
}

impl OccurrenceRow {
    fn new(o: &OccurrenceRecord, v: &OccurrenceVerdict) -> Self {
        Self {
            activity: o.activity.clone(),
            start: format_iso8601(o.start),
            end: format_iso8601(o.end),
            score: v.score,
            completed: v.completed,
            threshold: v.threshold,
            observed_atomics: format_id_set(&o.observed_atomics),
            satisfied_contexts: format_id_set(&o.satisfied_contexts),
            source: o.source.as_str().to_string(),
            emotion: None,
            ux: None,
        }
    }

    fn decode(self, line: usize) -> Result<(OccurrenceRecord, OccurrenceVerdict)> {
        let time =
            |s: &str| parse_iso8601(s).ok_or_else(|| anyhow!("line {line}: bad timestamp {s:?}"));
        let record = OccurrenceRecord {
            start: time(&self.start)?,
            end: time(&self.end)?,
            observed_atomics: parse_id_set(&self.observed_atomics, line)?,
            satisfied_contexts: parse_id_set(&self.satisfied_contexts, line)?,
            source: Source::parse(&self.source)
                .ok_or_else(|| anyhow!("line {line}: unknown source {:?}", self.source))?,
            activity: self.activity,
        };
        let verdict = OccurrenceVerdict {
            score: self.score,
            completed: self.completed,
            threshold: self.threshold,
        };
        Ok((record, verdict))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(path)?);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads every row, handing each its 1-based file line for diagnostics.
fn read_rows<T: DeserializeOwned, U>(
    path: &Path,
    mut f: impl FnMut(T, usize) -> Result<U>,
) -> Result<Vec<U>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr.headers()?.clone();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.with_context(|| format!("reading {}", path.display()))?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let value: T = row
            .deserialize(Some(&headers))
            .with_context(|| format!("{}:{line}: malformed row", path.display()))?;
        out.push(f(value, line).with_context(|| format!("in {}", path.display()))?);
    }
    Ok(out)
}

pub fn write_verdicts(path: &Path, scored: &[(OccurrenceRecord, OccurrenceVerdict)]) -> Result<()> {
    write_rows(path, scored.iter().map(|(o, v)| OccurrenceRow::new(o, v)))
}

pub fn read_verdicts(path: &Path) -> Result<Vec<(OccurrenceRecord, OccurrenceVerdict)>> {
    read_rows(path, |row: OccurrenceRow, line| row.decode(line))
}

pub fn write_annotated(path: &Path, annotated: &[AffectAnnotatedOccurrence]) -> Result<()> {
    write_rows(
        path,
        annotated.iter().map(|a| OccurrenceRow {
            emotion: Some(a.emotion.as_str().to_string()),
            ux: Some(a.ux.as_str().to_string()),
            ..OccurrenceRow::new(&a.occurrence, &a.verdict)
        }),
    )
}

pub fn read_annotated(path: &Path) -> Result<Vec<AffectAnnotatedOccurrence>> {
    read_rows(path, |row: OccurrenceRow, line| {
        let emotion = row.emotion.as_deref().and_then(Emotion::parse);
        let ux = row.ux.as_deref().and_then(Ux::parse);
        let (Some(emotion), Some(ux)) = (emotion, ux) else {
            bail!("line {line}: missing or unknown emotion/ux");
        };
        let (occurrence, verdict) = row.decode(line)?;
        Ok(AffectAnnotatedOccurrence {
            occurrence,
            verdict,
            emotion,
            ux,
        })
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureRow {
    time_bucket: u32,
    previous_activity: String,
    emotion: String,
    ux: String,
    day_kind: String,
    activity: String,
}

pub fn write_features(path: &Path, transitions: &[LabeledTransition]) -> Result<()> {
    write_rows(
        path,
        transitions.iter().map(|t| FeatureRow {
            time_bucket: t.features.time_bucket,
            previous_activity: t
                .features
                .previous_activity
                .clone()
                .unwrap_or_else(|| NO_PREVIOUS.to_string()),
            emotion: t.features.emotion.as_str().to_string(),
            ux: t.features.ux.as_str().to_string(),
            day_kind: t.features.day_kind.as_str().to_string(),
            activity: t.next_activity.clone(),
        }),
    )
}

pub fn read_features(path: &Path) -> Result<Vec<LabeledTransition>> {
    read_rows(path, |row: FeatureRow, line| {
        let bad = |what: &str, v: &str| anyhow!("line {line}: unknown {what} {v:?}");
        Ok(LabeledTransition {
            features: FeatureVector {
                time_bucket: row.time_bucket,
                previous_activity: (row.previous_activity != NO_PREVIOUS)
                    .then_some(row.previous_activity),
                emotion: Emotion::parse(&row.emotion)
                    .ok_or_else(|| bad("emotion", &row.emotion))?,
                ux: Ux::parse(&row.ux).ok_or_else(|| bad("ux", &row.ux))?,
                day_kind: DayKind::parse(&row.day_kind)
                    .ok_or_else(|| bad("day_kind", &row.day_kind))?,
            },
            next_activity: row.activity,
        })
    })
}

pub fn read_ux_examples(path: &Path) -> Result<Vec<UxExample>> {
    #[derive(Deserialize)]
    struct Row {
        emotion: String,
        activity: String,
        bucket: u32,
        ux: String,
    }
    read_rows(path, |row: Row, line| {
        Ok(UxExample {
            emotion: Emotion::parse(&row.emotion)
                .ok_or_else(|| anyhow!("line {line}: unknown emotion {:?}", row.emotion))?,
            activity: row.activity,
            bucket: row.bucket,
            ux: Ux::parse(&row.ux)
                .ok_or_else(|| anyhow!("line {line}: unknown ux {:?}", row.ux))?,
        })
    })
}

/// One recommender decision against the true next activity.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub actual: String,
    pub predicted: String,
    pub confidences: BTreeMap<String, f64>,
}

const CONFIDENCE_PREFIX: &str = "confidence(";

/// Layout: `activity,prediction,confidence(<name>)...` with one confidence
/// column per class, in the order of `classes`.
pub fn write_predictions(path: &Path, classes: &[String], rows: &[Prediction]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["activity".to_string(), "prediction".to_string()];
    header.extend(classes.iter().map(|c| format!("{CONFIDENCE_PREFIX}{c})")));
    wtr.write_record(&header)?;
    for p in rows {
        let mut rec = vec![p.actual.clone(), p.predicted.clone()];
        for c in classes {
            let v = p
                .confidences
                .get(c)
                .ok_or_else(|| anyhow!("prediction lacks a confidence for {c:?}"))?;
            rec.push(v.to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Returns the class list from the header and the prediction rows.
pub fn read_predictions(path: &Path) -> Result<(Vec<String>, Vec<Prediction>)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "activity" || &headers[1] != "prediction" {
        bail!(
            "{}: header must start with activity,prediction",
            path.display()
        );
    }
    let classes: Vec<String> = headers
        .iter()
        .skip(2)
        .map(|h| {
            h.strip_prefix(CONFIDENCE_PREFIX)
                .and_then(|s| s.strip_suffix(')'))
                .map(str::to_string)
                .ok_or_else(|| anyhow!("{}: bad confidence column {h:?}", path.display()))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let confidences = classes
            .iter()
            .zip(rec.iter().skip(2))
            .map(|(c, v)| {
                v.parse::<f64>()
                    .map(|x| (c.clone(), x))
                    .map_err(|_| anyhow!("{}:{line}: bad confidence {v:?}", path.display()))
            })
            .collect::<Result<_>>()?;
        rows.push(Prediction {
            actual: rec[0].to_string(),
            predicted: rec[1].to_string(),
            confidences,
        });
    }
    Ok((classes, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
