//! Power-trace and annotation-log ingestion.
//!
//! Power traces follow the per-channel UK-DALE convention: one
//! `unix_timestamp watts` pair per line. Annotation logs are CSV with the
//! header `start_iso8601,end_iso8601,activity`, optionally followed by
//! `observed_atomics,satisfied_contexts,source`.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DefinitionSet, IdSet};
use crate::time::{format_iso8601, parse_iso8601};

#[derive(Debug, Clone, PartialEq)]
pub struct SensorSample {
    pub timestamp: i64,
    pub channel: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySeries {
    pub channel: String,
    pub points: Vec<(i64, bool)>,
}

impl BinarySeries {
    pub fn states(&self) -> Vec<u8> {
        self.points.iter().map(|&(_, s)| s as u8).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    PowerTrace,
    Annotation,
    Synthetic,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::PowerTrace => "power-trace",
            Source::Annotation => "annotation",
            Source::Synthetic => "synthetic",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.trim() {
            "power-trace" => Some(Source::PowerTrace),
            "annotation" => Some(Source::Annotation),
            "synthetic" => Some(Source::Synthetic),
            _ => None,
        }
    }
}

/// One timed instance of a complex activity.
#[derive(Debug, Clone, PartialEq)]
pub struct OccurrenceRecord {
    pub activity: String,
    pub start: i64,
    pub end: i64,
    pub observed_atomics: IdSet,
    pub satisfied_contexts: IdSet,
    pub source: Source,
}

/// Reads a two-column power trace for one channel.
pub fn parse_power_trace<R: BufRead>(reader: R, channel: &str) -> Result<Vec<SensorSample>> {
    let mut samples: Vec<SensorSample> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut cols = trimmed.split_whitespace();
        let (Some(ts), Some(val), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `timestamp watts`, got {trimmed:?}"),
            });
        };
        let timestamp = parse_unix_seconds(ts).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("bad timestamp {ts:?}"),
        })?;
        let value: f64 = val.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("bad reading {val:?}"),
        })?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("reading {value} must be a non-negative wattage"),
            });
        }
        if let Some(prev) = samples.last() {
            if timestamp <= prev.timestamp {
                return Err(Error::NonMonotonic {
                    line: lineno,
                    timestamp,
                    previous: prev.timestamp,
                });
            }
        }
        samples.push(SensorSample {
            timestamp,
            channel: channel.to_string(),
            value,
        });
    }
    Ok(samples)
}

fn parse_unix_seconds(text: &str) -> Option<i64> {
    if let Ok(v) = text.parse::<i64>() {
        return Some(v);
    }
    let v: f64 = text.parse().ok()?;
    v.is_finite().then(|| v.trunc() as i64)
}

/// Thresholds a trace into on/off states and bridges short dropouts.
///
/// A sample is on when its value exceeds `on_watts`. Runs of off samples no
/// longer than `gap_tolerance` that have on samples on both sides are turned on.
pub fn binarize(samples: &[SensorSample], on_watts: f64, gap_tolerance: usize) -> BinarySeries {
    let mut states: Vec<bool> = samples.iter().map(|s| s.value > on_watts).collect();

    let mut i = 0;
    while i < states.len() {
        if states[i] {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < states.len() && !states[i] {
            i += 1;
        }
        let flanked = run_start > 0 && i < states.len();
        if flanked && i - run_start <= gap_tolerance {
            states[run_start..i].iter_mut().for_each(|s| *s = true);
        }
    }

    BinarySeries {
        channel: samples
            .first()
            .map(|s| s.channel.clone())
            .unwrap_or_default(),
        points: samples
            .iter()
            .zip(states)
            .map(|(s, on)| (s.timestamp, on))
            .collect(),
    }
}

/// Turns every maximal run of on states into one occurrence of the mapped
/// activity. A single channel cannot tell sub-actions apart, so every atomic
/// and context id is marked observed.
pub fn segment_occurrences(
    series: &BinarySeries,
    activity_map: &BTreeMap<String, String>,
    defs: &DefinitionSet,
) -> Result<Vec<OccurrenceRecord>> {
    let mapped = activity_map
        .get(&series.channel)
        .ok_or_else(|| Error::UnmappedChannel(series.channel.clone()))?;
    let def = defs
        .resolve(mapped)
        .ok_or_else(|| Error::UnknownActivity(mapped.clone()))?;

    let mut out = Vec::new();
    let mut run: Option<(i64, i64)> = None;
    for &(ts, on) in &series.points {
        run = match (run, on) {
            (None, true) => Some((ts, ts)),
            (Some((start, _)), true) => Some((start, ts)),
            (Some((start, end)), false) => {
                out.push((start, end));
                None
            }
            (None, false) => None,
        };
    }
    out.extend(run);

    Ok(out
        .into_iter()
        .map(|(start, end)| OccurrenceRecord {
            activity: def.name.clone(),
            start,
            end,
            observed_atomics: def.atomic_ids(),
            satisfied_contexts: def.context_ids(),
            source: Source::PowerTrace,
        })
        .collect())
}

const COL_START: &str = "start_iso8601";
const COL_END: &str = "end_iso8601";
const COL_ACTIVITY: &str = "activity";
const COL_OBSERVED: &str = "observed_atomics";
const COL_SATISFIED: &str = "satisfied_contexts";
const COL_SOURCE: &str = "source";

/// Reads an annotation log. Labels may be definition names or aliases; the
/// returned records carry canonical names and are sorted by `(start, activity)`.
pub fn parse_adl_log<R: Read>(reader: R, defs: &DefinitionSet) -> Result<Vec<OccurrenceRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let position = |name: &str| headers.iter().position(|h| h == name);
    let (Some(i_start), Some(i_end), Some(i_act)) = (
        position(COL_START),
        position(COL_END),
        position(COL_ACTIVITY),
    ) else {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must contain {COL_START},{COL_END},{COL_ACTIVITY}"),
        });
    };
    let i_obs = position(COL_OBSERVED);
    let i_sat = position(COL_SATISFIED);
    let i_src = position(COL_SOURCE);

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let timestamp = |i: usize| {
            parse_iso8601(&row[i]).ok_or_else(|| Error::Timestamp {
                line,
                value: row[i].to_string(),
            })
        };
        let start = timestamp(i_start)?;
        let end = timestamp(i_end)?;
        if end < start {
            return Err(Error::EndBeforeStart { line });
        }
        let label = &row[i_act];
        let def = defs
            .resolve(label)
            .ok_or_else(|| Error::UnknownActivity(label.to_string()))?;
        let observed_atomics = match i_obs {
            Some(i) => parse_id_set(&row[i], line)?,
            None => def.atomic_ids(),
        };
        let satisfied_contexts = match i_sat {
            Some(i) => parse_id_set(&row[i], line)?,
            None => def.context_ids(),
        };
        def.check_ids(&observed_atomics, &satisfied_contexts)?;
        let source = match i_src {
            Some(i) => Source::parse(&row[i]).ok_or_else(|| Error::Parse {
                line,
                message: format!("unknown source {:?}", &row[i]),
            })?,
            None => Source::Annotation,
        };
        out.push(OccurrenceRecord {
            activity: def.name.clone(),
            start,
            end,
            observed_atomics,
            satisfied_contexts,
            source,
        });
    }
    sort_occurrences(&mut out);
    Ok(out)
}

/// Writes records in the full annotation-log layout read by [`parse_adl_log`].
pub fn write_occurrences<W: Write>(writer: W, records: &[OccurrenceRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        COL_START,
        COL_END,
        COL_ACTIVITY,
        COL_OBSERVED,
        COL_SATISFIED,
        COL_SOURCE,
    ])?;
    for r in records {
        wtr.write_record([
            format_iso8601(r.start),
            format_iso8601(r.end),
            r.activity.clone(),
            format_id_set(&r.observed_atomics),
            format_id_set(&r.satisfied_contexts),
            r.source.as_str().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Deterministic merge order for records from several sources.
pub fn sort_occurrences(records: &mut [OccurrenceRecord]) {
    records.sort_by(|a, b| (a.start, &a.activity).cmp(&(b.start, &b.activity)));
}

/// Ids are written `1;2;3`; the empty string is the empty set.
pub fn parse_id_set(text: &str, line: usize) -> Result<IdSet> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim_start_matches(|c: char| c.is_ascii_alphabetic())
                .parse::<u32>()
                .map_err(|_| Error::Parse {
                    line,
                    message: format!("bad id {s:?}"),
                })
        })
        .collect()
}

pub fn format_id_set(ids: &IdSet) -> String {
    ids.iter().map(u32::to_string).collect::<Vec<_>>().join(";")
}
