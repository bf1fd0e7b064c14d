//! Time-of-day KNN labeling and per-activity start-time groupings.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::OccurrenceRecord;
use crate::time::{day_number, minute_of_day, MINUTES_PER_DAY};

pub const DEFAULT_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeInstant {
    pub day_index: u32,
    pub minute_of_day: u32,
}

impl TimeInstant {
    pub fn new(day_index: u32, minute_of_day: u32) -> Self {
        debug_assert!(minute_of_day < MINUTES_PER_DAY);
        Self {
            day_index,
            minute_of_day: minute_of_day % MINUTES_PER_DAY,
        }
    }

    pub fn at_minute(minute_of_day: u32) -> Self {
        Self::new(0, minute_of_day)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstant {
    pub instant: TimeInstant,
    pub activity: String,
}

/// Minutes between two times of day around the 24-hour clock; at most 720.
pub fn circular_distance(a: TimeInstant, b: TimeInstant) -> u32 {
    let delta = a.minute_of_day.abs_diff(b.minute_of_day) % MINUTES_PER_DAY;
    delta.min(MINUTES_PER_DAY - delta)
}

/// Majority activity among the `k` training instants closest in time of day.
///
/// Distance ties prefer the earlier minute of day, then the lexicographically
/// smaller activity; vote ties go to the lexicographically smaller activity.
pub fn knn_label(train: &[LabeledInstant], query: TimeInstant, k: usize) -> Result<String> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if k == 0 || k > train.len() {
        return Err(Error::KOutOfRange {
            k,
            available: train.len(),
        });
    }
    let mut ranked: Vec<(u32, u32, &str)> = train
        .iter()
        .map(|t| {
            (
                circular_distance(t.instant, query),
                t.instant.minute_of_day,
                t.activity.as_str(),
            )
        })
        .collect();
    ranked.sort_unstable();

    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for &(_, _, activity) in &ranked[..k] {
        *votes.entry(activity).or_default() += 1;
    }
    // BTreeMap iterates in name order, so the first maximum wins ties.
    let mut best: Option<(&str, usize)> = None;
    for (activity, count) in votes {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((activity, count));
        }
    }
    Ok(best.map(|(a, _)| a.to_string()).unwrap_or_default())
}

/// Start-time instants grouped by activity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterReport {
    pub groups: BTreeMap<String, Vec<TimeInstant>>,
}

impl ClusterReport {
    pub fn len(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Flattens the report into KNN training data.
    pub fn labeled(&self) -> Vec<LabeledInstant> {
        self.groups
            .iter()
            .flat_map(|(activity, instants)| {
                instants.iter().map(move |&instant| LabeledInstant {
                    instant,
                    activity: activity.clone(),
                })
            })
            .collect()
    }

    /// Writes `activity,day_index,minute_of_day` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["activity", "day_index", "minute_of_day"])?;
        for (activity, instants) in &self.groups {
            for i in instants {
                wtr.write_record([
                    activity.clone(),
                    i.day_index.to_string(),
                    i.minute_of_day.to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Groups occurrence start times by activity. Day indices count from the
/// earliest start day in the input.
pub fn cluster_report(occurrences: &[OccurrenceRecord]) -> ClusterReport {
    let Some(first_day) = occurrences.iter().map(|o| day_number(o.start)).min() else {
        return ClusterReport::default();
    };
    let mut groups: BTreeMap<String, Vec<TimeInstant>> = BTreeMap::new();
    for o in occurrences {
        groups
            .entry(o.activity.clone())
            .or_default()
            .push(TimeInstant::new(
                (day_number(o.start) - first_day) as u32,
                minute_of_day(o.start),
            ));
    }
    for instants in groups.values_mut() {
        instants.sort_unstable();
    }
    ClusterReport { groups }
}
