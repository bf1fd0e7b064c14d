//! Regenerates the bundled sample data under `data/`.
//!
//! `cargo run -p adl-engine --example gen_samples [-- <repo root>]`
//!
//! The ADL log imitates a single resident over 22 days starting Monday
//! 2011-11-28: a weekday and a weekend routine with jittered times, skipped
//! and extra activities, and partially observed occurrences. The power traces
//! imitate one day of 6-second appliance readings.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use adl_core::ingest::format_id_set;
use adl_core::model::{load_definitions, DefinitionSet, IdSet};
use chrono::{DateTime, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20111128;
const DAYS: i64 = 22;

struct Step {
    label: &'static str,
    start: (u32, u32),
    jitter: i64,
    minutes: i64,
    spread: i64,
    /// Chance the step happens at all.
    p: f64,
}

const fn step(
    label: &'static str,
    start: (u32, u32),
    jitter: i64,
    minutes: i64,
    spread: i64,
    p: f64,
) -> Step {
    Step {
        label,
        start,
        jitter,
        minutes,
        spread,
        p,
    }
}

const WEEKDAY: [Step; 8] = [
    step("Sleeping", (1, 40), 30, 480, 40, 1.0),
    step("Showering", (9, 55), 10, 10, 3, 0.95),
    step("Breakfast", (10, 15), 10, 12, 4, 0.95),
    step("Leaving", (10, 50), 15, 140, 30, 0.85),
    step("Lunch", (13, 40), 20, 25, 5, 0.9),
    step("Spare_Time/TV", (14, 30), 20, 150, 30, 0.9),
    step("Snack", (17, 30), 20, 15, 5, 0.85),
    step("Spare_Time/TV", (18, 0), 15, 300, 30, 1.0),
];

const WEEKEND: [Step; 8] = [
    step("Sleeping", (2, 30), 30, 540, 40, 1.0),
    step("Showering", (11, 40), 15, 12, 3, 0.9),
    step("Breakfast", (12, 0), 15, 15, 5, 0.95),
    step("Spare_Time/TV", (12, 40), 20, 120, 20, 0.9),
    step("Lunch", (15, 0), 20, 30, 5, 0.9),
    step("Leaving", (16, 0), 20, 150, 30, 0.8),
    step("Snack", (19, 0), 20, 15, 5, 0.85),
    step("Spare_Time/TV", (19, 30), 20, 240, 30, 1.0),
];

/// Drops ids to imitate sensors that missed part of an activity.
fn observe(rng: &mut ChaCha8Rng, all: &IdSet) -> (IdSet, IdSet) {
    let mut atomics = all.clone();
    let mut contexts = all.clone();
    let r: f64 = rng.gen();
    let ids: Vec<u32> = all.iter().copied().collect();
    if r < 0.65 {
        return (atomics, contexts);
    }
    let drops = if r < 0.9 { 1 } else { 2 };
    for &id in ids.choose_multiple(rng, drops) {
        atomics.remove(&id);
        if rng.gen_bool(0.5) {
            contexts.remove(&id);
        }
    }
    (atomics, contexts)
}

fn write_adl(root: &Path, defs: &DefinitionSet) -> std::io::Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let first = NaiveDate::from_ymd_opt(2011, 11, 28)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let mut out = csv::Writer::from_path(root.join("data/adl_sample.csv"))?;
    out.write_record([
        "start_iso8601",
        "end_iso8601",
        "activity",
        "observed_atomics",
        "satisfied_contexts",
    ])?;
    let fmt = |t: chrono::NaiveDateTime| t.format("%Y-%m-%d %H:%M:%S").to_string();
    let mut rows = 0;
    let mut prev_end = first;
    for day in 0..DAYS {
        let midnight = first + Duration::days(day);
        let routine = if day % 7 < 5 { &WEEKDAY } else { &WEEKEND };
        for (i, s) in routine.iter().enumerate() {
            if !rng.gen_bool(s.p) {
                continue;
            }
            let planned = midnight
                + Duration::minutes(
                    s.start.0 as i64 * 60 + s.start.1 as i64 + rng.gen_range(-s.jitter..=s.jitter),
                )
                + Duration::seconds(rng.gen_range(0..60));
            let start = planned.max(prev_end + Duration::minutes(1));
            let end =
                start + Duration::minutes((s.minutes + rng.gen_range(-s.spread..=s.spread)).max(2));
            let def = defs.resolve(s.label).expect("sample label is defined");
            let (a, c) = observe(&mut rng, &def.atomic_ids());
            out.write_record([
                fmt(start),
                fmt(end),
                s.label.to_string(),
                format_id_set(&a),
                format_id_set(&c),
            ])?;
            rows += 1;
            prev_end = end;
            // an occasional afternoon snack in front of the television
            if s.label == "Spare_Time/TV" && i + 1 < routine.len() && rng.gen_bool(0.1) {
                let start = prev_end + Duration::minutes(rng.gen_range(1..10));
                let end = start + Duration::minutes(rng.gen_range(5..15));
                let full = format_id_set(&defs.resolve("Snack").unwrap().atomic_ids());
                out.write_record([fmt(start), fmt(end), "Snack".into(), full.clone(), full])?;
                rows += 1;
                prev_end = end;
            }
        }
    }
    out.flush()?;
    Ok(rows)
}

/// `(channel, on watts, standby watts, usage windows as (start minute, minutes))`
type Channel = (&'static str, f64, f64, &'static [(u32, u32)]);

const CHANNELS: [Channel; 7] = [
    (
        "microwave",
        1100.0,
        2.0,
        &[
            (7 * 60 + 40, 3),
            (12 * 60 + 30, 4),
            (19 * 60, 5),
            (22 * 60 + 10, 2),
        ],
    ),
    ("toaster", 900.0, 0.0, &[(7 * 60 + 35, 3), (16 * 60, 2)]),
    (
        "television",
        95.0,
        1.0,
        &[(8 * 60, 25), (18 * 60, 120), (21 * 60 + 30, 60)],
    ),
    ("laptop", 45.0, 0.5, &[(9 * 60, 180), (14 * 60, 120)]),
    ("washing_machine", 500.0, 1.5, &[(10 * 60, 95)]),
    (
        "hob",
        1800.0,
        0.0,
        &[(12 * 60 + 10, 20), (18 * 60 + 30, 35)],
    ),
    ("subwoofer", 35.0, 3.0, &[(20 * 60, 90)]),
];

fn write_traces(root: &Path) -> std::io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let dir = root.join("data/ukdale");
    fs::create_dir_all(&dir)?;
    let t0 = DateTime::parse_from_rfc3339("2013-04-12T00:00:00Z")
        .unwrap()
        .timestamp();
    for (name, on, standby, windows) in CHANNELS {
        let mut w = BufWriter::new(File::create(dir.join(format!("{name}.dat")))?);
        for i in 0..(24 * 60 * 10) {
            let minute = i / 10;
            let active = windows
                .iter()
                .any(|&(s, len)| minute >= s && minute < s + len);
            // brief dropouts inside active runs, bridged by the gap tolerance
            let dropout = active && rng.gen_bool(0.02);
            let watts = if active && !dropout {
                on * rng.gen_range(0.9..1.1)
            } else {
                standby * rng.gen_range(0.5..1.5)
            };
            writeln!(w, "{} {:.1}", t0 + 6 * i as i64, watts)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../.."));
    fs::create_dir_all(root.join("data"))?;
    let defs = load_definitions(root.join("definitions/adl.json"))?;
    let rows = write_adl(&root, &defs)?;
    write_traces(&root)?;
    println!("wrote {rows} annotation rows and {} traces", CHANNELS.len());
    Ok(())
}
