//! The pipeline stages. Each stage takes its inputs in memory, writes its
//! artifacts under the configured output directory and returns its result so
//! `pipeline` can chain stages without re-reading files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use adl_core::affect::{annotate, train_ux_mapper, AffectAnnotatedOccurrence, Emotion, UxModel};
use adl_core::evaluation::{
    build_confusion, emit_report, split, MetricsReport, ReportFormat, SplitKind,
};
use adl_core::ingest::{
    binarize, parse_adl_log, parse_power_trace, segment_occurrences, sort_occurrences,
    write_occurrences, OccurrenceRecord,
};
use adl_core::model::{parse_definition_file, validate_definition, DefinitionSet};
use adl_core::recognition::{Observation, OccurrenceVerdict, Scorer};
use adl_core::recommender::{
    extract_transitions, predict_confidences, recommend, train, LabeledTransition, RecommenderModel,
};
use adl_core::temporal::{cluster_report, knn_label, ClusterReport, TimeInstant};
use adl_core::time::parse_minute;
use anyhow::{anyhow, Context, Result};
use log::info;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self as art, Prediction};
use crate::config::{DatasetKind, RunConfig};

pub fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))
}

pub fn load_definitions(cfg: &RunConfig) -> Result<DefinitionSet> {
    let path = cfg.definitions_path()?;
    adl_core::load_definitions(path)
        .with_context(|| format!("loading definitions {}", path.display()))
}

/// Outcome of checking a definition file: one line per failed check.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub passed: usize,
    pub total: usize,
    pub failures: Vec<String>,
}

impl ValidationSummary {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

/// Two checks per definition: structural invariants, and that a full
/// observation reaches the threshold. Duplicate names count as a failure of
/// the later definition's structural check.
pub fn validate_file(path: &Path) -> Result<ValidationSummary> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let defs =
        parse_definition_file(&text).with_context(|| format!("parsing {}", path.display()))?;
    let scorer = Scorer::default();
    let mut seen = std::collections::BTreeSet::new();
    let mut summary = ValidationSummary {
        passed: 0,
        total: 0,
        failures: Vec::new(),
    };
    for def in &defs {
        let mut problems: Vec<String> = validate_definition(def)
            .iter()
            .map(|v| v.to_string())
            .collect();
        if !seen.insert(def.name.clone()) {
            problems.push(format!("duplicate name {:?}", def.name));
        }
        summary.total += 1;
        if problems.is_empty() {
            summary.passed += 1;
        } else {
            summary
                .failures
                .push(format!("{}: {}", def.name, problems.join("; ")));
        }

        summary.total += 1;
        match scorer.detect_occurrence(def, &Observation::full(def)) {
            Ok(v) if v.completed => summary.passed += 1,
            Ok(v) => summary.failures.push(format!(
                "{}: full observation scores {} below threshold {}",
                def.name, v.score, v.threshold
            )),
            Err(e) => summary.failures.push(format!("{}: {e}", def.name)),
        }
    }
    Ok(summary)
}

/// Reads every configured dataset into one chronologically sorted list.
pub fn ingest(cfg: &RunConfig, defs: &DefinitionSet) -> Result<Vec<OccurrenceRecord>> {
    if cfg.datasets.is_empty() {
        return Err(anyhow!("no datasets configured (set `datasets`)"));
    }
    let mut all = Vec::new();
    for ds in &cfg.datasets {
        let file =
            File::open(&ds.path).with_context(|| format!("opening {}", ds.path.display()))?;
        let records = match ds.kind {
            DatasetKind::Adl => parse_adl_log(file, defs),
            DatasetKind::PowerTrace => {
                let channel = ds.channel_name();
                parse_power_trace(BufReader::new(file), &channel).and_then(|samples| {
                    let series = binarize(&samples, cfg.on_watts, cfg.gap_tolerance);
                    segment_occurrences(&series, &cfg.channel_map, defs)
                })
            }
        }
        .with_context(|| format!("ingesting {}", ds.path.display()))?;
        info!("{}: {} occurrences", ds.path.display(), records.len());
        all.extend(records);
    }
    sort_occurrences(&mut all);
    ensure_out_dir(cfg)?;
    let path = out_path(cfg, art::OCCURRENCES);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_occurrences(file, &all)?;
    Ok(all)
}

pub fn read_occurrences(cfg: &RunConfig, defs: &DefinitionSet) -> Result<Vec<OccurrenceRecord>> {
    let path = out_path(cfg, art::OCCURRENCES);
    let file = File::open(&path)
        .with_context(|| format!("opening {} (run `ingest` first)", path.display()))?;
    parse_adl_log(file, defs).with_context(|| format!("reading {}", path.display()))
}

pub fn recognize(
    cfg: &RunConfig,
    defs: &DefinitionSet,
    occurrences: &[OccurrenceRecord],
) -> Result<Vec<(OccurrenceRecord, OccurrenceVerdict)>> {
    let scorer = Scorer::new(cfg.lambda)?;
    let scored = occurrences
        .iter()
        .map(|o| {
            let def = defs.require(&o.activity)?;
            Ok((
                o.clone(),
                scorer.detect_occurrence(def, &Observation::from(o))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let completed = scored.iter().filter(|(_, v)| v.completed).count();
    info!(
        "recognized {completed} of {} occurrences as completed",
        scored.len()
    );
    ensure_out_dir(cfg)?;
    art::write_verdicts(&out_path(cfg, art::VERDICTS), &scored)?;
    Ok(scored)
}

pub fn affect(
    cfg: &RunConfig,
    defs: &DefinitionSet,
    scored: &[(OccurrenceRecord, OccurrenceVerdict)],
) -> Result<Vec<AffectAnnotatedOccurrence>> {
    let model = match &cfg.ux_examples {
        Some(path) => train_ux_mapper(
            &art::read_ux_examples(path)?,
            cfg.affect_params(),
            cfg.bucket_width,
        ),
        None => UxModel::untrained(cfg.affect_params(), cfg.bucket_width),
    };
    let annotated = annotate(defs, scored, &model)?;
    let positive = annotated
        .iter()
        .filter(|a| a.emotion == Emotion::Positive)
        .count();
    info!("{positive} of {} occurrences positive", annotated.len());
    ensure_out_dir(cfg)?;
    art::write_json(&out_path(cfg, art::UX_MODEL), &model)?;
    art::write_annotated(&out_path(cfg, art::ANNOTATED), &annotated)?;
    Ok(annotated)
}

pub fn cluster(cfg: &RunConfig, annotated: &[AffectAnnotatedOccurrence]) -> Result<ClusterReport> {
    let occurrences: Vec<OccurrenceRecord> =
        annotated.iter().map(|a| a.occurrence.clone()).collect();
    let report = cluster_report(&occurrences);
    ensure_out_dir(cfg)?;
    let path = out_path(cfg, art::CLUSTERS);
    report
        .write_csv(File::create(&path).with_context(|| format!("creating {}", path.display()))?)?;
    Ok(report)
}

/// Labels an `HH:MM` time of day by its nearest clustered neighbours.
pub fn query_cluster(cfg: &RunConfig, report: &ClusterReport, hhmm: &str) -> Result<String> {
    let minute = parse_minute(hhmm).ok_or_else(|| anyhow!("query {hhmm:?} is not HH:MM"))?;
    Ok(knn_label(
        &report.labeled(),
        TimeInstant::at_minute(minute),
        cfg.k,
    )?)
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: RecommenderModel,
    pub train: Vec<LabeledTransition>,
    pub test: Vec<LabeledTransition>,
}

pub fn train_stage(
    cfg: &RunConfig,
    defs: &DefinitionSet,
    annotated: &[AffectAnnotatedOccurrence],
) -> Result<Trained> {
    let transitions = extract_transitions(annotated, cfg.bucket_width);
    let (train_set, test_set) = split(&transitions, cfg.train_fraction, cfg.split, cfg.seed)?;
    let model = train(&train_set, &defs.names(), cfg.alpha, cfg.bucket_width)?;
    info!(
        "trained on {} transitions, {} held out",
        train_set.len(),
        test_set.len()
    );
    ensure_out_dir(cfg)?;
    art::write_json(&out_path(cfg, art::MODEL), &model)?;
    art::write_features(&out_path(cfg, art::TRAIN_FEATURES), &train_set)?;
    art::write_features(&out_path(cfg, art::TEST_FEATURES), &test_set)?;
    Ok(Trained {
        model,
        train: train_set,
        test: test_set,
    })
}

pub fn predict(model: &RecommenderModel, transitions: &[LabeledTransition]) -> Vec<Prediction> {
    transitions
        .iter()
        .map(|t| {
            let cv = predict_confidences(model, &t.features);
            Prediction {
                actual: t.next_activity.clone(),
                predicted: recommend(&cv),
                confidences: cv.iter().map(|(a, p)| (a.to_string(), p)).collect(),
            }
        })
        .collect()
}

pub fn recommend_stage(
    cfg: &RunConfig,
    model: &RecommenderModel,
    transitions: &[LabeledTransition],
) -> Result<Vec<Prediction>> {
    let preds = predict(model, transitions);
    ensure_out_dir(cfg)?;
    art::write_predictions(&out_path(cfg, art::PREDICTIONS), &model.activities, &preds)?;
    Ok(preds)
}

pub fn evaluate(
    cfg: &RunConfig,
    classes: &[String],
    preds: &[Prediction],
) -> Result<MetricsReport> {
    let pairs: Vec<(&str, &str)> = preds
        .iter()
        .map(|p| (p.predicted.as_str(), p.actual.as_str()))
        .collect();
    let cm = build_confusion(&pairs, classes)?;
    let report = MetricsReport::from_matrix(&cm).with_seed(cfg.seed);
    ensure_out_dir(cfg)?;
    let path = out_path(cfg, art::CONFUSION);
    cm.write_csv(File::create(&path).with_context(|| format!("creating {}", path.display()))?)?;
    fs::write(
        out_path(cfg, art::METRICS_CSV),
        emit_report(&report, ReportFormat::Csv)?,
    )?;
    fs::write(
        out_path(cfg, art::METRICS_JSON),
        emit_report(&report, ReportFormat::Json)?,
    )?;
    Ok(report)
}

/// Accuracy of always answering `label` on the test labels.
fn constant_accuracy(test: &[LabeledTransition], label: &str) -> Option<f64> {
    (!test.is_empty()).then(|| {
        test.iter().filter(|t| t.next_activity == label).count() as f64 / test.len() as f64
    })
}

/// Most frequent label; ties go to the lexicographically first.
fn majority<'a>(labels: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let top = *counts.values().max()?;
    counts.into_iter().find(|&(_, c)| c == top).map(|(l, _)| l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub occurrences: usize,
    pub completed: usize,
    pub positive: usize,
    pub transitions: usize,
    pub train: usize,
    pub test: usize,
    pub split: SplitKind,
    pub seed: u64,
    pub accuracy: Option<f64>,
    /// Majority label of the training half, answered for every test case.
    pub majority_baseline: Option<f64>,
    /// Best single label in hindsight on the test half.
    pub best_constant_baseline: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_accuracy: Option<f64>,
}

impl Summary {
    /// The stronger of the two constant predictors.
    pub fn baseline(&self) -> Option<f64> {
        match (self.majority_baseline, self.best_constant_baseline) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }
}

/// ingest -> recognize -> affect -> cluster -> train -> recommend -> evaluate.
pub fn pipeline(cfg: &RunConfig) -> Result<Summary> {
    let defs = load_definitions(cfg)?;
    let occurrences = ingest(cfg, &defs)?;
    let scored = recognize(cfg, &defs, &occurrences)?;
    let annotated = affect(cfg, &defs, &scored)?;
    cluster(cfg, &annotated)?;
    let trained = train_stage(cfg, &defs, &annotated)?;
    let preds = recommend_stage(cfg, &trained.model, &trained.test)?;
    let report = evaluate(cfg, &trained.model.activities, &preds)?;

    let train_majority = majority(trained.train.iter().map(|t| t.next_activity.as_str()));
    let best_constant = trained
        .model
        .activities
        .iter()
        .filter_map(|a| constant_accuracy(&trained.test, a))
        .fold(None, |best: Option<f64>, acc| {
            Some(best.map_or(acc, |b| b.max(acc)))
        });
    let summary = Summary {
        occurrences: occurrences.len(),
        completed: scored.iter().filter(|(_, v)| v.completed).count(),
        positive: annotated
            .iter()
            .filter(|a| a.emotion == Emotion::Positive)
            .count(),
        transitions: trained.train.len() + trained.test.len(),
        train: trained.train.len(),
        test: trained.test.len(),
        split: cfg.split,
        seed: cfg.seed,
        accuracy: report.accuracy,
        majority_baseline: train_majority.and_then(|l| constant_accuracy(&trained.test, l)),
        best_constant_baseline: best_constant,
        reference_accuracy: cfg.reference_accuracy,
    };
    art::write_json(&out_path(cfg, art::SUMMARY), &summary)?;
    Ok(summary)
}
