//! Train/test splitting, confusion matrices and per-class metrics.
//!
//! Matrices are oriented with predicted labels on rows and true labels on
//! columns. Precision reads along a row, recall down a column.

use std::collections::HashMap;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;
pub const ORIENTATION: &str = "rows=predicted,columns=true";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    #[default]
    Chronological,
    Random,
}

/// `ceil(n * fraction)`, guarded against representation error in `fraction`.
pub fn train_size(n: usize, fraction: f64) -> usize {
    let k = (n as f64 * fraction - 1e-9).ceil().max(0.0) as usize;
    k.min(n)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "train_fraction",
            value: fraction,
        })
    }
}

/// First `ceil(n * fraction)` records train, the rest test. No shuffling.
pub fn split_chronological<T: Clone>(
    records: &[T],
    train_fraction: f64,
) -> Result<(Vec<T>, Vec<T>)> {
    check_fraction(train_fraction)?;
    let k = train_size(records.len(), train_fraction);
    Ok((records[..k].to_vec(), records[k..].to_vec()))
}

/// Seeded random split. Both halves keep their original relative order.
pub fn split_random<T: Clone>(
    records: &[T],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    check_fraction(train_fraction)?;
    let k = train_size(records.len(), train_fraction);
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut train, mut test) = (idx[..k].to_vec(), idx[k..].to_vec());
    train.sort_unstable();
    test.sort_unstable();
    Ok((
        train.into_iter().map(|i| records[i].clone()).collect(),
        test.into_iter().map(|i| records[i].clone()).collect(),
    ))
}

pub fn split<T: Clone>(
    records: &[T],
    train_fraction: f64,
    kind: SplitKind,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    match kind {
        SplitKind::Chronological => split_chronological(records, train_fraction),
        SplitKind::Random => split_random(records, train_fraction, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    /// `counts[predicted][true]`
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    /// Wraps an existing square grid of counts.
    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = labels.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(Error::Parse {
                line: 0,
                message: format!("confusion matrix must be {n}x{n}"),
            });
        }
        Ok(Self { labels, counts })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn get(&self, predicted: &str, actual: &str) -> Result<u64> {
        Ok(self.counts[self.index_of(predicted)?][self.index_of(actual)?])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn column_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    /// Swaps the roles of predicted and true labels.
    pub fn transpose(&self) -> Self {
        let n = self.labels.len();
        Self {
            labels: self.labels.clone(),
            counts: (0..n)
                .map(|i| (0..n).map(|j| self.counts[j][i]).collect())
                .collect(),
        }
    }

    /// CSV grid: the corner cell records the orientation, then one row per
    /// predicted label.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["predicted\\true".to_string()];
        header.extend(self.labels.iter().cloned());
        wtr.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(u64::to_string));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Tallies `(predicted, true)` pairs over a fixed label order.
pub fn build_confusion<P: AsRef<str>, T: AsRef<str>>(
    pairs: &[(P, T)],
    labels: &[String],
) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::zeros(labels.to_vec());
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let lookup = |l: &str| {
        index
            .get(l)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(l.to_string()))
    };
    for (p, t) in pairs {
        let (i, j) = (lookup(p.as_ref())?, lookup(t.as_ref())?);
        cm.counts[i][j] += 1;
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::EmptyMatrix),
        total => Ok(cm.trace() as f64 / total as f64),
    }
}

/// Diagonal over row sum; `None` when nothing was predicted as `label`.
pub fn class_precision(cm: &ConfusionMatrix, label: &str) -> Result<Option<f64>> {
    let i = cm.index_of(label)?;
    let row = cm.row_sum(i);
    Ok((row > 0).then(|| cm.counts[i][i] as f64 / row as f64))
}

/// Diagonal over column sum; `None` when `label` never occurred.
pub fn class_recall(cm: &ConfusionMatrix, label: &str) -> Result<Option<f64>> {
    let j = cm.index_of(label)?;
    let col = cm.column_sum(j);
    Ok((col > 0).then(|| cm.counts[j][j] as f64 / col as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub predicted_total: u64,
    pub true_total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub orientation: String,
    pub accuracy: Option<f64>,
    /// Mean over labels with a defined value.
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub total: u64,
    pub classes: Vec<ClassMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

impl MetricsReport {
    pub fn from_matrix(cm: &ConfusionMatrix) -> Self {
        let classes: Vec<ClassMetrics> = cm
            .labels
            .iter()
            .enumerate()
            .map(|(i, label)| ClassMetrics {
                label: label.clone(),
                precision: class_precision(cm, label).expect("label from matrix"),
                recall: class_recall(cm, label).expect("label from matrix"),
                predicted_total: cm.row_sum(i),
                true_total: cm.column_sum(i),
            })
            .collect();
        Self {
            orientation: ORIENTATION.to_string(),
            accuracy: accuracy(cm).ok(),
            macro_precision: mean_defined(classes.iter().map(|c| c.precision)),
            macro_recall: mean_defined(classes.iter().map(|c| c.recall)),
            total: cm.total(),
            classes,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Renders a fraction as a percentage with two decimals, or `n/a`.
pub fn percent(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.2}%", v * 100.0),
        None => "n/a".to_string(),
    }
}

/// Serializes a report. CSV uses `metric,label,value` rows with percentages
/// to two decimals; JSON mirrors the report fields exactly.
pub fn emit_report(report: &MetricsReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["metric", "label", "value"])?;
            if !report.classes.is_empty() {
                if report.accuracy.is_some() {
                    wtr.write_record(["accuracy", "", &percent(report.accuracy)])?;
                }
                for c in &report.classes {
                    wtr.write_record(["precision", &c.label, &percent(c.precision)])?;
                }
                for c in &report.classes {
                    wtr.write_record(["recall", &c.label, &percent(c.recall)])?;
                }
                if report.macro_precision.is_some() {
                    wtr.write_record(["macro_precision", "", &percent(report.macro_precision)])?;
                }
                if report.macro_recall.is_some() {
                    wtr.write_record(["macro_recall", "", &percent(report.macro_recall)])?;
                }
                for c in &report.classes {
                    wtr.write_record([
                        "predicted_total",
                        &c.label,
                        &c.predicted_total.to_string(),
                    ])?;
                }
                for c in &report.classes {
                    wtr.write_record(["true_total", &c.label, &c.true_total.to_string()])?;
                }
                wtr.write_record(["total", "", &report.total.to_string()])?;
            }
            if let Some(seed) = report.seed {
                wtr.write_record(["seed", "", &seed.to_string()])?;
            }
            let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}
