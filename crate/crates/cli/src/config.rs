//! Run configuration: one JSON document, defaults for every knob, and
//! `key=value` overrides from the command line.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use adl_core::affect::{AffectParams, DEFAULT_BUCKET_WIDTH, DEFAULT_EPSILON, DEFAULT_WINDOW};
use adl_core::evaluation::{SplitKind, DEFAULT_TRAIN_FRACTION};
use adl_core::recognition::DEFAULT_LAMBDA;
use adl_core::recommender::DEFAULT_ALPHA;
use adl_core::temporal::DEFAULT_K;
use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Adl,
    PowerTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub path: PathBuf,
    /// Power traces only. Defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
}

impl Dataset {
    pub fn channel_name(&self) -> String {
        self.channel.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub definitions: Option<PathBuf>,
    pub datasets: Vec<Dataset>,
    pub channel_map: BTreeMap<String, String>,
    pub on_watts: f64,
    pub gap_tolerance: usize,
    pub lambda: f64,
    pub window: usize,
    pub epsilon: f64,
    pub bucket_width: u32,
    pub k: usize,
    pub alpha: f64,
    pub train_fraction: f64,
    pub split: SplitKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// CSV of `emotion,activity,bucket,ux` rows used to fit the UX mapper.
    pub ux_examples: Option<PathBuf>,
    /// Published accuracy to print next to the measured one. Informational only.
    pub reference_accuracy: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            definitions: None,
            datasets: Vec::new(),
            channel_map: BTreeMap::new(),
            on_watts: 10.0,
            gap_tolerance: 2,
            lambda: DEFAULT_LAMBDA,
            window: DEFAULT_WINDOW,
            epsilon: DEFAULT_EPSILON,
            bucket_width: DEFAULT_BUCKET_WIDTH,
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            split: SplitKind::Chronological,
            seed: 0,
            out_dir: PathBuf::from("out"),
            ux_examples: None,
            reference_accuracy: None,
        }
    }
}

fn out_of_range(key: &str, value: impl std::fmt::Display, range: &str) -> anyhow::Error {
    anyhow!("config key `{key}` = {value} is out of range, expected {range}")
}

impl RunConfig {
    pub fn affect_params(&self) -> AffectParams {
        AffectParams {
            window: self.window,
            epsilon: self.epsilon,
        }
    }

    /// Checks every numeric knob; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        if !(self.on_watts.is_finite() && self.on_watts >= 0.0) {
            return Err(out_of_range(
                "on_watts",
                self.on_watts,
                "a finite value >= 0",
            ));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(out_of_range("lambda", self.lambda, "[0, 1]"));
        }
        if self.window == 0 {
            return Err(out_of_range("window", self.window, ">= 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(out_of_range("epsilon", self.epsilon, "a finite value >= 0"));
        }
        if !(1..=1440).contains(&self.bucket_width) {
            return Err(out_of_range(
                "bucket_width",
                self.bucket_width,
                "1..=1440 minutes",
            ));
        }
        if self.k == 0 {
            return Err(out_of_range("k", self.k, ">= 1"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(out_of_range("alpha", self.alpha, "a finite value > 0"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(out_of_range(
                "train_fraction",
                self.train_fraction,
                "(0, 1)",
            ));
        }
        Ok(())
    }

    pub fn definitions_path(&self) -> Result<&Path> {
        self.definitions
            .as_deref()
            .ok_or_else(|| anyhow!("no definitions file configured (set `definitions`)"))
    }
}

fn resolve(base: &Path, value: &mut Value) {
    if let Value::String(s) = value {
        let p = Path::new(s.as_str());
        if p.is_relative() {
            *s = base.join(p).to_string_lossy().into_owned();
        }
    }
}

/// Makes path-valued keys relative to the directory holding the config file.
fn resolve_paths(doc: &mut Value, base: &Path) {
    let Some(map) = doc.as_object_mut() else {
        return;
    };
    for key in ["definitions", "out_dir", "ux_examples"] {
        if let Some(v) = map.get_mut(key) {
            resolve(base, v);
        }
    }
    if let Some(Value::Array(sets)) = map.get_mut("datasets") {
        for set in sets {
            if let Some(p) = set.get_mut("path") {
                resolve(base, p);
            }
        }
    }
}

/// Parses `key=value`. The value is read as JSON when it parses, otherwise as
/// a plain string, so `on_watts=25` and `split=random` both work.
pub fn parse_override(text: &str) -> Result<(String, Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{text}` is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        bail!("override `{text}` has an empty key");
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

fn finish(mut doc: Value, overrides: &[(String, Value)]) -> Result<RunConfig> {
    if doc.is_null() {
        doc = Value::Object(Default::default());
    }
    let map = doc
        .as_object_mut()
        .ok_or_else(|| anyhow!("config must be a JSON object"))?;
    for (k, v) in overrides {
        map.insert(k.clone(), v.clone());
    }
    let cfg: RunConfig = serde_json::from_value(doc).context("invalid config")?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config document. Relative paths inside it resolve against the
/// file's directory. An empty file yields all defaults.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    load_config_with(path, &[])
}

pub fn load_config_with(path: &Path, overrides: &[(String, Value)]) -> Result<RunConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut doc: Value = if text.trim().is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
    };
    let base = path.parent().unwrap_or(Path::new(""));
    resolve_paths(&mut doc, base);
    finish(doc, overrides)
}

/// Defaults plus overrides, for runs without a config file.
pub fn default_config_with(overrides: &[(String, Value)]) -> Result<RunConfig> {
    finish(Value::Null, overrides)
}
