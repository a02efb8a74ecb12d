//! End-to-end runs: split, train the zoo, score, correlate.
//!
//! Configs are flat `key = value` text. Blank lines and `#` comments are
//! ignored.
//!
//! ```text
//! master_seed = 42
//! test_fraction = 0.2
//! methods = P1,P2,P3,P4,C1,C2
//! # optional subset of the zoo; omit for all 24 models
//! models = ols,ridge_a1,tree_d6
//!
//! dataset.syn.source = synthetic
//! dataset.syn.n = 3000
//! dataset.syn.dependence = 1
//! dataset.syn.noise_sd = 1
//! dataset.syn.seed = 7
//!
//! dataset.ins.source = insurance          # also law_school, crime
//! dataset.ins.path = data/insurance.csv   # relative to the config file
//! dataset.ins.external.xgb = preds/xgb_insurance.csv
//!
//! dataset.own.source = csv
//! dataset.own.path = data/own.csv
//! dataset.own.target = y
//! dataset.own.protected = group
//! dataset.own.features = x1,x2,x3
//! ```
//!
//! Datasets are processed in the order of their first key. External
//! prediction files index rows of the full prepared dataset and are scored on
//! the test rows only.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::consistency::{
    correlation_matrix, discordant_pairs, CorrelationEntry, CorrelationKind, CorrelationMatrix,
    DiscordantPair, ScoreTable,
};
use crate::datasets::{
    schema_from_map, split_indices, synthetic_from_map, Dataset, DatasetSource, SplitSpec, Task,
};
use crate::metrics::{compute, Diagnostics, Method, MetricFamily, DENSITY_RATIO_CLASSIFIER};
use crate::seed::derive_seed;
use crate::zoo::{
    ingest_predictions, predict, train, zoo_configs, ModelConfig, PredictionSet,
    DEFAULT_MASTER_SEED,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetConfig {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
    /// External model id to prediction file.
    pub external: BTreeMap<String, PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetConfig>,
    pub master_seed: u64,
    pub split: SplitSpec,
    pub methods: Vec<Method>,
    /// Zoo subset; `None` runs the whole catalog.
    pub models: Option<Vec<String>>,
}

const DATASET_KEYS: &[(&str, &[&str])] = &[
    ("synthetic", &["n", "dependence", "noise_sd", "seed"]),
    ("csv", &["path", "target", "protected", "features"]),
    ("law_school", &["path"]),
    ("crime", &["path"]),
    ("insurance", &["path"]),
];

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut top: BTreeMap<String, String> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        let mut per_dataset: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim().to_string());
            let dup = || Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1));
            if let Some(rest) = key.strip_prefix("dataset.") {
                let (name, sub) = rest.split_once('.').ok_or_else(|| {
                    Error::Config(format!(
                        "line {}: expected dataset.<name>.<key>",
                        lineno + 1
                    ))
                })?;
                if name.is_empty() || sub.is_empty() {
                    return Err(Error::Config(format!(
                        "line {}: empty dataset name or key",
                        lineno + 1
                    )));
                }
                if !per_dataset.contains_key(name) {
                    order.push(name.to_string());
                }
                if per_dataset
                    .entry(name.to_string())
                    .or_default()
                    .insert(sub.to_string(), value)
                    .is_some()
                {
                    return Err(dup());
                }
            } else if top.insert(key.to_string(), value).is_some() {
                return Err(dup());
            }
        }
        for key in top.keys() {
            if !["master_seed", "test_fraction", "methods", "models"].contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key '{key}'")));
            }
        }
        let master_seed = match top.get("master_seed") {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("invalid master_seed '{v}'")))?,
            None => DEFAULT_MASTER_SEED,
        };
        let test_fraction = match top.get("test_fraction") {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("invalid test_fraction '{v}'")))?,
            None => 0.2,
        };
        let split =
            SplitSpec::new(test_fraction, master_seed).map_err(|e| Error::Config(e.to_string()))?;
        let methods = match top.get("methods") {
            Some(v) => Method::parse_list(v)?,
            None => Method::ALL.to_vec(),
        };
        let models = match top.get("models") {
            None => None,
            Some(v) => {
                let ids: Vec<String> = v
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                let known: Vec<String> = zoo_configs().into_iter().map(|c| c.id).collect();
                if let Some(bad) = ids.iter().find(|id| !known.contains(id)) {
                    return Err(Error::Config(format!(
                        "unknown model '{bad}'; known: {}",
                        known.join(",")
                    )));
                }
                Some(ids)
            }
        };
        let datasets = order
            .into_iter()
            .map(|name| {
                let kv = per_dataset.remove(&name).expect("recorded");
                dataset_config(name, kv, base)
            })
            .collect::<Result<Vec<_>>>()?;
        if datasets.is_empty() {
            return Err(Error::Config("no datasets configured".into()));
        }
        Ok(ExperimentConfig {
            datasets,
            master_seed,
            split,
            methods,
            models,
        })
    }

    pub fn with_master_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self.split = SplitSpec::new(self.split.test_fraction(), seed).expect("validated");
        self
    }

    /// Hex SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn zoo(&self) -> Vec<ModelConfig> {
        zoo_configs()
            .into_iter()
            .filter(|c| self.models.as_ref().is_none_or(|ids| ids.contains(&c.id)))
            .map(|c| c.with_master_seed(self.master_seed))
            .collect()
    }
}

fn dataset_config(
    name: String,
    mut kv: BTreeMap<String, String>,
    base: &Path,
) -> Result<DatasetConfig> {
    let prefix = format!("dataset.{name}");
    let source = kv
        .remove("source")
        .ok_or_else(|| Error::Config(format!("{prefix}.source is missing")))?;
    let mut external = BTreeMap::new();
    kv.retain(|k, v| match k.strip_prefix("external.") {
        Some(id) => {
            external.insert(id.to_string(), base.join(v.as_str()));
            false
        }
        None => true,
    });
    let allowed = DATASET_KEYS
        .iter()
        .find(|(s, _)| *s == source)
        .map(|(_, keys)| *keys)
        .ok_or_else(|| Error::UnknownTask(source.clone()))?;
    if let Some(bad) = kv.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!(
            "{prefix}.{bad}: not a valid key for source '{source}'"
        )));
    }
    let path = || {
        kv.get("path")
            .map(|p| base.join(p))
            .ok_or_else(|| Error::Config(format!("{prefix}.path is missing")))
    };
    let source = match source.as_str() {
        "synthetic" => DatasetSource::Synthetic(synthetic_from_map(&kv)?),
        "csv" => DatasetSource::Csv {
            path: path()?,
            schema: schema_from_map(&kv)?,
        },
        task => DatasetSource::Task {
            task: task.parse::<Task>()?,
            path: path()?,
        },
    };
    Ok(DatasetConfig {
        name,
        source,
        external,
    })
}

/// Outcome of one (model, method) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ScoreOutcome {
    Ok { value: f64, details: Diagnostics },
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodScore {
    pub method: Method,
    #[serde(flatten)]
    pub outcome: ScoreOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelRecord {
    pub model_id: String,
    /// Zoo family name, or `external`.
    pub family: String,
    pub flags: Vec<String>,
    /// Set when training or ingestion failed; `scores` is then empty.
    pub error: Option<String>,
    pub scores: Vec<MethodScore>,
}

impl ModelRecord {
    fn value(&self, m: Method) -> Option<f64> {
        self.scores
            .iter()
            .find(|s| s.method == m)
            .and_then(|s| match s.outcome {
                ScoreOutcome::Ok { value, .. } => Some(value),
                ScoreOutcome::Failed { .. } => None,
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exclusion {
    pub model_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscordantSet {
    pub m1: Method,
    pub m2: Method,
    pub pairs: Vec<DiscordantPair>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetResult {
    pub name: String,
    pub rows: usize,
    pub dropped_rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub group_labels: Vec<String>,
    pub test_group_counts: Vec<usize>,
    pub models: Vec<ModelRecord>,
    /// Models left out of every correlation for this dataset.
    pub excluded: Vec<Exclusion>,
    pub score_table: ScoreTable,
    pub correlations: Vec<CorrelationMatrix>,
    pub discordant: Vec<DiscordantSet>,
}

impl DatasetResult {
    pub fn matrix(
        &self,
        kind: CorrelationKind,
        family: MetricFamily,
    ) -> Option<&CorrelationMatrix> {
        self.correlations
            .iter()
            .find(|m| m.kind == kind && m.methods.first().map(Method::family) == Some(family))
    }

    pub fn entry(
        &self,
        kind: CorrelationKind,
        m1: Method,
        m2: Method,
    ) -> Option<&CorrelationEntry> {
        self.correlations
            .iter()
            .filter(|m| m.kind == kind)
            .find_map(|m| m.get(m1, m2))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Instantiation {
    pub method: Method,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub test_fraction: f64,
    pub instantiations: Vec<Instantiation>,
    pub density_ratio_classifier: String,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub methods: Vec<Method>,
    pub datasets: Vec<DatasetResult>,
    pub provenance: Provenance,
}

impl ExperimentResult {
    /// Pretty JSON with a trailing newline. Field order is fixed, so equal results give equal bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    /// Score tables in dataset order.
    pub fn score_tables(&self) -> impl Iterator<Item = &ScoreTable> {
        self.datasets.iter().map(|d| &d.score_table)
    }
}

pub fn provenance_notes() -> Vec<String> {
    vec![
        "p-values: two-sided t approximation with n-2 degrees of freedom for both Pearson and Spearman".into(),
        "spearman ties use average ranks".into(),
        "model zoo: fixed 24-configuration stand-in catalog, not the original study's models".into(),
        "models missing any requested score are excluded listwise from correlations".into(),
        "all scores are computed on the held-out test split".into(),
    ]
}

pub fn instantiations(methods: &[Method]) -> Vec<Instantiation> {
    methods
        .iter()
        .map(|&method| Instantiation {
            method,
            description: method.instantiation().into(),
        })
        .collect()
}

struct Prepared {
    full: Dataset,
    train: Dataset,
    test: Dataset,
    test_idx: Vec<usize>,
}

fn prepare(cfg: &ExperimentConfig, dc: &DatasetConfig) -> Result<Prepared> {
    let full = dc.source.load()?.with_name(dc.name.clone());
    let spec = SplitSpec::new(
        cfg.split.test_fraction(),
        derive_seed(cfg.master_seed, &format!("split:{}", dc.name)),
    )?;
    let (train_idx, test_idx) = split_indices(&full, spec)?;
    let (mut train, mut test) = (full.subset(&train_idx)?, full.subset(&test_idx)?);
    if full.has_missing_features() {
        let medians = train.feature_medians();
        train = train.impute_missing(&medians)?;
        test = test.impute_missing(&medians)?;
    }
    Ok(Prepared {
        full,
        train,
        test,
        test_idx,
    })
}

fn score_all(ps: &PredictionSet, methods: &[Method]) -> Vec<MethodScore> {
    methods
        .iter()
        .map(|&method| MethodScore {
            method,
            outcome: match compute(method, ps) {
                Ok(f) => ScoreOutcome::Ok {
                    value: f.value,
                    details: f.details,
                },
                Err(e) => ScoreOutcome::Failed {
                    reason: e.to_string(),
                },
            },
        })
        .collect()
}

fn failed(model_id: String, family: &str, e: &Error) -> ModelRecord {
    ModelRecord {
        model_id,
        family: family.into(),
        flags: Vec::new(),
        error: Some(e.to_string()),
        scores: Vec::new(),
    }
}

fn run_dataset(cfg: &ExperimentConfig, dc: &DatasetConfig) -> Result<DatasetResult> {
    let p = prepare(cfg, dc)?;
    let zoo = cfg.zoo();
    if let Some(id) = dc
        .external
        .keys()
        .find(|id| zoo.iter().any(|c| &c.id == *id))
    {
        return Err(Error::Config(format!(
            "dataset.{}.external.{id} collides with a zoo model id",
            dc.name
        )));
    }
    let mut externals = Vec::new();
    for (id, path) in &dc.external {
        let mut ps = ingest_predictions(path, &p.full)?.subset(&p.test_idx)?;
        ps.model_id = id.clone();
        externals.push(ps);
    }
    let mut models: Vec<ModelRecord> = zoo
        .par_iter()
        .map(
            |c| match train(c, &p.train).and_then(|m| predict(&m, &p.test).map(|ps| (m, ps))) {
                Ok((m, ps)) => ModelRecord {
                    model_id: c.id.clone(),
                    family: c.family.as_str().into(),
                    flags: m.flags.clone(),
                    error: None,
                    scores: score_all(&ps, &cfg.methods),
                },
                Err(e) => failed(c.id.clone(), c.family.as_str(), &e),
            },
        )
        .collect();
    models.extend(
        externals
            .par_iter()
            .map(|ps| ModelRecord {
                model_id: ps.model_id.clone(),
                family: "external".into(),
                flags: Vec::new(),
                error: None,
                scores: score_all(ps, &cfg.methods),
            })
            .collect::<Vec<_>>(),
    );
    assemble(&dc.name, &p, models, &cfg.methods)
}

fn assemble(
    name: &str,
    p: &Prepared,
    models: Vec<ModelRecord>,
    methods: &[Method],
) -> Result<DatasetResult> {
    let mut excluded = Vec::new();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for rec in &models {
        if let Some(err) = &rec.error {
            excluded.push(Exclusion {
                model_id: rec.model_id.clone(),
                reason: format!("training failed: {err}"),
            });
            continue;
        }
        let row: Vec<Option<f64>> = methods.iter().map(|&m| rec.value(m)).collect();
        match methods.iter().zip(&row).find(|(_, v)| v.is_none()) {
            Some((m, _)) => excluded.push(Exclusion {
                model_id: rec.model_id.clone(),
                reason: format!("{m} failed"),
            }),
            None => {
                ids.push(rec.model_id.clone());
                values.push(row.into_iter().flatten().collect());
            }
        }
    }
    let table = ScoreTable::new(name, ids, methods.to_vec(), values)?;
    let mut correlations = Vec::new();
    let mut discordant = Vec::new();
    for family in [MetricFamily::Parity, MetricFamily::Separation] {
        let fam: Vec<Method> = methods
            .iter()
            .copied()
            .filter(|m| m.family() == family)
            .collect();
        if fam.len() < 2 {
            continue;
        }
        let sub = ScoreTable::new(
            name,
            table.model_ids().to_vec(),
            fam.clone(),
            table
                .values()
                .iter()
                .map(|r| {
                    fam.iter()
                        .map(|&m| r[methods.iter().position(|&x| x == m).expect("in table")])
                        .collect()
                })
                .collect(),
        )?;
        for kind in CorrelationKind::ALL {
            correlations.push(
                correlation_matrix(&sub, kind)
                    .unwrap_or_else(|e| undefined_matrix(name, kind, &fam, &e)),
            );
        }
        for i in 0..fam.len() {
            for j in i + 1..fam.len() {
                discordant.push(DiscordantSet {
                    m1: fam[i],
                    m2: fam[j],
                    pairs: discordant_pairs(&sub, fam[i], fam[j])?,
                });
            }
        }
    }
    Ok(DatasetResult {
        name: name.into(),
        rows: p.full.len(),
        dropped_rows: p.full.dropped_rows(),
        train_rows: p.train.len(),
        test_rows: p.test.len(),
        group_labels: p.full.group_labels().to_vec(),
        test_group_counts: p.test.group_counts(),
        models,
        excluded,
        score_table: table,
        correlations,
        discordant,
    })
}

fn undefined_matrix(
    name: &str,
    kind: CorrelationKind,
    methods: &[Method],
    e: &Error,
) -> CorrelationMatrix {
    let k = methods.len();
    let entries = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        CorrelationEntry::Diagonal
                    } else {
                        CorrelationEntry::Undefined {
                            reason: e.to_string(),
                        }
                    }
                })
                .collect()
        })
        .collect();
    CorrelationMatrix {
        dataset: name.into(),
        kind,
        methods: methods.to_vec(),
        entries,
    }
}

/// Runs every configured dataset. Identical configs give identical results.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let datasets = cfg
        .datasets
        .iter()
        .map(|dc| run_dataset(cfg, dc))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        methods: cfg.methods.clone(),
        datasets,
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            master_seed: cfg.master_seed,
            test_fraction: cfg.split.test_fraction(),
            instantiations: instantiations(&cfg.methods),
            density_ratio_classifier: DENSITY_RATIO_CLASSIFIER.into(),
            notes: provenance_notes(),
        },
    })
}
