//! The regression model catalog, training, prediction and ingestion of
//! externally produced predictions.

mod knn;
mod linear;
mod mlp;
mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::datasets::Dataset;
use crate::numerics::Sample1D;
use crate::seed::derive_seed;
use crate::{Error, Result};

pub use knn::Knn;
pub use linear::{lasso, ols, poly_expand, ridge, LinearModel, Standardizer, OLS_FALLBACK_L2};
pub use mlp::Mlp;
pub use tree::{Boosted, Forest, RegressionTree};

pub const DEFAULT_MASTER_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ols,
    Ridge,
    Lasso,
    Poly,
    Knn,
    Tree,
    Forest,
    Gbt,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Ols,
        Family::Ridge,
        Family::Lasso,
        Family::Poly,
        Family::Knn,
        Family::Tree,
        Family::Forest,
        Family::Gbt,
        Family::Mlp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Ols => "ols",
            Family::Ridge => "ridge",
            Family::Lasso => "lasso",
            Family::Poly => "poly",
            Family::Knn => "knn",
            Family::Tree => "tree",
            Family::Forest => "forest",
            Family::Gbt => "gbt",
            Family::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model family '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelConfig {
    pub id: String,
    pub family: Family,
    pub hyperparameters: BTreeMap<String, f64>,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(id: impl Into<String>, family: Family, params: &[(&str, f64)]) -> Self {
        let id = id.into();
        Self {
            seed: derive_seed(DEFAULT_MASTER_SEED, &id),
            id,
            family,
            hyperparameters: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    /// Re-derives the per-config seed from a master seed and the model id.
    pub fn with_master_seed(mut self, master: u64) -> Self {
        self.seed = derive_seed(master, &self.id);
        self
    }

    fn param(&self, name: &str) -> Result<f64> {
        self.hyperparameters.get(name).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("{}: missing hyperparameter '{name}'", self.id))
        })
    }

    fn count(&self, name: &str, min: usize) -> Result<usize> {
        let v = self.param(name)?;
        if v.fract() != 0.0 || v < min as f64 {
            return Err(Error::InvalidArgument(format!(
                "{}: '{name}' must be an integer >= {min}",
                self.id
            )));
        }
        Ok(v as usize)
    }

    fn positive(&self, name: &str) -> Result<f64> {
        let v = self.param(name)?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{}: '{name}' must be positive",
                self.id
            )));
        }
        Ok(v)
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// The fixed 24-model catalog, seeds derived from [`DEFAULT_MASTER_SEED`].
pub fn zoo_configs() -> Vec<ModelConfig> {
    let mut out = vec![ModelConfig::new("ols", Family::Ols, &[])];
    for a in [0.1, 1.0, 10.0] {
        out.push(ModelConfig::new(
            format!("ridge_a{}", fmt_num(a)),
            Family::Ridge,
            &[("alpha", a)],
        ));
    }
    for a in [0.01, 0.1, 0.5] {
        out.push(ModelConfig::new(
            format!("lasso_a{}", fmt_num(a)),
            Family::Lasso,
            &[("alpha", a)],
        ));
    }
    for d in [2.0, 3.0] {
        out.push(ModelConfig::new(
            format!("poly_d{d}"),
            Family::Poly,
            &[("degree", d), ("alpha", 1.0)],
        ));
    }
    for k in [5.0, 15.0, 31.0, 61.0] {
        out.push(ModelConfig::new(
            format!("knn_k{k}"),
            Family::Knn,
            &[("k", k)],
        ));
    }
    for d in [3.0, 6.0, 10.0] {
        out.push(ModelConfig::new(
            format!("tree_d{d}"),
            Family::Tree,
            &[("depth", d)],
        ));
    }
    for (t, d) in [(50.0, 6.0), (100.0, 10.0)] {
        out.push(ModelConfig::new(
            format!("forest_t{t}_d{d}"),
            Family::Forest,
            &[("trees", t), ("depth", d)],
        ));
    }
    for (r, lr, d) in [(100.0, 0.1, 3.0), (200.0, 0.05, 3.0), (300.0, 0.05, 2.0)] {
        out.push(ModelConfig::new(
            format!("gbt_r{r}_lr{}_d{d}", fmt_num(lr)),
            Family::Gbt,
            &[("rounds", r), ("learning_rate", lr), ("depth", d)],
        ));
    }
    for h in [16.0, 32.0, 64.0] {
        out.push(ModelConfig::new(
            format!("mlp_h{h}"),
            Family::Mlp,
            &[
                ("hidden", h),
                ("learning_rate", 0.01),
                ("iterations", 3000.0),
            ],
        ));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
enum Fitted {
    Linear(LinearModel),
    Scaled {
        scaler: Standardizer,
        model: LinearModel,
    },
    Poly {
        scaler: Standardizer,
        degree: usize,
        model: LinearModel,
    },
    Knn(Knn),
    Tree(RegressionTree),
    Forest(Forest),
    Gbt(Boosted),
    Mlp(Mlp),
}

/// A trained regressor.
#[derive(Clone, Debug, Serialize)]
pub struct Model {
    pub id: String,
    pub family: Family,
    /// Notes about training, e.g. a singular-OLS ridge fallback.
    pub flags: Vec<String>,
    arity: usize,
    fitted: Fitted,
}

impl Model {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.fitted {
            Fitted::Linear(m) => m.predict_row(row),
            Fitted::Scaled { scaler, model } => model.predict_row(&scaler.apply_row(row)),
            Fitted::Poly {
                scaler,
                degree,
                model,
            } => model.predict_row(&poly_expand(&scaler.apply_row(row), *degree)),
            Fitted::Knn(m) => m.predict_row(row),
            Fitted::Tree(t) => t.predict_row(row),
            Fitted::Forest(f) => f.predict_row(row),
            Fitted::Gbt(b) => b.predict_row(row),
            Fitted::Mlp(m) => m.predict_row(row),
        }
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter()
            .map(|r| {
                if r.len() != self.arity {
                    return Err(Error::DimensionMismatch {
                        expected: self.arity,
                        got: r.len(),
                    });
                }
                if r.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("features; impute missing values first"));
                }
                let p = self.predict_row(r);
                if p.is_finite() {
                    Ok(p)
                } else {
                    Err(Error::NonFinite("prediction"))
                }
            })
            .collect()
    }
}

/// Trains one configuration. Deterministic given `(config, data)`.
pub fn train(config: &ModelConfig, data: &Dataset) -> Result<Model> {
    if data.len() < 2 {
        return Err(Error::InsufficientData(data.len()));
    }
    if data.features().iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("features; impute missing values first"));
    }
    let x = data.features();
    let y = data.target();
    let mut flags = Vec::new();
    let fitted = match config.family {
        Family::Ols => {
            let (m, fallback) = ols(x, y)?;
            if fallback {
                flags.push(format!(
                    "singular normal equations: ridge fallback l2={OLS_FALLBACK_L2}"
                ));
            }
            Fitted::Linear(m)
        }
        Family::Ridge => {
            let alpha = config.positive("alpha")?;
            Fitted::Linear(ridge(x, y, alpha).ok_or_else(|| {
                Error::InvalidArgument(format!("{}: ridge solve failed", config.id))
            })?)
        }
        Family::Lasso => {
            let alpha = config.positive("alpha")?;
            let scaler = Standardizer::fit(x);
            let model = lasso(&scaler.apply(x), y, alpha, 1000, 1e-8);
            Fitted::Scaled { scaler, model }
        }
        Family::Poly => {
            let degree = config.count("degree", 1)?;
            let alpha = config.positive("alpha")?;
            let scaler = Standardizer::fit(x);
            let expanded: Vec<Vec<f64>> = scaler
                .apply(x)
                .iter()
                .map(|r| poly_expand(r, degree))
                .collect();
            let model = ridge(&expanded, y, alpha).ok_or_else(|| {
                Error::InvalidArgument(format!("{}: ridge solve failed", config.id))
            })?;
            Fitted::Poly {
                scaler,
                degree,
                model,
            }
        }
        Family::Knn => Fitted::Knn(Knn::fit(x, y, config.count("k", 1)?)),
        Family::Tree => {
            let rows: Vec<usize> = (0..x.len()).collect();
            Fitted::Tree(RegressionTree::fit(x, y, &rows, config.count("depth", 1)?))
        }
        Family::Forest => Fitted::Forest(Forest::fit(
            x,
            y,
            config.count("trees", 1)?,
            config.count("depth", 1)?,
            config.seed,
        )),
        Family::Gbt => Fitted::Gbt(Boosted::fit(
            x,
            y,
            config.count("rounds", 0)?,
            config.positive("learning_rate")?,
            config.count("depth", 1)?,
        )),
        Family::Mlp => Fitted::Mlp(Mlp::fit(
            x,
            y,
            config.count("hidden", 1)?,
            config.positive("learning_rate")?,
            config.count("iterations", 0)?,
            config.seed,
        )),
    };
    Ok(Model {
        id: config.id.clone(),
        family: config.family,
        flags,
        arity: data.n_features(),
        fitted,
    })
}

/// One model's predictions aligned with the targets and groups of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionSet {
    pub model_id: String,
    s: Sample1D,
    y: Sample1D,
    a: Vec<usize>,
}

impl PredictionSet {
    pub fn new(
        model_id: impl Into<String>,
        s: Vec<f64>,
        y: Vec<f64>,
        a: Vec<usize>,
    ) -> Result<Self> {
        if s.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: s.len(),
            });
        }
        if a.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: a.len(),
            });
        }
        Ok(Self {
            model_id: model_id.into(),
            s: Sample1D::new(s)?,
            y: Sample1D::new(y)?,
            a,
        })
    }

    pub fn s(&self) -> &[f64] {
        self.s.values()
    }

    pub fn y(&self) -> &[f64] {
        self.y.values()
    }

    pub fn a(&self) -> &[usize] {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Distinct group ids present, ascending.
    pub fn groups(&self) -> Vec<usize> {
        self.a
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Rows at `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        PredictionSet::new(
            self.model_id.clone(),
            indices.iter().map(|&i| self.s()[i]).collect(),
            indices.iter().map(|&i| self.y()[i]).collect(),
            indices.iter().map(|&i| self.a[i]).collect(),
        )
    }
}

pub fn predict(model: &Model, d: &Dataset) -> Result<PredictionSet> {
    let s = model.predict_rows(d.features())?;
    PredictionSet::new(
        model.id.clone(),
        s,
        d.target().to_vec(),
        d.protected().to_vec(),
    )
}

/// Reads a `row_index,prediction` CSV (0-based indices into `d`) and aligns it with `d`.
pub fn ingest_predictions(path: impl AsRef<Path>, d: &Dataset) -> Result<PredictionSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers != ["row_index", "prediction"] {
        return Err(Error::SchemaMismatch(format!(
            "{}: expected header 'row_index,prediction', got '{}'",
            path.display(),
            headers.join(",")
        )));
    }
    let mut s: Vec<Option<f64>> = vec![None; d.len()];
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let idx: usize = rec[0].trim().parse().map_err(|_| {
            Error::Alignment(format!("line {}: bad row index '{}'", line + 2, &rec[0]))
        })?;
        let value: f64 = rec[1].trim().parse().map_err(|_| {
            Error::SchemaMismatch(format!("line {}: bad prediction '{}'", line + 2, &rec[1]))
        })?;
        if !value.is_finite() {
            return Err(Error::NonFinite("prediction"));
        }
        match s.get_mut(idx) {
            None => {
                return Err(Error::Alignment(format!(
                    "row index {idx} out of range 0..{}",
                    d.len()
                )))
            }
            Some(Some(_)) => return Err(Error::Alignment(format!("duplicate row index {idx}"))),
            Some(slot) => *slot = Some(value),
        }
    }
    if let Some(missing) = s.iter().position(Option::is_none) {
        let count = s.iter().filter(|v| v.is_none()).count();
        return Err(Error::Alignment(format!(
            "{count} rows without a prediction (first: {missing})"
        )));
    }
    let id = path
        .file_stem()
        .map_or_else(|| "external".into(), |s| s.to_string_lossy().into_owned());
    PredictionSet::new(
        id,
        s.into_iter().flatten().collect(),
        d.target().to_vec(),
        d.protected().to_vec(),
    )
}
