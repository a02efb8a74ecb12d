//! Dataset loading, benchmark task recipes, synthetic generation and splits.
//!
//! Missing values are handled here so the metric modules can assume clean
//! inputs. Generic CSV loading drops incomplete rows; the Communities & Crime
//! recipe keeps missing numeric features as `NaN` and expects them to be
//! imputed with training-split medians after [`split`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::{Error, Result};

/// Fewest usable rows a loaded file may have.
pub const MIN_ROWS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    feature_names: Vec<String>,
    features: Vec<Vec<f64>>,
    target: Vec<f64>,
    protected: Vec<usize>,
    group_labels: Vec<String>,
    dropped_rows: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        target: Vec<f64>,
        protected: Vec<usize>,
        group_labels: Vec<String>,
    ) -> Result<Self> {
        let n = target.len();
        if features.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: features.len(),
            });
        }
        if protected.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: protected.len(),
            });
        }
        if let Some(row) = features.iter().find(|r| r.len() != feature_names.len()) {
            return Err(Error::DimensionMismatch {
                expected: feature_names.len(),
                got: row.len(),
            });
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target"));
        }
        if features.iter().flatten().any(|v| v.is_infinite()) {
            return Err(Error::NonFinite("features"));
        }
        if group_labels.len() < 2 {
            return Err(Error::DegenerateProtected);
        }
        let mut counts = vec![0usize; group_labels.len()];
        for &a in &protected {
            if a >= group_labels.len() {
                return Err(Error::InvalidArgument(format!("group id {a} has no label")));
            }
            counts[a] += 1;
        }
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::DegenerateProtected);
        }
        if let Some(g) = counts.iter().position(|&c| c < 2) {
            return Err(Error::SparseGroup(group_labels[g].clone()));
        }
        Ok(Self {
            name: name.into(),
            feature_names,
            features,
            target,
            protected,
            group_labels,
            dropped_rows: 0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn protected(&self) -> &[usize] {
        &self.protected
    }

    pub fn group_labels(&self) -> &[String] {
        &self.group_labels
    }

    pub fn n_groups(&self) -> usize {
        self.group_labels.len()
    }

    /// Rows discarded during loading because of missing values.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn group_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_groups()];
        for &a in &self.protected {
            counts[a] += 1;
        }
        counts
    }

    pub fn has_missing_features(&self) -> bool {
        self.features.iter().flatten().any(|v| v.is_nan())
    }

    /// Rows at `indices`, in the given order, keeping every group label.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Dataset::new(
            self.name.clone(),
            self.feature_names.clone(),
            indices.iter().map(|&i| self.features[i].clone()).collect(),
            indices.iter().map(|&i| self.target[i]).collect(),
            indices.iter().map(|&i| self.protected[i]).collect(),
            self.group_labels.clone(),
        )
    }

    /// Per-feature median of the non-missing values (0 for an all-missing column).
    pub fn feature_medians(&self) -> Vec<f64> {
        (0..self.n_features())
            .map(|j| {
                let mut col: Vec<f64> = self
                    .features
                    .iter()
                    .map(|r| r[j])
                    .filter(|v| !v.is_nan())
                    .collect();
                if col.is_empty() {
                    return 0.0;
                }
                col.sort_by(f64::total_cmp);
                let m = col.len();
                if m % 2 == 1 {
                    col[m / 2]
                } else {
                    0.5 * (col[m / 2 - 1] + col[m / 2])
                }
            })
            .collect()
    }

    /// Replaces missing (`NaN`) features with the supplied per-column values.
    pub fn impute_missing(&self, fill: &[f64]) -> Result<Self> {
        if fill.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: fill.len(),
            });
        }
        let mut out = self.clone();
        for row in &mut out.features {
            for (v, f) in row.iter_mut().zip(fill) {
                if v.is_nan() {
                    *v = *f;
                }
            }
        }
        Ok(out)
    }
}

/// Test-set fraction and shuffle seed for [`split`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitSpec {
    test_fraction: f64,
    seed: u64,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Result<Self> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "test_fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        Ok(Self {
            test_fraction,
            seed,
        })
    }

    pub fn test_fraction(&self) -> f64 {
        self.test_fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

/// Stratified shuffle split; returns sorted (train, test) row indices.
pub fn split_indices(d: &Dataset, s: SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut train = Vec::with_capacity(d.len());
    let mut test = Vec::new();
    for g in 0..d.n_groups() {
        let mut rows: Vec<usize> = (0..d.len()).filter(|&i| d.protected[i] == g).collect();
        rows.shuffle(&mut rng);
        let n_test = (rows.len() as f64 * s.test_fraction).round() as usize;
        if n_test < 2 || rows.len() - n_test < 2 {
            return Err(Error::SplitInfeasible(format!(
                "group '{}' has {} rows; both parts need at least 2",
                d.group_labels[g],
                rows.len()
            )));
        }
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified shuffle split into (train, test) datasets.
pub fn split(d: &Dataset, s: SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(d, s)?;
    Ok((d.subset(&train)?, d.subset(&test)?))
}

/// Parameters of the synthetic regression task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SyntheticSpec {
    pub n: usize,
    /// Additive shift of `Y` for group 1.
    pub dependence: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidArgument(format!(
                "synthetic n must be >= 10, got {}",
                self.n
            )));
        }
        if !(self.dependence >= 0.0) || !self.dependence.is_finite() {
            return Err(Error::InvalidArgument(
                "dependence must be finite and >= 0".into(),
            ));
        }
        if !(self.noise_sd > 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::InvalidArgument("noise_sd must be positive".into()));
        }
        Ok(())
    }
}

pub const SYNTHETIC_BETA: [f64; 3] = [1.0, -0.5, 0.25];

/// `A ~ Bernoulli(0.5)`, `X ~ N(0, I_3)`, `Y = X·β + dependence·A + noise_sd·ε`.
///
/// The features are `x1, x2, x3` followed by `a` itself, so trained models can
/// pick up the group shift in `Y`.
pub fn generate_synthetic(spec: SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = Vec::with_capacity(spec.n);
    let mut target = Vec::with_capacity(spec.n);
    let mut protected = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let a = usize::from(rng.random_bool(0.5));
        let x: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let eps: f64 = rng.sample(StandardNormal);
        let y = x
            .iter()
            .zip(SYNTHETIC_BETA)
            .map(|(x, b)| x * b)
            .sum::<f64>()
            + spec.dependence * a as f64
            + spec.noise_sd * eps;
        features.push(vec![x[0], x[1], x[2], a as f64]);
        target.push(y);
        protected.push(a);
    }
    Dataset::new(
        "synthetic",
        ["x1", "x2", "x3", "a"].map(String::from).to_vec(),
        features,
        target,
        protected,
        vec!["a=0".into(), "a=1".into()],
    )
}

/// Column roles for [`load_csv`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColumnSchema {
    pub target: String,
    pub protected: String,
    pub features: Vec<String>,
}

fn is_missing(v: &str) -> bool {
    let t = v.trim();
    t.is_empty() || ["na", "nan", "null", "?", "none"].contains(&t.to_ascii_lowercase().as_str())
}

fn parse_number(v: &str) -> Option<f64> {
    v.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// A CSV file held as strings, header lookup by name.
struct RawTable {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl RawTable {
    fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(file);
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
        let mut rows = Vec::new();
        for rec in reader.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(str::to_string).collect());
        }
        Ok(Self {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::SchemaMismatch(format!(
                "column '{name}' not found in {}",
                self.path.display()
            ))
        })
    }

    /// Case-insensitive lookup of the first matching candidate.
    fn column_any(&self, candidates: &[&str]) -> Result<usize> {
        candidates
            .iter()
            .find_map(|c| self.headers.iter().position(|h| h.eq_ignore_ascii_case(c)))
            .ok_or_else(|| {
                Error::SchemaMismatch(format!(
                    "none of {candidates:?} found in {}",
                    self.path.display()
                ))
            })
    }

    fn stem(&self) -> String {
        self.path
            .file_stem()
            .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
    }
}

/// Encodes feature columns of the kept rows: numeric columns as-is, anything
/// else one-hot with the first (sorted) level dropped.
fn encode_features(
    table: &RawTable,
    cols: &[usize],
    rows: &[usize],
) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut names = Vec::new();
    let mut out = vec![Vec::new(); rows.len()];
    for &c in cols {
        let values: Vec<&str> = rows.iter().map(|&r| table.rows[r][c].as_str()).collect();
        let numeric = values
            .iter()
            .all(|v| is_missing(v) || parse_number(v).is_some());
        if numeric {
            names.push(table.headers[c].clone());
            for (o, v) in out.iter_mut().zip(&values) {
                o.push(parse_number(v).unwrap_or(f64::NAN));
            }
        } else {
            let levels: BTreeSet<&str> = values.iter().map(|v| v.trim()).collect();
            for level in levels.iter().skip(1) {
                names.push(format!("{}={}", table.headers[c], level));
                for (o, v) in out.iter_mut().zip(&values) {
                    o.push(if v.trim() == *level { 1.0 } else { 0.0 });
                }
            }
        }
    }
    (names, out)
}

fn dense_groups<'a>(values: impl Iterator<Item = &'a str>) -> (Vec<usize>, Vec<String>) {
    let values: Vec<&str> = values.map(str::trim).collect();
    let labels: Vec<String> = values
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(String::from)
        .collect();
    let ids = values
        .iter()
        .map(|v| labels.iter().position(|l| l == v).expect("label present"))
        .collect();
    (ids, labels)
}

fn finish(
    name: String,
    names: Vec<String>,
    features: Vec<Vec<f64>>,
    target: Vec<f64>,
    groups: (Vec<usize>, Vec<String>),
    dropped: usize,
) -> Result<Dataset> {
    if target.len() < MIN_ROWS {
        return Err(Error::InsufficientData(target.len()));
    }
    if groups.1.len() < 2 {
        return Err(Error::DegenerateProtected);
    }
    let mut d = Dataset::new(name, names, features, target, groups.0, groups.1)?;
    d.dropped_rows = dropped;
    Ok(d)
}

/// Loads a headed CSV with the given column roles.
///
/// Rows with a missing value in any used column are dropped and counted.
pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Dataset> {
    let table = RawTable::read(path.as_ref())?;
    if schema.features.is_empty() {
        return Err(Error::SchemaMismatch(
            "at least one feature column is required".into(),
        ));
    }
    let t = table.column(&schema.target)?;
    let a = table.column(&schema.protected)?;
    let fcols = schema
        .features
        .iter()
        .map(|f| table.column(f))
        .collect::<Result<Vec<_>>>()?;

    let mut kept = Vec::new();
    let mut target = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        if is_missing(&row[t]) || is_missing(&row[a]) || fcols.iter().any(|&c| is_missing(&row[c]))
        {
            continue;
        }
        let y = parse_number(&row[t]).ok_or_else(|| {
            Error::SchemaMismatch(format!("non-numeric target '{}' on row {}", row[t], i + 1))
        })?;
        kept.push(i);
        target.push(y);
    }
    let dropped = table.rows.len() - kept.len();
    let (names, features) = encode_features(&table, &fcols, &kept);
    let groups = dense_groups(kept.iter().map(|&r| table.rows[r][a].as_str()));
    finish(table.stem(), names, features, target, groups, dropped)
}

/// The three public benchmark regression tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    LawSchool,
    Crime,
    Insurance,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "law_school" | "law" => Ok(Task::LawSchool),
            "crime" | "communities_crime" => Ok(Task::Crime),
            "insurance" => Ok(Task::Insurance),
            other => Err(Error::UnknownTask(other.to_string())),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::LawSchool => "law_school",
            Task::Crime => "crime",
            Task::Insurance => "insurance",
        })
    }
}

/// Applies the fixed preprocessing recipe of a benchmark task to its raw file.
pub fn prepare_task(task: Task, path: impl AsRef<Path>) -> Result<Dataset> {
    let table = RawTable::read(path.as_ref())?;
    let d = match task {
        Task::LawSchool => law_school(&table)?,
        Task::Crime => crime(&table)?,
        Task::Insurance => insurance(&table)?,
    };
    Ok(d.with_name(task.to_string()))
}

const LAW_TARGETS: [&str; 2] = ["ZFYA", "zfygpa"];
const LAW_EXCLUDED: [&str; 6] = ["", "unnamed: 0", "id", "zgpa", "zfygpa", "zfya"];

/// Target: standardized first-year GPA. Protected: race as white / non-white.
/// Features: LSAT, undergraduate GPA, then the remaining numeric columns.
fn law_school(table: &RawTable) -> Result<Dataset> {
    let t = table.column_any(&LAW_TARGETS)?;
    let race = table.column_any(&["race", "race1"])?;
    let lsat = table.column_any(&["LSAT"])?;
    let ugpa = table.column_any(&["UGPA"])?;

    let kept: Vec<usize> = (0..table.rows.len())
        .filter(|&i| {
            let r = &table.rows[i];
            !is_missing(&r[race])
                && parse_number(&r[t]).is_some()
                && parse_number(&r[lsat]).is_some()
                && parse_number(&r[ugpa]).is_some()
        })
        .collect();
    let mut extra = Vec::new();
    for c in 0..table.headers.len() {
        if [t, race, lsat, ugpa].contains(&c)
            || LAW_EXCLUDED.contains(&table.headers[c].to_ascii_lowercase().as_str())
        {
            continue;
        }
        if kept
            .iter()
            .all(|&r| parse_number(&table.rows[r][c]).is_some())
        {
            extra.push(c);
        }
    }
    let mut cols = vec![lsat, ugpa];
    cols.extend(extra);
    let (names, features) = encode_features(table, &cols, &kept);

    let raw: Vec<f64> = kept
        .iter()
        .map(|&r| parse_number(&table.rows[r][t]).expect("checked"))
        .collect();
    let target = standardize(&raw);
    let labels = vec!["non-white".to_string(), "white".to_string()];
    let ids = kept
        .iter()
        .map(|&r| usize::from(table.rows[r][race].trim().eq_ignore_ascii_case("white")))
        .collect();
    finish(
        table.stem(),
        names,
        features,
        target,
        (ids, labels),
        table.rows.len() - kept.len(),
    )
}

fn standardize(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let m = crate::numerics::mean(xs);
    let sd = crate::numerics::std_dev(xs, m);
    if sd > 0.0 {
        xs.iter().map(|x| (x - m) / sd).collect()
    } else {
        xs.iter().map(|x| x - m).collect()
    }
}

const CRIME_IDENTIFIERS: [&str; 5] = ["state", "county", "community", "communityname", "fold"];
pub const CRIME_RACE_THRESHOLD: f64 = 0.06;
pub const CRIME_MAX_MISSING: f64 = 0.05;

/// Target: ViolentCrimesPerPop. Protected: `racepctblack > 0.06`. Columns with
/// more than 5% missing are dropped; other gaps stay `NaN` for later imputation.
fn crime(table: &RawTable) -> Result<Dataset> {
    let t = table.column_any(&["ViolentCrimesPerPop"])?;
    let race = table.column_any(&["racepctblack"])?;
    let kept: Vec<usize> = (0..table.rows.len())
        .filter(|&i| {
            parse_number(&table.rows[i][t]).is_some()
                && parse_number(&table.rows[i][race]).is_some()
        })
        .collect();
    let mut cols = Vec::new();
    for c in 0..table.headers.len() {
        if c == t || CRIME_IDENTIFIERS.contains(&table.headers[c].to_ascii_lowercase().as_str()) {
            continue;
        }
        let values = kept.iter().map(|&r| table.rows[r][c].as_str());
        let (mut missing, mut numeric) = (0usize, true);
        for v in values {
            if is_missing(v) {
                missing += 1;
            } else if parse_number(v).is_none() {
                numeric = false;
                break;
            }
        }
        if numeric && (missing as f64) <= CRIME_MAX_MISSING * kept.len() as f64 {
            cols.push(c);
        }
    }
    let (names, features) = encode_features(table, &cols, &kept);
    let target = kept
        .iter()
        .map(|&r| parse_number(&table.rows[r][t]).expect("checked"))
        .collect();
    let labels = vec![
        format!("racepctblack<={CRIME_RACE_THRESHOLD}"),
        format!("racepctblack>{CRIME_RACE_THRESHOLD}"),
    ];
    let ids = kept
        .iter()
        .map(|&r| {
            usize::from(parse_number(&table.rows[r][race]).expect("checked") > CRIME_RACE_THRESHOLD)
        })
        .collect();
    finish(
        table.stem(),
        names,
        features,
        target,
        (ids, labels),
        table.rows.len() - kept.len(),
    )
}

/// Target: charges. Protected: sex. Smoker and region one-hot encoded.
fn insurance(table: &RawTable) -> Result<Dataset> {
    let t = table.column_any(&["charges"])?;
    let sex = table.column_any(&["sex", "gender"])?;
    let cols = ["age", "bmi", "children", "smoker", "region"]
        .iter()
        .map(|c| table.column_any(&[c]))
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<usize> = (0..table.rows.len())
        .filter(|&i| {
            let r = &table.rows[i];
            parse_number(&r[t]).is_some()
                && !is_missing(&r[sex])
                && cols.iter().all(|&c| !is_missing(&r[c]))
        })
        .collect();
    let (names, features) = encode_features(table, &cols, &kept);
    if features.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::SchemaMismatch(
            "age, bmi and children must be numeric".into(),
        ));
    }
    let target = kept
        .iter()
        .map(|&r| parse_number(&table.rows[r][t]).expect("checked"))
        .collect();
    let groups = dense_groups(kept.iter().map(|&r| table.rows[r][sex].as_str()));
    finish(
        table.stem(),
        names,
        features,
        target,
        groups,
        table.rows.len() - kept.len(),
    )
}

/// Where a dataset comes from, as named in experiment configs and on the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Task { task: Task, path: PathBuf },
    Csv { path: PathBuf, schema: ColumnSchema },
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Synthetic(spec) => generate_synthetic(*spec),
            DatasetSource::Task { task, path } => prepare_task(*task, path),
            DatasetSource::Csv { path, schema } => load_csv(path, schema),
        }
    }

    /// Parses a compact spec:
    ///
    /// ```text
    /// synthetic:n=2000,dependence=1,noise_sd=1,seed=7
    /// insurance:data/insurance.csv          (also law_school:, crime:)
    /// csv:data/file.csv;target=y;protected=a;features=x1,x2
    /// ```
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').ok_or_else(|| {
            Error::Config(format!(
                "dataset spec '{spec}' must look like <source>:<details>"
            ))
        })?;
        match kind.trim() {
            "synthetic" => {
                let mut kv = BTreeMap::new();
                for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
                    let (k, v) = part.split_once('=').ok_or_else(|| {
                        Error::Config(format!("expected key=value, got '{part}'"))
                    })?;
                    kv.insert(k.trim().to_string(), v.trim().to_string());
                }
                Ok(DatasetSource::Synthetic(synthetic_from_map(&kv)?))
            }
            "csv" => {
                let mut parts = rest.split(';');
                let path = PathBuf::from(parts.next().unwrap_or_default().trim());
                let mut kv = BTreeMap::new();
                for part in parts.filter(|p| !p.trim().is_empty()) {
                    let (k, v) = part.split_once('=').ok_or_else(|| {
                        Error::Config(format!("expected key=value, got '{part}'"))
                    })?;
                    kv.insert(k.trim().to_string(), v.trim().to_string());
                }
                Ok(DatasetSource::Csv {
                    path,
                    schema: schema_from_map(&kv)?,
                })
            }
            task => Ok(DatasetSource::Task {
                task: task.parse()?,
                path: PathBuf::from(rest.trim()),
            }),
        }
    }

    /// Resolves relative file paths against `base`.
    pub fn rebase(self, base: &Path) -> Self {
        let fix = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        match self {
            DatasetSource::Task { task, path } => DatasetSource::Task {
                task,
                path: fix(path),
            },
            DatasetSource::Csv { path, schema } => DatasetSource::Csv {
                path: fix(path),
                schema,
            },
            s => s,
        }
    }
}

fn required<'a>(kv: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    kv.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
}

fn parsed<T: FromStr>(kv: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = required(kv, key)?;
    raw.parse()
        .map_err(|_| Error::Config(format!("invalid value '{raw}' for '{key}'")))
}

pub(crate) fn synthetic_from_map(kv: &BTreeMap<String, String>) -> Result<SyntheticSpec> {
    let spec = SyntheticSpec {
        n: parsed(kv, "n")?,
        dependence: parsed(kv, "dependence")?,
        noise_sd: if kv.contains_key("noise_sd") {
            parsed(kv, "noise_sd")?
        } else {
            1.0
        },
        seed: parsed(kv, "seed")?,
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

pub(crate) fn schema_from_map(kv: &BTreeMap<String, String>) -> Result<ColumnSchema> {
    Ok(ColumnSchema {
        target: required(kv, "target")?.to_string(),
        protected: required(kv, "protected")?.to_string(),
        features: required(kv, "features")?
            .split(',')
            .map(|f| f.trim().to_string())
            .filter(|f| !f.is_empty())
            .collect(),
    })
}
