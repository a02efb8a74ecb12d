//! Agreement between fairness methods across a set of models.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::metrics::Method;
use crate::{Error, Result};

/// Significance level behind the star annotation.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationCell {
    pub r: f64,
    pub p_value: f64,
    pub significant: bool,
    pub n: usize,
}

impl CorrelationCell {
    fn from_r(r: f64, n: usize) -> Self {
        let r = r.clamp(-1.0, 1.0);
        let df = (n - 2) as f64;
        // two-sided t-test p-value; df / (df + t^2) reduces to 1 - r^2
        let p_value = if r.abs() == 1.0 {
            0.0
        } else {
            beta_reg(df / 2.0, 0.5, 1.0 - r * r).clamp(0.0, 1.0)
        };
        CorrelationCell {
            r,
            p_value,
            significant: p_value < SIGNIFICANCE_LEVEL,
            n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

impl CorrelationKind {
    pub const ALL: [CorrelationKind; 2] = [CorrelationKind::Pearson, CorrelationKind::Spearman];

    pub fn as_str(&self) -> &'static str {
        match self {
            CorrelationKind::Pearson => "pearson",
            CorrelationKind::Spearman => "spearman",
        }
    }

    pub fn compute(&self, x: &[f64], y: &[f64]) -> Result<CorrelationCell> {
        match self {
            CorrelationKind::Pearson => pearson(x, y),
            CorrelationKind::Spearman => spearman(x, y),
        }
    }
}

impl fmt::Display for CorrelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 3 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input"));
    }
    Ok(())
}

/// Sample Pearson correlation with a two-sided t-test p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationCell> {
    check_pair(x, y)?;
    let n = x.len();
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(CorrelationCell::from_r(sxy / (sxx * syy).sqrt(), n))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationCell> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Per-dataset scores, one row per model and one column per method.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreTable {
    pub dataset: String,
    model_ids: Vec<String>,
    methods: Vec<Method>,
    values: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(
        dataset: impl Into<String>,
        model_ids: Vec<String>,
        methods: Vec<Method>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if values.len() != model_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: model_ids.len(),
                got: values.len(),
            });
        }
        if let Some(row) = values.iter().find(|r| r.len() != methods.len()) {
            return Err(Error::DimensionMismatch {
                expected: methods.len(),
                got: row.len(),
            });
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("score table"));
        }
        if model_ids.iter().collect::<BTreeSet<_>>().len() != model_ids.len() {
            return Err(Error::InvalidArgument(
                "duplicate model id in score table".into(),
            ));
        }
        if methods.iter().collect::<BTreeSet<_>>().len() != methods.len() {
            return Err(Error::InvalidArgument(
                "duplicate method in score table".into(),
            ));
        }
        Ok(ScoreTable {
            dataset: dataset.into(),
            model_ids,
            methods,
            values,
        })
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn column(&self, method: Method) -> Option<Vec<f64>> {
        let j = self.methods.iter().position(|&m| m == method)?;
        Some(self.values.iter().map(|r| r[j]).collect())
    }

    pub fn value(&self, model_id: &str, method: Method) -> Option<f64> {
        let i = self.model_ids.iter().position(|m| m == model_id)?;
        let j = self.methods.iter().position(|&m| m == method)?;
        Some(self.values[i][j])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CorrelationEntry {
    Diagonal,
    Undefined { reason: String },
    Value(CorrelationCell),
}

impl CorrelationEntry {
    pub fn cell(&self) -> Option<&CorrelationCell> {
        match self {
            CorrelationEntry::Value(c) => Some(c),
            _ => None,
        }
    }
}

/// Symmetric method-by-method correlation matrix for one dataset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub dataset: String,
    pub kind: CorrelationKind,
    pub methods: Vec<Method>,
    pub entries: Vec<Vec<CorrelationEntry>>,
}

impl CorrelationMatrix {
    pub fn get(&self, m1: Method, m2: Method) -> Option<&CorrelationEntry> {
        let i = self.methods.iter().position(|&m| m == m1)?;
        let j = self.methods.iter().position(|&m| m == m2)?;
        Some(&self.entries[i][j])
    }

    /// Off-diagonal pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (Method, Method, &CorrelationEntry)> + '_ {
        let k = self.methods.len();
        (0..k).flat_map(move |i| {
            (i + 1..k).map(move |j| (self.methods[i], self.methods[j], &self.entries[i][j]))
        })
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Pairwise correlations between the methods of `t`. Constant columns give
/// `Undefined` entries instead of a number.
pub fn correlation_matrix(t: &ScoreTable, kind: CorrelationKind) -> Result<CorrelationMatrix> {
    if t.model_ids.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "correlation matrix needs at least 3 models, got {}",
            t.model_ids.len()
        )));
    }
    let columns: Vec<Vec<f64>> = (0..t.methods.len())
        .map(|j| t.values.iter().map(|r| r[j]).collect())
        .collect();
    let k = t.methods.len();
    let mut entries = vec![vec![CorrelationEntry::Diagonal; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let entry = match [i, j].into_iter().find(|&c| is_constant(&columns[c])) {
                Some(c) => CorrelationEntry::Undefined {
                    reason: format!("{} is constant across models", t.methods[c]),
                },
                None => CorrelationEntry::Value(kind.compute(&columns[i], &columns[j])?),
            };
            entries[i][j] = entry.clone();
            entries[j][i] = entry;
        }
    }
    Ok(CorrelationMatrix {
        dataset: t.dataset.clone(),
        kind,
        methods: t.methods.clone(),
        entries,
    })
}

/// Two models whose ordering under one method is the reverse of their ordering under another.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscordantPair {
    pub model_i: String,
    pub model_j: String,
    /// `v_i - v_j` under the first method.
    pub delta_m1: f64,
    /// `v_i - v_j` under the second method.
    pub delta_m2: f64,
}

/// All model pairs `(i, j)`, `i < j` in table order, ranked oppositely by `m1` and `m2`.
/// Pairs tied under either method are not discordant.
pub fn discordant_pairs(t: &ScoreTable, m1: Method, m2: Method) -> Result<Vec<DiscordantPair>> {
    let missing = |m: Method| Error::InvalidArgument(format!("method {m} not in score table"));
    let c1 = t.column(m1).ok_or_else(|| missing(m1))?;
    let c2 = t.column(m2).ok_or_else(|| missing(m2))?;
    let mut out = Vec::new();
    for i in 0..c1.len() {
        for j in i + 1..c1.len() {
            let (d1, d2) = (c1[i] - c1[j], c2[i] - c2[j]);
            if d1 * d2 < 0.0 {
                out.push(DiscordantPair {
                    model_i: t.model_ids[i].clone(),
                    model_j: t.model_ids[j].clone(),
                    delta_m1: d1,
                    delta_m2: d2,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Pearson from exact integer moments.
    fn integer_pearson(x: &[i64], y: &[i64]) -> f64 {
        let n = x.len() as i128;
        let sx: i128 = x.iter().map(|&v| v as i128).sum();
        let sy: i128 = y.iter().map(|&v| v as i128).sum();
        let sxy: i128 = x.iter().zip(y).map(|(&a, &b)| a as i128 * b as i128).sum();
        let sxx: i128 = x.iter().map(|&v| (v as i128).pow(2)).sum();
        let syy: i128 = y.iter().map(|&v| (v as i128).pow(2)).sum();
        let num = n * sxy - sx * sy;
        let den = (n * sxx - sx * sx) * (n * syy - sy * sy);
        num as f64 / (den as f64).sqrt()
    }

    /// Inversions of `c2` after sorting by `c1`, counted by merge sort.
    fn inversions(c1: &[f64], c2: &[f64]) -> usize {
        fn sort(v: &mut Vec<f64>) -> usize {
            if v.len() < 2 {
                return 0;
            }
            let mut right = v.split_off(v.len() / 2);
            let mut count = sort(v) + sort(&mut right);
            let mut merged = Vec::with_capacity(v.len() + right.len());
            let (mut i, mut j) = (0, 0);
            while i < v.len() && j < right.len() {
                if v[i] <= right[j] {
                    merged.push(v[i]);
                    i += 1;
                } else {
                    count += v.len() - i;
                    merged.push(right[j]);
                    j += 1;
                }
            }
            merged.extend_from_slice(&v[i..]);
            merged.extend_from_slice(&right[j..]);
            *v = merged;
            count
        }
        let mut order: Vec<usize> = (0..c1.len()).collect();
        order.sort_by(|&a, &b| c1[a].total_cmp(&c1[b]));
        let mut seq: Vec<f64> = order.iter().map(|&i| c2[i]).collect();
        sort(&mut seq)
    }

    fn table(cols: &[&[f64]]) -> ScoreTable {
        let n = cols[0].len();
        let ids = (0..n)
            .map(|i| ((b'a' + i as u8) as char).to_string())
            .collect();
        let methods = Method::ALL[..cols.len()].to_vec();
        let values = (0..n)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        ScoreTable::new("t", ids, methods, values).unwrap()
    }

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().r, 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap().r, -1.0);
        let c = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((c.r - 0.8).abs() < 1e-15);
        assert!(c.p_value > 0.05 && !c.significant);
        assert_eq!(
            pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().p_value,
            0.0
        );
    }

    #[test]
    fn pearson_p_value_matches_reference() {
        // r = 0.8, n = 4: t = 0.8 * sqrt(2 / 0.36), two-sided p with 2 df = 1 - t / sqrt(2 + t^2)
        let t = 0.8 * (2.0f64 / 0.36).sqrt();
        let expected = 1.0 - t / (2.0 + t * t).sqrt();
        let c = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!(
            (c.p_value - expected).abs() < 1e-12,
            "{} {}",
            c.p_value,
            expected
        );
    }

    #[test]
    fn spearman_examples() {
        let x: [f64; 5] = [0.3, 1.0, 2.5, 7.0, 9.0];
        let y: Vec<f64> = x.iter().map(|v| v.powi(3) + v.exp()).collect();
        assert_eq!(spearman(&x, &y).unwrap().r, 1.0);
        assert!(
            (spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0])
                .unwrap()
                .r
                - 0.8)
                .abs()
                < 1e-15
        );
        assert_eq!(average_ranks(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
        assert!((spearman(&[1.0, 1.0, 2.0], &[3.0, 3.0, 5.0]).unwrap().r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroVariance)
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0, 3.0], &[5.0; 3]),
            Err(Error::ZeroVariance)
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matrix_examples() {
        let p = [0.1, 0.5, 0.2, 0.9];
        let t = table(&[&p, &p, &[0.4, 0.1, 0.3, 0.2]]);
        let m = correlation_matrix(&t, CorrelationKind::Pearson).unwrap();
        assert_eq!(
            m.get(Method::P1, Method::P2).unwrap().cell().unwrap().r,
            1.0
        );
        assert_eq!(m.pairs().count(), 3);
        assert_eq!(
            m.get(Method::P1, Method::P1),
            Some(&CorrelationEntry::Diagonal)
        );
        assert_eq!(m.get(Method::P1, Method::P3), m.get(Method::P3, Method::P1));
    }

    #[test]
    fn constant_column_is_undefined() {
        let t = table(&[&[0.1, 0.5, 0.2], &[0.0, 0.0, 0.0], &[0.3, 0.1, 0.2]]);
        let m = correlation_matrix(&t, CorrelationKind::Spearman).unwrap();
        assert!(matches!(
            m.get(Method::P1, Method::P2),
            Some(CorrelationEntry::Undefined { .. })
        ));
        assert!(matches!(
            m.get(Method::P3, Method::P2),
            Some(CorrelationEntry::Undefined { .. })
        ));
        assert!(m.get(Method::P1, Method::P3).unwrap().cell().is_some());
        let two = table(&[&[0.1, 0.5], &[0.2, 0.3]]);
        assert!(correlation_matrix(&two, CorrelationKind::Pearson).is_err());
    }

    #[test]
    fn discordant_examples() {
        let t = table(&[&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]]);
        let d = discordant_pairs(&t, Method::P1, Method::P2).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].model_i.as_str(), d[0].model_j.as_str()), ("b", "c"));
        assert_eq!((d[0].delta_m1, d[0].delta_m2), (-1.0, 1.0));
        assert!(discordant_pairs(&t, Method::P1, Method::P1)
            .unwrap()
            .is_empty());
        let x = [0.3, 0.1, 0.7, 0.2, 0.9];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(
            discordant_pairs(&table(&[&x, &neg]), Method::P1, Method::P2)
                .unwrap()
                .len(),
            10
        );
        assert!(discordant_pairs(&t, Method::P1, Method::P4).is_err());
    }

    #[test]
    fn table_validation() {
        let ids = vec!["a".to_string(), "a".to_string()];
        assert!(ScoreTable::new("t", ids, vec![Method::P1], vec![vec![0.0], vec![1.0]]).is_err());
        assert!(ScoreTable::new(
            "t",
            vec!["a".into()],
            vec![Method::P1],
            vec![vec![0.0, 1.0]]
        )
        .is_err());
        assert!(ScoreTable::new(
            "t",
            vec!["a".into()],
            vec![Method::P1],
            vec![vec![f64::NAN]]
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn pearson_matches_integer_oracle(
            (x, y) in (3usize..13).prop_flat_map(|n| (
                prop::collection::vec(-50i64..50, n),
                prop::collection::vec(-50i64..50, n),
            ))
        ) {
            let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            match pearson(&xf, &yf) {
                Ok(c) => {
                    prop_assert!((c.r - integer_pearson(&x, &y)).abs() < 1e-12);
                    prop_assert_eq!(c.significant, c.p_value < 0.05);
                    prop_assert!((0.0..=1.0).contains(&c.p_value));
                    let swapped = pearson(&yf, &xf).unwrap();
                    prop_assert!((swapped.r - c.r).abs() < 1e-15);
                    let neg: Vec<f64> = yf.iter().map(|v| -v).collect();
                    prop_assert!((pearson(&xf, &neg).unwrap().r + c.r).abs() < 1e-15);
                    let affine: Vec<f64> = xf.iter().map(|v| 2.5 * v + 3.0).collect();
                    prop_assert!((pearson(&affine, &yf).unwrap().r - c.r).abs() < 1e-12);
                    let s = spearman(&xf, &yf).unwrap();
                    prop_assert_eq!(s, pearson(&average_ranks(&xf), &average_ranks(&yf)).unwrap());
                }
                Err(e) => {
                    prop_assert!(matches!(e, Error::ZeroVariance));
                    prop_assert!(x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]));
                }
            }
        }

        #[test]
        fn discordant_count_matches_inversions(
            perm in Just((0..10).map(f64::from).collect::<Vec<_>>()).prop_shuffle(),
            k in 2usize..11,
        ) {
            let c1: Vec<f64> = (0..k).map(|i| i as f64 * 0.3).collect();
            let mut c2: Vec<f64> = perm.into_iter().filter(|&v| v < k as f64).collect();
            c2.truncate(k);
            let t = table(&[&c1, &c2]);
            let d = discordant_pairs(&t, Method::P1, Method::P2).unwrap();
            prop_assert_eq!(d.len(), inversions(&c1, &c2));
            prop_assert!(d.iter().all(|p| p.delta_m1 * p.delta_m2 < 0.0));
        }
    }
}
