use std::cmp::Ordering;

use serde::Serialize;

use crate::{Error, Result};

/// Probabilities entering log ratios are clamped to `[ε, 1 - ε]`.
pub const PROBABILITY_CLAMP: f64 = 1e-6;

/// Polynomial basis over standardized raw inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BasisSpec {
    /// Monomials `z, z^2, ..., z^degree` of every raw input.
    pub degree: usize,
    /// Adds the products `z_i * z_j` for every pair of raw inputs.
    pub pairwise_cross: bool,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self {
            degree: 3,
            pairwise_cross: false,
        }
    }
}

impl BasisSpec {
    fn len(&self, arity: usize) -> usize {
        let cross = if self.pairwise_cross {
            arity * arity.saturating_sub(1) / 2
        } else {
            0
        };
        arity * self.degree + cross
    }

    fn expand(&self, z: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for &v in z {
            let mut p = 1.0;
            for _ in 0..self.degree {
                p *= v;
                out.push(p);
            }
        }
        if self.pairwise_cross {
            for i in 0..z.len() {
                for j in i + 1..z.len() {
                    out.push(z[i] * z[j]);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogisticOptions {
    pub l2: f64,
    pub learning_rate: f64,
    pub max_iter: usize,
    /// Stop once the gradient's infinity norm drops below this.
    pub tol: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            learning_rate: 0.1,
            max_iter: 2000,
            tol: 1e-8,
        }
    }
}

/// Multinomial logistic model `q(class | x)` over a standardized polynomial basis.
#[derive(Clone, Debug, Serialize)]
pub struct ProbabilisticClassifier {
    /// `weights[class]` = intercept followed by one weight per basis column.
    pub weights: Vec<Vec<f64>>,
    pub class_labels: Vec<usize>,
    pub basis: BasisSpec,
    pub raw_mean: Vec<f64>,
    pub raw_std: Vec<f64>,
    pub basis_mean: Vec<f64>,
    pub basis_std: Vec<f64>,
    pub iterations: usize,
}

impl ProbabilisticClassifier {
    pub fn arity(&self) -> usize {
        self.raw_mean.len()
    }

    fn design_row(&self, x: &[f64], scratch: &mut Vec<f64>) {
        let z: Vec<f64> = x
            .iter()
            .zip(self.raw_mean.iter().zip(&self.raw_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        self.basis.expand(&z, scratch);
        for (v, (m, s)) in scratch
            .iter_mut()
            .zip(self.basis_mean.iter().zip(&self.basis_std))
        {
            *v = (*v - m) / s;
        }
    }

    fn softmax_into(&self, phi: &[f64], out: &mut [f64]) {
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o = w[0] + w[1..].iter().zip(phi).map(|(a, b)| a * b).sum::<f64>();
        }
        softmax_in_place(out);
    }
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
}

fn column_stats(rows: &[Vec<f64>], width: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; width];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; width];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m).powi(2);
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 1e-12 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Fits with the default cubic basis and optimizer settings, overriding the L2 weight.
pub fn fit_multinomial_logistic(
    features: &[Vec<f64>],
    labels: &[usize],
    l2: f64,
) -> Result<ProbabilisticClassifier> {
    let opts = LogisticOptions {
        l2,
        ..LogisticOptions::default()
    };
    fit_with(features, labels, BasisSpec::default(), opts)
}

/// Full-batch gradient descent on the L2-regularized mean cross-entropy.
///
/// Rows are processed in a canonical (label, features) order, so the fitted
/// weights do not depend on the order rows are supplied in.
pub fn fit_with(
    features: &[Vec<f64>],
    labels: &[usize],
    basis: BasisSpec,
    opts: LogisticOptions,
) -> Result<ProbabilisticClassifier> {
    if features.is_empty() {
        return Err(Error::EmptySample);
    }
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    let arity = features[0].len();
    if arity == 0 {
        return Err(Error::InvalidArgument(
            "classifier needs at least one feature".into(),
        ));
    }
    for row in features {
        if row.len() != arity {
            return Err(Error::DimensionMismatch {
                expected: arity,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("classifier features"));
        }
    }
    if !(opts.l2 >= 0.0) || !(opts.learning_rate > 0.0) {
        return Err(Error::InvalidArgument(
            "l2 must be >= 0 and learning rate > 0".into(),
        ));
    }
    let mut class_labels: Vec<usize> = labels.to_vec();
    class_labels.sort_unstable();
    class_labels.dedup();
    if class_labels.len() < 2 {
        return Err(Error::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&i, &j| {
        labels[i]
            .cmp(&labels[j])
            .then_with(|| lexicographic(&features[i], &features[j]))
    });
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| features[i].clone()).collect();
    let targets: Vec<usize> = order
        .iter()
        .map(|&i| {
            class_labels
                .binary_search(&labels[i])
                .expect("label present")
        })
        .collect();

    let (raw_mean, raw_std) = column_stats(&rows, arity);
    let width = basis.len(arity);
    let mut clf = ProbabilisticClassifier {
        weights: vec![vec![0.0; width + 1]; class_labels.len()],
        class_labels,
        basis,
        raw_mean,
        raw_std,
        basis_mean: vec![0.0; width],
        basis_std: vec![1.0; width],
        iterations: 0,
    };
    let mut scratch = Vec::with_capacity(width);
    let raw_basis: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            clf.design_row(r, &mut scratch);
            scratch.clone()
        })
        .collect();
    let (basis_mean, basis_std) = column_stats(&raw_basis, width);
    let design: Vec<Vec<f64>> = raw_basis
        .into_iter()
        .map(|mut r| {
            for (v, (m, s)) in r.iter_mut().zip(basis_mean.iter().zip(&basis_std)) {
                *v = (*v - m) / s;
            }
            r
        })
        .collect();
    clf.basis_mean = basis_mean;
    clf.basis_std = basis_std;

    let k = clf.class_labels.len();
    let n = design.len() as f64;
    let mut probs = vec![0.0; k];
    let mut grad = vec![vec![0.0; width + 1]; k];
    for iter in 0..opts.max_iter {
        grad.iter_mut()
            .for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
        for (phi, &t) in design.iter().zip(&targets) {
            clf.softmax_into(phi, &mut probs);
            for (c, g) in grad.iter_mut().enumerate() {
                let r = probs[c] - if c == t { 1.0 } else { 0.0 };
                g[0] += r;
                for (gv, f) in g[1..].iter_mut().zip(phi) {
                    *gv += r * f;
                }
            }
        }
        let mut norm = 0.0f64;
        for (g, w) in grad.iter_mut().zip(&clf.weights) {
            g[0] /= n;
            norm = norm.max(g[0].abs());
            for (gv, wv) in g[1..].iter_mut().zip(&w[1..]) {
                *gv = *gv / n + opts.l2 * wv;
                norm = norm.max(gv.abs());
            }
        }
        clf.iterations = iter;
        if norm < opts.tol {
            break;
        }
        for (w, g) in clf.weights.iter_mut().zip(&grad) {
            for (wv, gv) in w.iter_mut().zip(g) {
                *wv -= opts.learning_rate * gv;
            }
        }
        clf.iterations = iter + 1;
    }
    Ok(clf)
}

/// Softmax class probabilities, columns ordered as `clf.class_labels`.
pub fn predict_proba_raw(
    clf: &ProbabilisticClassifier,
    features: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let k = clf.class_labels.len();
    let mut scratch = Vec::new();
    features
        .iter()
        .map(|x| {
            if x.len() != clf.arity() {
                return Err(Error::DimensionMismatch {
                    expected: clf.arity(),
                    got: x.len(),
                });
            }
            clf.design_row(x, &mut scratch);
            let mut p = vec![0.0; k];
            clf.softmax_into(&scratch, &mut p);
            Ok(p)
        })
        .collect()
}

/// [`predict_proba_raw`] clamped to `[PROBABILITY_CLAMP, 1 - PROBABILITY_CLAMP]`.
pub fn predict_proba(
    clf: &ProbabilisticClassifier,
    features: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let mut p = predict_proba_raw(clf, features)?;
    for v in p.iter_mut().flatten() {
        *v = clamp_probability(*v);
    }
    Ok(p)
}

pub(crate) fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
}
