//! Linear-family regressors: OLS, ridge, lasso and polynomial ridge.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::{Error, Result};

/// Column-wise standardization fitted on training rows.
#[derive(Clone, Debug, Serialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.apply_row(r)).collect()
    }
}

/// `y = intercept + coef · x`.
#[derive(Clone, Debug, Serialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

fn column_means(x: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d];
    for row in x {
        for (a, v) in m.iter_mut().zip(row) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|a| *a /= x.len() as f64);
    m
}

/// Minimizes `||y - b - Xw||² + alpha ||w||²` (intercept unpenalized).
///
/// Returns `None` if the regularized normal equations are not positive definite.
pub fn ridge(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Option<LinearModel> {
    let d = x.first().map_or(0, Vec::len);
    let x_mean = column_means(x, d);
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut centered = vec![0.0; d];
    for (row, &t) in x.iter().zip(y) {
        for (c, (v, m)) in centered.iter_mut().zip(row.iter().zip(&x_mean)) {
            *c = v - m;
        }
        let yc = t - y_mean;
        for i in 0..d {
            rhs[i] += centered[i] * yc;
            for j in 0..=i {
                gram[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
        gram[(i, i)] += alpha;
    }
    let w = gram.cholesky()?.solve(&rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let coef: Vec<f64> = w.iter().copied().collect();
    let intercept = y_mean - coef.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    Some(LinearModel { intercept, coef })
}

/// Ridge penalty used when ordinary least squares is singular.
pub const OLS_FALLBACK_L2: f64 = 1e-8;

/// Ordinary least squares; the flag is set when the ridge fallback was needed.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Result<(LinearModel, bool)> {
    if let Some(m) = ridge(x, y, 0.0) {
        return Ok((m, false));
    }
    ridge(x, y, OLS_FALLBACK_L2)
        .map(|m| (m, true))
        .ok_or_else(|| {
            Error::InvalidArgument("normal equations are singular even with fallback".into())
        })
}

/// Coordinate descent on `(1/2n)||y - b - Xw||² + alpha ||w||₁` over standardized columns.
pub fn lasso(x: &[Vec<f64>], y: &[f64], alpha: f64, max_sweeps: usize, tol: f64) -> LinearModel {
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    let nf = n as f64;
    let x_mean = column_means(x, d);
    let y_mean = y.iter().sum::<f64>() / nf;
    // column-major centered copy
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| x.iter().map(|r| r[j] - x_mean[j]).collect())
        .collect();
    let sq: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf)
        .collect();
    let mut w = vec![0.0; d];
    let mut resid: Vec<f64> = y.iter().map(|t| t - y_mean).collect();
    for _ in 0..max_sweeps {
        let mut max_delta = 0.0f64;
        for j in 0..d {
            if sq[j] <= 0.0 {
                continue;
            }
            let rho =
                cols[j].iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / nf + sq[j] * w[j];
            let new = soft_threshold(rho, alpha) / sq[j];
            let delta = new - w[j];
            if delta != 0.0 {
                for (r, a) in resid.iter_mut().zip(&cols[j]) {
                    *r -= delta * a;
                }
                w[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < tol {
            break;
        }
    }
    let intercept = y_mean - w.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    LinearModel { intercept, coef: w }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Interactions are only generated up to this many raw inputs.
pub const POLY_MAX_INTERACTION_INPUTS: usize = 20;

/// Powers `x_j^1..x_j^degree` of every input, plus pairwise products for
/// degree ≥ 2 when there are at most [`POLY_MAX_INTERACTION_INPUTS`] inputs.
pub fn poly_expand(row: &[f64], degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(row.len() * degree);
    for &v in row {
        let mut p = 1.0;
        for _ in 0..degree {
            p *= v;
            out.push(p);
        }
    }
    if degree >= 2 && row.len() <= POLY_MAX_INTERACTION_INPUTS {
        for i in 0..row.len() {
            for j in i + 1..row.len() {
                out.push(row[i] * row[j]);
            }
        }
    }
    out
}
