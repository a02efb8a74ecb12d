use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::linear::Standardizer;

/// One tanh hidden layer, linear output, trained by full-batch gradient descent
/// on mean squared error against the standardized target.
#[derive(Clone, Debug, Serialize)]
pub struct Mlp {
    scaler: Standardizer,
    y_mean: f64,
    y_std: f64,
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl Mlp {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        hidden: usize,
        learning_rate: f64,
        iterations: usize,
        seed: u64,
    ) -> Self {
        let scaler = Standardizer::fit(x);
        let xs = scaler.apply(x);
        let n = y.len() as f64;
        let y_mean = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|t| (t - y_mean).powi(2)).sum::<f64>() / n).sqrt();
        let y_std = if sd > 1e-12 { sd } else { 1.0 };
        let ys: Vec<f64> = y.iter().map(|t| (t - y_mean) / y_std).collect();

        let d = xs.first().map_or(0, Vec::len);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l1 = (6.0 / (d + hidden) as f64).sqrt();
        let l2 = (6.0 / (hidden + 1) as f64).sqrt();
        let mut m = Mlp {
            scaler,
            y_mean,
            y_std,
            w1: (0..hidden)
                .map(|_| (0..d).map(|_| rng.random_range(-l1..l1)).collect())
                .collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| rng.random_range(-l2..l2)).collect(),
            b2: 0.0,
        };

        let mut h = vec![0.0; hidden];
        let mut g_w1 = vec![vec![0.0; d]; hidden];
        let mut g_b1 = vec![0.0; hidden];
        let mut g_w2 = vec![0.0; hidden];
        for _ in 0..iterations {
            g_w1.iter_mut().flatten().for_each(|v| *v = 0.0);
            g_b1.iter_mut().for_each(|v| *v = 0.0);
            g_w2.iter_mut().for_each(|v| *v = 0.0);
            let mut g_b2 = 0.0;
            for (row, t) in xs.iter().zip(&ys) {
                let out = m.forward(row, &mut h);
                let delta = (out - t) / n;
                g_b2 += delta;
                for j in 0..hidden {
                    g_w2[j] += delta * h[j];
                    let gh = delta * m.w2[j] * (1.0 - h[j] * h[j]);
                    g_b1[j] += gh;
                    for (g, v) in g_w1[j].iter_mut().zip(row) {
                        *g += gh * v;
                    }
                }
            }
            for j in 0..hidden {
                m.w2[j] -= learning_rate * g_w2[j];
                m.b1[j] -= learning_rate * g_b1[j];
                for (w, g) in m.w1[j].iter_mut().zip(&g_w1[j]) {
                    *w -= learning_rate * g;
                }
            }
            m.b2 -= learning_rate * g_b2;
        }
        m
    }

    fn forward(&self, xs: &[f64], h: &mut [f64]) -> f64 {
        let mut out = self.b2;
        for (j, hj) in h.iter_mut().enumerate() {
            let a = self.b1[j] + self.w1[j].iter().zip(xs).map(|(w, v)| w * v).sum::<f64>();
            *hj = tanh(a);
            out += self.w2[j] * *hj;
        }
        out
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut h = vec![0.0; self.b1.len()];
        self.y_mean + self.y_std * self.forward(&self.scaler.apply_row(row), &mut h)
    }
}

/// `tanh` through a single `exp`; within a few ulp of `f64::tanh` and cheaper.
fn tanh(a: f64) -> f64 {
    if a.abs() > 20.0 {
        return a.signum();
    }
    let e = (2.0 * a).exp();
    (e - 1.0) / (e + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_tanh_matches_std() {
        for i in -4000..=4000 {
            let a = i as f64 / 100.0;
            assert!((tanh(a) - a.tanh()).abs() < 1e-14, "{a}");
        }
    }

    #[test]
    fn learns_a_line() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 10.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0] - 1.0).collect();
        let m = Mlp::fit(&x, &y, 8, 0.1, 2000, 1);
        let err: f64 = x
            .iter()
            .zip(&y)
            .map(|(r, t)| (m.predict_row(r) - t).powi(2))
            .sum::<f64>()
            / 50.0;
        let var: f64 = y.iter().map(|t| (t - 6.35).powi(2)).sum::<f64>() / 50.0;
        assert!(err < 0.05 * var, "mse {err} vs var {var}");
    }
}
