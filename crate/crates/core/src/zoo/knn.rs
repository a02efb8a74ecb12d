use serde::Serialize;

use super::linear::Standardizer;

/// Brute-force k-nearest-neighbour regressor over standardized features.
#[derive(Clone, Debug, Serialize)]
pub struct Knn {
    pub k: usize,
    scaler: Standardizer,
    #[serde(skip)]
    points: Vec<Vec<f64>>,
    #[serde(skip)]
    targets: Vec<f64>,
}

impl Knn {
    pub fn fit(x: &[Vec<f64>], y: &[f64], k: usize) -> Self {
        let scaler = Standardizer::fit(x);
        Self {
            k: k.min(x.len()),
            points: scaler.apply(x),
            targets: y.to_vec(),
            scaler,
        }
    }

    /// Mean target of the `k` closest training rows; distance ties go to the lower row index.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let q = self.scaler.apply_row(row);
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (
                    p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
                    i,
                )
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        dist.sort_by(cmp);
        dist.iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_neighbour_returns_own_target() {
        let x: Vec<Vec<f64>> = (0..15)
            .map(|i| vec![i as f64, (i * i) as f64 % 7.0])
            .collect();
        let y: Vec<f64> = (0..15).map(|i| i as f64 * 1.5 - 2.0).collect();
        let m = Knn::fit(&x, &y, 1);
        for (row, t) in x.iter().zip(&y) {
            assert_eq!(m.predict_row(row), *t);
        }
    }

    #[test]
    fn k_equal_n_is_mean() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let m = Knn::fit(&x, &[1.0, 2.0, 3.0, 6.0], 10);
        assert_eq!(m.predict_row(&[100.0]), 3.0);
    }
}
