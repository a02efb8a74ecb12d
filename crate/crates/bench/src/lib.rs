//! Input generators shared by the benchmarks.

use fairprobe::PredictionSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Two balanced groups, `s = y + shift * a + noise`.
pub fn prediction_set(n: usize, shift: f64, seed: u64) -> PredictionSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let s = (0..n)
        .map(|i| y[i] + shift * a[i] as f64 + rng.sample::<f64, _>(StandardNormal))
        .collect();
    PredictionSet::new("bench", s, y, a).expect("valid lengths")
}

pub fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn matrix(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect()
}
