//! Deterministic numerical primitives shared by every estimator.

mod barycenter;
mod ecdf;
mod kde;
mod logistic;
mod svd;

pub(crate) use barycenter::barycenter_sorted;
pub use barycenter::wasserstein_barycenter_1d;
pub use ecdf::{
    empirical_cdf, ks_distance, ks_distance_sorted, quantile, quantile_sorted, Sample1D,
};
pub use kde::{gaussian_kde_mass, DensityGrid, KDE_GRID_POINTS};
pub use logistic::{
    fit_multinomial_logistic, fit_with, predict_proba, predict_proba_raw, BasisSpec,
    LogisticOptions, ProbabilisticClassifier, PROBABILITY_CLAMP,
};
pub use svd::{second_singular_value, singular_values};

/// Spacing of the lattice that standardized values are snapped to (2^-20).
///
/// Estimators that standardize their input snap the standardized values so the
/// result is bit-identical under positive affine maps of the raw input; the
/// rounding error of the standardization itself is far below this spacing.
pub const SNAP_LATTICE: f64 = 1.0 / (1u64 << 20) as f64;

pub(crate) fn snap(x: f64) -> f64 {
    (x / SNAP_LATTICE).round() * SNAP_LATTICE
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub(crate) fn std_dev(xs: &[f64], mean: f64) -> f64 {
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}
