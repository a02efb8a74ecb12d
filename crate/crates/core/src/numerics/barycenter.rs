use super::ecdf::{quantile_sorted, Sample1D};
use crate::{Error, Result};

/// Quantile-averaging W2 barycenter of one-dimensional distributions.
///
/// The barycenter is returned as `m` samples, `m` being the size of the largest
/// group, taken at the probability levels `(k - 0.5) / m`.
pub fn wasserstein_barycenter_1d(groups: &[Sample1D], weights: &[f64]) -> Result<Sample1D> {
    let sorted: Vec<Vec<f64>> = groups.iter().map(Sample1D::sorted).collect();
    let refs: Vec<&[f64]> = sorted.iter().map(Vec::as_slice).collect();
    barycenter_sorted(&refs, weights).and_then(Sample1D::new)
}

pub(crate) fn barycenter_sorted(groups: &[&[f64]], weights: &[f64]) -> Result<Vec<f64>> {
    if groups.is_empty() {
        return Err(Error::EmptySample);
    }
    if groups.len() != weights.len() {
        return Err(Error::WeightMismatch(format!(
            "{} groups but {} weights",
            groups.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::WeightMismatch("weights must lie in [0, 1]".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::WeightMismatch(format!("weights sum to {total}")));
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(Error::EmptySample);
    }
    let m = groups.iter().map(|g| g.len()).max().unwrap_or(0);
    let mut out = Vec::with_capacity(m);
    for k in 1..=m {
        let p = (k as f64 - 0.5) / m as f64;
        let anchor = quantile_sorted(groups[0], p)?;
        // written relative to the first group so equal quantiles reproduce exactly
        let mut value = anchor;
        for (g, w) in groups.iter().zip(weights).skip(1) {
            value += w * (quantile_sorted(g, p)? - anchor);
        }
        out.push(value);
    }
    for k in 1..out.len() {
        if out[k] < out[k - 1] {
            out[k] = out[k - 1];
        }
    }
    Ok(out)
}
