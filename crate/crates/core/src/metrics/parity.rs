use super::canonical::{canonical_groups, check_groups, is_constant};
use super::{Diagnostics, FairnessScore, Method};
use crate::numerics::{
    barycenter_sorted, fit_with, gaussian_kde_mass, ks_distance_sorted, predict_proba,
    second_singular_value, snap, BasisSpec, LogisticOptions, Sample1D, KDE_GRID_POINTS,
};
use crate::zoo::PredictionSet;
use crate::{Error, Result};

/// Number of thresholds in the P1 grid, spanning the prediction range.
pub const P1_THRESHOLDS: usize = 101;

/// Maps predictions onto `[0, 1]` by the pooled range, snapped to the shared lattice.
fn range_normalized(groups: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let (lo, hi) = groups
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(hi > lo) {
        return None;
    }
    let width = hi - lo;
    Some(
        groups
            .iter()
            .map(|g| {
                let mut u: Vec<f64> = g.iter().map(|v| snap((v - lo) / width)).collect();
                u.sort_by(f64::total_cmp);
                u
            })
            .collect(),
    )
}

fn count_at_most(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&v| v <= t)
}

/// P1: demographic parity via reduction to classification over a threshold grid.
pub fn p1_reduction_dp(ps: &PredictionSet) -> Result<FairnessScore> {
    let groups = canonical_groups(ps, false);
    check_groups(&groups)?;
    let raw: Vec<Vec<f64>> = groups.iter().map(|g| g.s()).collect();
    let Some(u) = range_normalized(&raw) else {
        return Ok(FairnessScore::degenerate(Method::P1));
    };
    let mut pooled: Vec<f64> = u.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let n = pooled.len() as f64;

    let mut per_group = vec![0.0f64; u.len()];
    let (mut best, mut at) = (0.0f64, 0.0);
    for g in 0..P1_THRESHOLDS {
        let z = g as f64 / (P1_THRESHOLDS - 1) as f64;
        let overall = count_at_most(&pooled, z) as f64 / n;
        for (k, grp) in u.iter().enumerate() {
            let gap = (count_at_most(grp, z) as f64 / grp.len() as f64 - overall).abs();
            per_group[k] = per_group[k].max(gap);
            if gap > best {
                best = gap;
                at = z;
            }
        }
    }
    let details = Diagnostics {
        per_group: groups.iter().map(|g| g.id).zip(per_group).collect(),
        threshold: Some(at),
        ..Diagnostics::default()
    };
    Ok(FairnessScore::new(
        Method::P1,
        best.clamp(0.0, 1.0),
        details,
    ))
}

/// P2: frequency-weighted KS distance from each group to the W2 barycenter.
pub fn p2_wasserstein_ks(ps: &PredictionSet) -> Result<FairnessScore> {
    let groups = canonical_groups(ps, false);
    check_groups(&groups)?;
    let raw: Vec<Vec<f64>> = groups.iter().map(|g| g.s()).collect();
    let Some(u) = range_normalized(&raw) else {
        return Ok(FairnessScore::degenerate(Method::P2));
    };
    let n = ps.len() as f64;
    let weights: Vec<f64> = u.iter().map(|g| g.len() as f64 / n).collect();
    let refs: Vec<&[f64]> = u.iter().map(Vec::as_slice).collect();
    let bary = barycenter_sorted(&refs, &weights)?;
    let mut total = 0.0;
    let mut per_group = Vec::with_capacity(u.len());
    for ((g, w), grp) in u.iter().zip(&weights).zip(&groups) {
        let d = ks_distance_sorted(g, &bary);
        total += w * d;
        per_group.push((grp.id, d));
    }
    let details = Diagnostics {
        per_group,
        ..Diagnostics::default()
    };
    Ok(FairnessScore::new(
        Method::P2,
        total.clamp(0.0, 1.0),
        details,
    ))
}

/// Discretized HGR maximal correlation between a real variable and the group label.
///
/// `groups[k]` holds the values of group `k`. Returns `None` when the pooled
/// values are constant.
pub fn hgr_from_groups(groups: &[Vec<f64>]) -> Result<Option<f64>> {
    let n: usize = groups.iter().map(Vec::len).sum();
    let weights: Vec<f64> = groups.iter().map(|g| g.len() as f64 / n as f64).collect();
    let samples = groups
        .iter()
        .map(|g| Sample1D::new(g.clone()))
        .collect::<Result<Vec<_>>>()?;
    let grid = match gaussian_kde_mass(&samples, &weights, KDE_GRID_POINTS) {
        Ok(g) => g,
        Err(Error::DegenerateSample) => return Ok(None),
        Err(e) => return Err(e),
    };
    let rows = grid.row_mass();
    let cols = grid.col_mass();
    let q: Vec<Vec<f64>> = grid
        .cell_mass
        .iter()
        .zip(&rows)
        .map(|(r, &rm)| {
            r.iter()
                .zip(&cols)
                .map(|(&m, &cm)| {
                    if rm > 0.0 && cm > 0.0 {
                        m / (rm * cm).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(Some(second_singular_value(&q)?.clamp(0.0, 1.0)))
}

/// P3: HGR maximal correlation between predictions and group.
pub fn p3_hgr(ps: &PredictionSet) -> Result<FairnessScore> {
    let groups = canonical_groups(ps, false);
    check_groups(&groups)?;
    let raw: Vec<Vec<f64>> = groups.iter().map(|g| g.s()).collect();
    match hgr_from_groups(&raw)? {
        Some(v) => Ok(FairnessScore::new(Method::P3, v, Diagnostics::default())),
        None => Ok(FairnessScore::degenerate(Method::P3)),
    }
}

/// Mean of `log(q_i / prior_i)` accumulated per canonical group.
pub(crate) fn log_ratio_terms(
    numerator: &[f64],
    denominator: &[f64],
    labels: &[usize],
    k: usize,
) -> (f64, Vec<f64>) {
    let mut per = vec![0.0; k];
    let mut counts = vec![0usize; k];
    let mut total = 0.0;
    for ((q, p), &l) in numerator.iter().zip(denominator).zip(labels) {
        let term = (q / p).ln();
        total += term;
        per[l] += term;
        counts[l] += 1;
    }
    for (v, c) in per.iter_mut().zip(&counts) {
        *v /= (*c).max(1) as f64;
    }
    (total / labels.len() as f64, per)
}

/// P4: plug-in mutual information `I(S; A)` from a probabilistic classifier.
pub fn p4_density_ratio_mi(ps: &PredictionSet) -> Result<FairnessScore> {
    let groups = canonical_groups(ps, false);
    check_groups(&groups)?;
    if is_constant(ps.s().iter().copied()) {
        return Ok(FairnessScore::degenerate(Method::P4));
    }
    let mut feats = Vec::with_capacity(ps.len());
    let mut labels = Vec::with_capacity(ps.len());
    for (k, g) in groups.iter().enumerate() {
        for r in &g.rows {
            feats.push(vec![r.0]);
            labels.push(k);
        }
    }
    let clf = fit_with(
        &feats,
        &labels,
        BasisSpec {
            degree: 3,
            pairwise_cross: false,
        },
        LogisticOptions::default(),
    )?;
    let probs = predict_proba(&clf, &feats)?;
    let n = labels.len() as f64;
    let q: Vec<f64> = probs.iter().zip(&labels).map(|(p, &l)| p[l]).collect();
    let prior: Vec<f64> = labels
        .iter()
        .map(|&l| groups[l].rows.len() as f64 / n)
        .collect();
    let (mi, per) = log_ratio_terms(&q, &prior, &labels, groups.len());
    let details = Diagnostics {
        per_group: groups.iter().map(|g| g.id).zip(per).collect(),
        ..Diagnostics::default()
    };
    Ok(FairnessScore::new(Method::P4, mi.max(0.0), details))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ks_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ps(s: Vec<f64>, a: Vec<usize>) -> PredictionSet {
        let y = vec![0.0; s.len()];
        PredictionSet::new("m", s, y, a).unwrap()
    }

    fn independent(n: usize, seed: u64) -> PredictionSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
        ps(s, (0..2 * n).map(|i| i % 2).collect())
    }

    fn perfect(n: usize) -> PredictionSet {
        let a: Vec<usize> = (0..n).map(|i| i % 2).collect();
        ps(a.iter().map(|&g| g as f64).collect(), a)
    }

    fn identical_groups() -> PredictionSet {
        let base: Vec<f64> = (0..50).map(|i| (i as f64 * 0.91).sin()).collect();
        let s: Vec<f64> = base.iter().chain(&base).copied().collect();
        ps(s, (0..100).map(|i| i / 50).collect())
    }

    #[test]
    fn p1_examples() {
        assert_eq!(p1_reduction_dp(&identical_groups()).unwrap().value, 0.0);
        let step = ps(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(p1_reduction_dp(&step).unwrap().value, 0.5);
        assert!(p1_reduction_dp(&independent(5000, 1)).unwrap().value < 0.05);
    }

    #[test]
    fn p1_bounded_by_group_ks_to_pooled() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<usize> = (0..300).map(|i| i % 3).collect();
        let s: Vec<f64> = a
            .iter()
            .map(|&g| g as f64 * 0.3 + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let p1 = p1_reduction_dp(&ps(s.clone(), a.clone())).unwrap().value;
        let pooled = Sample1D::new(s.clone()).unwrap();
        let max_ks = (0..3)
            .map(|g| {
                let grp: Vec<f64> = s
                    .iter()
                    .zip(&a)
                    .filter(|p| *p.1 == g)
                    .map(|p| *p.0)
                    .collect();
                ks_distance(&Sample1D::new(grp).unwrap(), &pooled)
            })
            .fold(0.0, f64::max);
        assert!(p1 > 0.0 && p1 <= max_ks + 1e-12, "{p1} vs {max_ks}");
    }

    #[test]
    fn constant_predictions_are_degenerate() {
        let c = ps(vec![2.0; 10], (0..10).map(|i| i % 2).collect());
        for f in [
            p1_reduction_dp,
            p2_wasserstein_ks,
            p3_hgr,
            p4_density_ratio_mi,
        ] {
            let sc = f(&c).unwrap();
            assert_eq!(sc.value, 0.0);
            assert!(sc.is_degenerate());
        }
    }

    #[test]
    fn requires_two_groups_of_two() {
        let one = ps(vec![1.0, 2.0, 3.0], vec![0, 0, 0]);
        assert!(p1_reduction_dp(&one).is_err());
        let thin = ps(vec![1.0, 2.0, 3.0], vec![0, 0, 1]);
        assert!(p2_wasserstein_ks(&thin).is_err());
    }

    #[test]
    fn p2_examples() {
        assert_eq!(p2_wasserstein_ks(&identical_groups()).unwrap().value, 0.0);
        let split = ps(vec![0.0, 0.0, 1.0, 1.0], vec![0, 0, 1, 1]);
        assert_eq!(p2_wasserstein_ks(&split).unwrap().value, 1.0);
        assert!(p2_wasserstein_ks(&independent(5000, 2)).unwrap().value < 0.05);
    }

    #[test]
    fn p3_examples() {
        assert!(p3_hgr(&independent(2500, 3)).unwrap().value < 0.1);
        assert!(p3_hgr(&perfect(5000)).unwrap().value > 0.95);
        let base = independent(300, 4);
        let a = base.a().to_vec();
        let mapped = ps(base.s().iter().map(|v| 2.0 * v + 7.0).collect(), a);
        assert_eq!(p3_hgr(&base).unwrap().value, p3_hgr(&mapped).unwrap().value);
    }

    #[test]
    fn p4_examples() {
        assert!(p4_density_ratio_mi(&independent(2500, 6)).unwrap().value < 0.02);
        let v = p4_density_ratio_mi(&perfect(5000)).unwrap().value;
        assert!((v - std::f64::consts::LN_2).abs() < 0.05, "{v}");
    }
}
