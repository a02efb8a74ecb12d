use super::canonical::{canonical_groups, check_groups, is_constant};
use super::parity::{hgr_from_groups, log_ratio_terms};
use super::{BinDiagnostic, Diagnostics, FairnessScore, Method};
use crate::numerics::{fit_with, predict_proba, quantile_sorted, BasisSpec, LogisticOptions};
use crate::zoo::PredictionSet;
use crate::{Error, Result};

/// Equal-mass bins of `Y` used by C2.
pub const C2_BINS: usize = 10;
/// Bins with fewer rows than this are dropped.
pub const C2_MIN_BIN_COUNT: usize = 20;

/// C1: plug-in conditional mutual information `I(S; A | Y)` from two classifiers.
pub fn c1_separation_density_ratio(ps: &PredictionSet) -> Result<FairnessScore> {
    let groups = canonical_groups(ps, true);
    check_groups(&groups)?;
    if is_constant(ps.s().iter().copied()) {
        return Ok(FairnessScore::degenerate(Method::C1));
    }
    let mut joint = Vec::with_capacity(ps.len());
    let mut target_only = Vec::with_capacity(ps.len());
    let mut labels = Vec::with_capacity(ps.len());
    for (k, g) in groups.iter().enumerate() {
        for &(s, y) in &g.rows {
            joint.push(vec![s, y]);
            target_only.push(vec![y]);
            labels.push(k);
        }
    }
    let opts = LogisticOptions::default();
    let full = fit_with(
        &joint,
        &labels,
        BasisSpec {
            degree: 3,
            pairwise_cross: true,
        },
        opts,
    )?;
    let reduced = fit_with(
        &target_only,
        &labels,
        BasisSpec {
            degree: 3,
            pairwise_cross: false,
        },
        opts,
    )?;
    let q_full: Vec<f64> = predict_proba(&full, &joint)?
        .iter()
        .zip(&labels)
        .map(|(p, &l)| p[l])
        .collect();
    let q_reduced: Vec<f64> = predict_proba(&reduced, &target_only)?
        .iter()
        .zip(&labels)
        .map(|(p, &l)| p[l])
        .collect();
    let (cmi, per) = log_ratio_terms(&q_full, &q_reduced, &labels, groups.len());
    let details = Diagnostics {
        per_group: groups.iter().map(|g| g.id).zip(per).collect(),
        ..Diagnostics::default()
    };
    Ok(FairnessScore::new(Method::C1, cmi.max(0.0), details))
}

/// Bin index of every row: bin `b` holds `y` in `(e_{b-1}, e_b]`, the edges being
/// the left-continuous quantiles at `b / bins`.
pub(crate) fn equal_mass_bins(y: &[f64], bins: usize) -> Vec<usize> {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..bins)
        .map(|b| quantile_sorted(&sorted, b as f64 / bins as f64).expect("non-empty, p in [0,1]"))
        .collect();
    y.iter()
        .map(|&v| edges.partition_point(|&e| e < v))
        .collect()
}

/// C2: mass-weighted HGR between predictions and group within equal-mass `Y` bins.
pub fn c2_equalized_odds_hgr(ps: &PredictionSet) -> Result<FairnessScore> {
    let all_groups = ps.groups();
    if all_groups.len() < 2 {
        return Err(Error::DegenerateLabels);
    }
    let bin_of = equal_mass_bins(ps.y(), C2_BINS);
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for b in 0..C2_BINS {
        let rows: Vec<usize> = (0..ps.len()).filter(|&i| bin_of[i] == b).collect();
        let sub = ps.subset(&rows);
        let ok =
            rows.len() >= C2_MIN_BIN_COUNT && sub.as_ref().is_ok_and(|s| s.groups() == all_groups);
        match sub {
            Ok(sub) if ok => kept.push((b, sub)),
            _ => dropped.push(b),
        }
    }
    if kept.is_empty() {
        return Err(Error::InsufficientConditionalSupport);
    }
    let total: usize = kept.iter().map(|(_, s)| s.len()).sum();
    let mut flags = Vec::new();
    let mut bins = Vec::with_capacity(kept.len());
    let mut score = 0.0;
    for (b, sub) in &kept {
        let groups = canonical_groups(sub, false);
        let raw: Vec<Vec<f64>> = groups.iter().map(|g| g.s()).collect();
        let hgr = match hgr_from_groups(&raw)? {
            Some(v) => v,
            None => {
                flags.push(format!("bin {b}: degenerate predictions"));
                0.0
            }
        };
        let weight = sub.len() as f64 / total as f64;
        score += weight * hgr;
        bins.push(BinDiagnostic {
            bin: *b,
            count: sub.len(),
            weight,
            hgr,
        });
    }
    let details = Diagnostics {
        flags,
        bins,
        dropped_bins: dropped,
        ..Diagnostics::default()
    };
    Ok(FairnessScore::new(
        Method::C2,
        score.clamp(0.0, 1.0),
        details,
    ))
}
