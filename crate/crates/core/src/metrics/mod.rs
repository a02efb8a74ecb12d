//! Disparity estimators for regression predictions.
//!
//! Every estimator returns a non-negative [`FairnessScore`] where 0 means no
//! measured disparity. The parity estimators (P1-P4) measure dependence of the
//! predictions `S` on the protected attribute `A`; the separation estimators
//! (C1, C2) measure that dependence conditional on the target `Y`.
//!
//! Inputs are canonicalized before any floating-point work: rows are sorted
//! within each group and groups are ordered by a label-free key. Scores are
//! therefore bit-identical under row permutation and group relabeling.

mod canonical;
mod cmb;
mod parity;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::zoo::PredictionSet;
use crate::{Error, Result};

pub use cmb::{c1_separation_density_ratio, c2_equalized_odds_hgr, C2_BINS, C2_MIN_BIN_COUNT};
pub use parity::{
    hgr_from_groups, p1_reduction_dp, p2_wasserstein_ks, p3_hgr, p4_density_ratio_mi, P1_THRESHOLDS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Method {
    P1,
    P2,
    P3,
    P4,
    C1,
    C2,
}

/// Which fairness notion a method approximates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFamily {
    /// `S ⊥ A`
    Parity,
    /// `S ⊥ A | Y`
    Separation,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::P1,
        Method::P2,
        Method::P3,
        Method::P4,
        Method::C1,
        Method::C2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::P1 => "P1",
            Method::P2 => "P2",
            Method::P3 => "P3",
            Method::P4 => "P4",
            Method::C1 => "C1",
            Method::C2 => "C2",
        }
    }

    pub fn family(&self) -> MetricFamily {
        match self {
            Method::P1 | Method::P2 | Method::P3 | Method::P4 => MetricFamily::Parity,
            Method::C1 | Method::C2 => MetricFamily::Separation,
        }
    }

    /// Whether the score is bounded above by one.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, Method::P4 | Method::C1)
    }

    /// Versioned description of the exact estimator computed for this method.
    pub fn instantiation(&self) -> &'static str {
        match self {
            Method::P1 => "P1 reduction-dp/1: max over groups and 101 range-anchored thresholds of |P(S<=z|A=a) - P(S<=z)|",
            Method::P2 => "P2 barycenter-ks/1: frequency-weighted KS distance of each group to the 1-D W2 barycenter (quantile averaging, m = largest group)",
            Method::P3 => "P3 hgr-kde/1: second singular value of the normalized (group x 64-cell) Gaussian-KDE joint mass, Silverman bandwidth",
            Method::P4 => "P4 density-ratio-mi/1: plug-in I(S;A) in nats, max(0, mean log q(a|s)/p(a)), q multinomial logistic on cubic basis of s",
            Method::C1 => "C1 separation-density-ratio-cmi/1: plug-in I(S;A|Y) in nats, max(0, mean log q(a|s,y)/q(a|y)), cubic bases with s*y cross term",
            Method::C2 => "C2 equalized-odds-hgr/1: mass-weighted P3 estimator within 10 equal-mass Y bins (>= 20 rows, all groups present)",
        }
    }

    /// Parses a comma-separated list such as `P1,P2,C2`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let m: Method = tok.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::UnknownMethod(s.to_string()));
        }
        out.sort();
        Ok(out)
    }
}

/// Classifier behind the density-ratio estimators (P4, C1).
pub const DENSITY_RATIO_CLASSIFIER: &str = "multinomial logistic regression on a standardized polynomial basis, \
full-batch gradient descent (lr 0.1, <= 2000 iterations, l2 1e-3), probabilities clamped to [1e-6, 1-1e-6]; \
chosen by this implementation";

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Per-bin accounting for C2.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinDiagnostic {
    pub bin: usize,
    pub count: usize,
    pub weight: f64,
    pub hgr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    /// Group id (as supplied) and that group's term of the score.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_group: Vec<(usize, f64)>,
    /// Normalized threshold (P1) at which the maximum gap occurs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bins: Vec<BinDiagnostic>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dropped_bins: Vec<usize>,
}

pub const DEGENERATE_PREDICTIONS: &str = "degenerate predictions";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FairnessScore {
    pub method: Method,
    pub value: f64,
    pub details: Diagnostics,
}

impl FairnessScore {
    pub(crate) fn new(method: Method, value: f64, details: Diagnostics) -> Self {
        debug_assert!(
            value >= 0.0 && (!method.is_bounded() || value <= 1.0),
            "{method}: {value}"
        );
        Self {
            method,
            value,
            details,
        }
    }

    pub(crate) fn degenerate(method: Method) -> Self {
        Self {
            method,
            value: 0.0,
            details: Diagnostics {
                flags: vec![DEGENERATE_PREDICTIONS.into()],
                ..Diagnostics::default()
            },
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.details
            .flags
            .iter()
            .any(|f| f == DEGENERATE_PREDICTIONS)
    }
}

/// Computes one method on a prediction set.
pub fn compute(method: Method, ps: &PredictionSet) -> Result<FairnessScore> {
    match method {
        Method::P1 => p1_reduction_dp(ps),
        Method::P2 => p2_wasserstein_ks(ps),
        Method::P3 => p3_hgr(ps),
        Method::P4 => p4_density_ratio_mi(ps),
        Method::C1 => c1_separation_density_ratio(ps),
        Method::C2 => c2_equalized_odds_hgr(ps),
    }
}
