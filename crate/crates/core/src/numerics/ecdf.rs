use serde::Serialize;

use crate::{Error, Result};

/// A non-empty list of finite reals.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Sample1D(Vec<f64>);

impl Sample1D {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Fraction of the sample at or below `t`.
pub fn empirical_cdf(s: &Sample1D, t: f64) -> f64 {
    let count = s.values().iter().filter(|&&x| x <= t).count();
    count as f64 / s.len() as f64
}

/// Left-continuous generalized inverse of the ECDF: the smallest order
/// statistic whose ECDF value reaches `p`.
pub fn quantile(s: &Sample1D, p: f64) -> Result<f64> {
    quantile_sorted(&s.sorted(), p)
}

/// [`quantile`] on an already sorted, non-empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let n = sorted.len();
    // smallest k in 1..=n with k/n >= p, compared in the same arithmetic the
    // ECDF uses so rounding in p * n cannot skip an order statistic
    let mut k = ((p * n as f64).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / n as f64 >= p {
        k -= 1;
    }
    while k < n && (k as f64 / n as f64) < p {
        k += 1;
    }
    Ok(sorted[k - 1])
}

/// Two-sample Kolmogorov-Smirnov distance, exact over the merged support.
pub fn ks_distance(a: &Sample1D, b: &Sample1D) -> f64 {
    ks_distance_sorted(&a.sorted(), &b.sorted())
}

/// [`ks_distance`] on sorted slices. Returns 0 if either slice is empty.
pub fn ks_distance_sorted(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0.0f64;
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        let gap = (i as f64 / na - j as f64 / nb).abs();
        best = best.max(gap);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[f64]) -> Sample1D {
        Sample1D::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ecdf_examples() {
        let x = s(&[1.0, 2.0, 3.0]);
        assert_eq!(empirical_cdf(&x, 2.0), 2.0 / 3.0);
        assert_eq!(empirical_cdf(&x, 0.0), 0.0);
        assert_eq!(empirical_cdf(&x, 3.0), 1.0);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(Sample1D::new(vec![]), Err(Error::EmptySample)));
        assert!(Sample1D::new(vec![1.0, f64::NAN]).is_err());
        assert!(Sample1D::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(&s(&[1.0, 2.0, 3.0, 4.0]), 0.5).unwrap(), 2.0);
        assert_eq!(quantile(&s(&[5.0]), 0.99).unwrap(), 5.0);
        assert_eq!(quantile(&s(&[1.0, 2.0, 3.0, 4.0]), 1.0).unwrap(), 4.0);
        assert_eq!(quantile(&s(&[3.0, 1.0, 2.0]), 0.0).unwrap(), 1.0);
        let ten: Vec<f64> = (1..=10).map(f64::from).collect();
        // 0.3 * 10 rounds above 3 in binary floating point
        assert_eq!(quantile(&s(&ten), 0.3).unwrap(), 3.0);
    }

    #[test]
    fn quantile_rejects_bad_probability() {
        let x = s(&[1.0]);
        assert!(matches!(
            quantile(&x, -0.1),
            Err(Error::InvalidProbability(_))
        ));
        assert!(matches!(
            quantile(&x, 1.5),
            Err(Error::InvalidProbability(_))
        ));
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_distance(&s(&[0.1, 0.2, 0.3]), &s(&[0.1, 0.2, 0.3])), 0.0);
        assert_eq!(ks_distance(&s(&[0.0, 0.0]), &s(&[1.0, 1.0])), 1.0);
        assert_eq!(
            ks_distance(&s(&[1.0, 2.0, 3.0, 4.0]), &s(&[3.0, 4.0, 5.0, 6.0])),
            0.5
        );
    }

    /// Brute force: evaluate both ECDFs at every point of the pooled support.
    fn ks_oracle(a: &Sample1D, b: &Sample1D) -> f64 {
        a.values()
            .iter()
            .chain(b.values())
            .map(|&t| (empirical_cdf(a, t) - empirical_cdf(b, t)).abs())
            .fold(0.0, f64::max)
    }

    fn sample_strategy() -> impl Strategy<Value = Sample1D> {
        prop::collection::vec(-20i32..20, 1..30).prop_map(|v| {
            Sample1D::new(v.into_iter().map(|x| f64::from(x) * 0.5).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn ks_matches_oracle_and_is_symmetric(a in sample_strategy(), b in sample_strategy()) {
            let d = ks_distance(&a, &b);
            prop_assert_eq!(d, ks_oracle(&a, &b));
            prop_assert_eq!(d, ks_distance(&b, &a));
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(ks_distance(&a, &a), 0.0);
        }

        #[test]
        fn ks_invariant_under_increasing_map(a in sample_strategy(), b in sample_strategy()) {
            let f = |s: &Sample1D| Sample1D::new(s.values().iter().map(|x| x.powi(3) + 2.0 * x).collect()).unwrap();
            prop_assert_eq!(ks_distance(&a, &b), ks_distance(&f(&a), &f(&b)));
        }

        #[test]
        fn quantile_cdf_round_trip(a in sample_strategy(), idx in 0usize..30) {
            let x = a.values()[idx % a.len()];
            let q = quantile(&a, empirical_cdf(&a, x)).unwrap();
            prop_assert!(q <= x);
        }

        #[test]
        fn ecdf_monotone(a in sample_strategy(), t1 in -12.0f64..12.0, dt in 0.0f64..5.0) {
            prop_assert!(empirical_cdf(&a, t1) <= empirical_cdf(&a, t1 + dt));
        }
    }
}
