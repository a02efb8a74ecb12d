use std::cmp::Ordering;

use crate::zoo::PredictionSet;
use crate::{Error, Result};

/// Rows of one group: `(s, y)` sorted ascending, with the group's supplied id.
pub(crate) struct Group {
    pub id: usize,
    pub rows: Vec<(f64, f64)>,
}

impl Group {
    pub fn s(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.0).collect()
    }
}

fn cmp_rows(a: &[(f64, f64)], b: &[(f64, f64)], with_y: bool) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                if with_y {
                    x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1))
                } else {
                    x.0.total_cmp(&y.0)
                }
            })
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Splits rows by group and orders groups by size and content rather than id.
///
/// Groups that compare equal have identical content under the chosen key, so
/// their relative order cannot affect any score computed from that key.
pub(crate) fn canonical_groups(ps: &PredictionSet, with_y: bool) -> Vec<Group> {
    let ids = ps.groups();
    let mut groups: Vec<Group> = ids
        .iter()
        .map(|&id| {
            let mut rows: Vec<(f64, f64)> = ps
                .a()
                .iter()
                .zip(ps.s().iter().zip(ps.y()))
                .filter(|(a, _)| **a == id)
                .map(|(_, (s, y))| (*s, *y))
                .collect();
            rows.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
            Group { id, rows }
        })
        .collect();
    groups.sort_by(|a, b| cmp_rows(&a.rows, &b.rows, with_y));
    groups
}

pub(crate) fn check_groups(groups: &[Group]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::DegenerateLabels);
    }
    if groups.iter().any(|g| g.rows.len() < 2) {
        return Err(Error::InvalidArgument(
            "every group needs at least 2 predictions".into(),
        ));
    }
    Ok(())
}

pub(crate) fn is_constant(xs: impl IntoIterator<Item = f64>) -> bool {
    let mut it = xs.into_iter();
    match it.next() {
        Some(first) => it.all(|v| v == first),
        None => true,
    }
}
