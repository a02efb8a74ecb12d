use crate::{Error, Result};

/// Singular values in descending order, by one-sided Jacobi rotations.
pub fn singular_values(m: &[Vec<f64>]) -> Result<Vec<f64>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidArgument("ragged matrix".into()));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    // Store the shorter dimension as columns; work column-major.
    let mut a: Vec<Vec<f64>> = if cols <= rows {
        (0..cols)
            .map(|j| m.iter().map(|r| r[j]).collect())
            .collect()
    } else {
        m.to_vec()
    };
    let n = a.len();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = a.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Second-largest singular value of a matrix with at least two rows and columns.
pub fn second_singular_value(m: &[Vec<f64>]) -> Result<f64> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least a 2x2 matrix, got {rows}x{cols}"
        )));
    }
    Ok(singular_values(m)?[1])
}
