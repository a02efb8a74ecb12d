use serde::Serialize;

use super::ecdf::Sample1D;
use super::{mean, snap, std_dev};
use crate::{Error, Result};

/// Grid resolution used by the HGR estimators.
pub const KDE_GRID_POINTS: usize = 64;

/// Joint (group, grid cell) probability mass from per-group kernel density estimates.
#[derive(Clone, Debug, Serialize)]
pub struct DensityGrid {
    pub grid_points: Vec<f64>,
    /// `cell_mass[group][cell]`, summing to one overall.
    pub cell_mass: Vec<Vec<f64>>,
}

impl DensityGrid {
    pub fn row_mass(&self) -> Vec<f64> {
        self.cell_mass.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_mass(&self) -> Vec<f64> {
        let mut cols = vec![0.0; self.grid_points.len()];
        for row in &self.cell_mass {
            for (c, m) in cols.iter_mut().zip(row) {
                *c += m;
            }
        }
        cols
    }

    pub fn total_mass(&self) -> f64 {
        self.cell_mass.iter().flatten().sum()
    }
}

/// Silverman bandwidth on the standardized pooled scale for a group of `n` points.
fn silverman(n: usize) -> f64 {
    1.06 * (n as f64).powf(-0.2)
}

/// Discretizes per-group Gaussian KDEs of the pooled-standardized samples onto
/// `n_grid` equally spaced points covering `[min - 3h, max + 3h]`.
pub fn gaussian_kde_mass(
    samples_per_group: &[Sample1D],
    group_weights: &[f64],
    n_grid: usize,
) -> Result<DensityGrid> {
    if samples_per_group.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples_per_group.len() != group_weights.len() {
        return Err(Error::WeightMismatch(format!(
            "{} groups but {} weights",
            samples_per_group.len(),
            group_weights.len()
        )));
    }
    if n_grid < 8 {
        return Err(Error::InvalidArgument(format!(
            "n_grid must be >= 8, got {n_grid}"
        )));
    }
    let pooled: Vec<f64> = samples_per_group
        .iter()
        .flat_map(|g| g.values().iter().copied())
        .collect();
    let mu = mean(&pooled);
    let sd = std_dev(&pooled, mu);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateSample);
    }
    let standardized: Vec<Vec<f64>> = samples_per_group
        .iter()
        .map(|g| g.values().iter().map(|x| snap((x - mu) / sd)).collect())
        .collect();

    let (lo_z, hi_z) = standardized
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| {
            (lo.min(z), hi.max(z))
        });
    if lo_z == hi_z {
        return Err(Error::DegenerateSample);
    }
    let bandwidths: Vec<f64> = standardized.iter().map(|g| silverman(g.len())).collect();
    let h_max = bandwidths.iter().cloned().fold(0.0, f64::max);
    let lo = lo_z - 3.0 * h_max;
    let hi = hi_z + 3.0 * h_max;
    let step = (hi - lo) / (n_grid - 1) as f64;
    let grid_points: Vec<f64> = (0..n_grid).map(|j| lo + j as f64 * step).collect();

    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut cell_mass: Vec<Vec<f64>> = standardized
        .iter()
        .zip(&bandwidths)
        .zip(group_weights)
        .map(|((zs, &h), &w)| {
            let scale = w * step * norm / (zs.len() as f64 * h);
            grid_points
                .iter()
                .map(|&g| {
                    let k: f64 = zs
                        .iter()
                        .map(|z| (-0.5 * ((g - z) / h).powi(2)).exp())
                        .sum();
                    k * scale
                })
                .collect()
        })
        .collect();

    let total: f64 = cell_mass.iter().flatten().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSample);
    }
    for m in cell_mass.iter_mut().flatten() {
        *m /= total;
    }
    Ok(DensityGrid {
        grid_points,
        cell_mass,
    })
}
