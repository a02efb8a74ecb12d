//! CART regression trees and the ensembles built from them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Squared-error regression tree grown to `max_depth`.
#[derive(Clone, Debug, Serialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Grows a tree on the rows listed in `rows` (duplicates allowed, as in a bootstrap).
    pub fn fit(x: &[Vec<f64>], y: &[f64], rows: &[usize], max_depth: usize) -> Self {
        let mut tree = RegressionTree { nodes: Vec::new() };
        let mut idx = rows.to_vec();
        tree.grow(x, y, &mut idx, max_depth);
        tree
    }

    fn grow(&mut self, x: &[Vec<f64>], y: &[f64], rows: &mut [usize], depth_left: usize) -> usize {
        let id = self.nodes.len();
        let n = rows.len() as f64;
        let sum: f64 = rows.iter().map(|&i| y[i]).sum();
        let mean = sum / n;
        self.nodes.push(Node::Leaf(mean));
        if depth_left == 0 || rows.len() < 2 {
            return id;
        }
        let Some((feature, threshold)) = best_split(x, y, rows, sum) else {
            return id;
        };
        let mid = partition(rows, |i| x[i][feature] <= threshold);
        let (l, r) = rows.split_at_mut(mid);
        let left = self.grow(x, y, l, depth_left - 1);
        let right = self.grow(x, y, r, depth_left - 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }
}

/// Stable in-place partition; returns the number of rows satisfying `pred`.
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| pred(i));
    let mid = yes.len();
    rows[..mid].copy_from_slice(&yes);
    rows[mid..].copy_from_slice(&no);
    mid
}

/// Split maximizing the reduction in squared error; ties keep the first candidate
/// in (feature, threshold) order.
fn best_split(x: &[Vec<f64>], y: &[f64], rows: &[usize], total: f64) -> Option<(usize, f64)> {
    let n = rows.len();
    let d = x[rows[0]].len();
    let parent = total * total / n as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = rows.to_vec();
    for f in 0..d {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += y[order[k]];
            let (lo, hi) = (x[order[k]][f], x[order[k + 1]][f]);
            if lo == hi {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = (n - k - 1) as f64;
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
            if gain > 1e-12 * parent.abs().max(1e-300) && best.is_none_or(|b| gain > b.0) {
                let mut t = 0.5 * (lo + hi);
                if t >= hi {
                    t = lo;
                }
                best = Some((gain, f, t));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Bagged regression trees, bootstrap draws from a seeded ChaCha stream.
#[derive(Clone, Debug, Serialize)]
pub struct Forest {
    trees: Vec<RegressionTree>,
}

impl Forest {
    pub fn fit(x: &[Vec<f64>], y: &[f64], n_trees: usize, max_depth: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = x.len();
        let trees = (0..n_trees)
            .map(|_| {
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                RegressionTree::fit(x, y, &rows, max_depth)
            })
            .collect();
        Self { trees }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Squared-error gradient boosting over depth-limited trees.
#[derive(Clone, Debug, Serialize)]
pub struct Boosted {
    base: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
}

impl Boosted {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        rounds: usize,
        learning_rate: f64,
        max_depth: usize,
    ) -> Self {
        let base = y.iter().sum::<f64>() / y.len() as f64;
        let mut pred = vec![base; y.len()];
        let all: Vec<usize> = (0..y.len()).collect();
        let mut trees = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            let resid: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
            let tree = RegressionTree::fit(x, &resid, &all, max_depth);
            for (p, row) in pred.iter_mut().zip(x) {
                *p += learning_rate * tree.predict_row(row);
            }
            trees.push(tree);
        }
        Self {
            base,
            learning_rate,
            trees,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.base
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict_row(row))
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y = x
            .iter()
            .map(|r| if r[0] < 20.0 { 1.0 } else { 5.0 })
            .collect();
        (x, y)
    }

    #[test]
    fn stump_finds_step() {
        let (x, y) = step_data();
        let rows: Vec<usize> = (0..40).collect();
        let t = RegressionTree::fit(&x, &y, &rows, 1);
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.predict_row(&[3.0, 0.0]), 1.0);
        assert_eq!(t.predict_row(&[30.0, 0.0]), 5.0);
        assert_eq!(t.predict_row(&[19.5, 0.0]), 1.0);
        assert_eq!(t.predict_row(&[19.6, 0.0]), 5.0);
    }

    #[test]
    fn deep_tree_interpolates_distinct_rows() {
        let x: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64).collect();
        let rows: Vec<usize> = (0..16).collect();
        let t = RegressionTree::fit(&x, &y, &rows, 10);
        for (r, v) in x.iter().zip(&y) {
            assert_eq!(t.predict_row(r), *v);
        }
    }

    #[test]
    fn zero_rounds_is_mean() {
        let (x, y) = step_data();
        let b = Boosted::fit(&x, &y, 0, 0.1, 3);
        assert_eq!(b.predict_row(&[0.0, 0.0]), 3.0);
    }

    #[test]
    fn forest_is_seed_deterministic() {
        let (x, y) = step_data();
        let a = Forest::fit(&x, &y, 10, 3, 7);
        let b = Forest::fit(&x, &y, 10, 3, 7);
        let c = Forest::fit(&x, &y, 10, 3, 8);
        let probe: Vec<f64> = (0..40)
            .map(|i| a.predict_row(&[i as f64 + 0.5, 1.0]))
            .collect();
        assert_eq!(
            probe,
            (0..40)
                .map(|i| b.predict_row(&[i as f64 + 0.5, 1.0]))
                .collect::<Vec<_>>()
        );
        assert_ne!(
            probe,
            (0..40)
                .map(|i| c.predict_row(&[i as f64 + 0.5, 1.0]))
                .collect::<Vec<_>>()
        );
    }
}
