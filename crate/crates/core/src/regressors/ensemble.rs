//! Tree ensembles: bagged random forest, squared-loss gradient boosting and
//! AdaBoost.R2. Each ensemble draws its randomness from per-tree ChaCha
//! streams derived from one seed, so results never depend on how the work
//! is scheduled.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Columns, RegressionTree, TreeParams};
use crate::math;
use crate::matrix::Matrix;

/// SplitMix64 finalizer applied to `seed + stream·φ`.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Bootstrap-aggregated CART trees, all features considered at each split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

impl RandomForest {
    pub fn fit(x: &Matrix, y: &[f64], n_estimators: usize, params: TreeParams, seed: u64) -> Self {
        let cols = Columns::new(x);
        let n = cols.n_rows();
        let trees = (0..n_estimators.max(1))
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                let mut counts = alloc::vec![0.0; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1.0;
                }
                RegressionTree::fit_weighted(&cols, y, Some(&counts), params)
            })
            .collect();
        Self { trees }
    }

    pub fn n_estimators(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.trees.first().map_or(0, RegressionTree::n_features)
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let mut out = alloc::vec![0.0; x.rows()];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(t.predict(x)) {
                *o += p;
            }
        }
        let k = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= k);
        out
    }
}

/// Squared-loss gradient boosting: `F₀ = mean(y)`, each stage fits a tree
/// to the residuals and adds `learning_rate ×` its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    init: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
}

impl GradientBoosting {
    pub fn fit(
        x: &Matrix,
        y: &[f64],
        n_estimators: usize,
        learning_rate: f64,
        params: TreeParams,
    ) -> Self {
        let cols = Columns::new(x);
        let init = y.iter().sum::<f64>() / y.len() as f64;
        let mut current = alloc::vec![init; y.len()];
        let mut residual = alloc::vec![0.0; y.len()];
        let mut trees = Vec::with_capacity(n_estimators);
        for _ in 0..n_estimators {
            for ((r, t), c) in residual.iter_mut().zip(y).zip(&current) {
                *r = t - c;
            }
            let tree = RegressionTree::fit_weighted(&cols, &residual, None, params);
            for (c, p) in current.iter_mut().zip(tree.predict(x)) {
                *c += learning_rate * p;
            }
            trees.push(tree);
        }
        Self {
            init,
            learning_rate,
            trees,
        }
    }

    pub fn n_estimators(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.trees.first().map_or(0, RegressionTree::n_features)
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let mut out = alloc::vec![self.init; x.rows()];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(t.predict(x)) {
                *o += self.learning_rate * p;
            }
        }
        out
    }
}

/// AdaBoost.R2 with linear loss: each round fits a tree on a weighted
/// bootstrap, scores normalized absolute errors on the full training set
/// and reweights; prediction is the weighted median over rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostR2 {
    trees: Vec<RegressionTree>,
    weights: Vec<f64>,
}

impl AdaBoostR2 {
    pub fn fit(
        x: &Matrix,
        y: &[f64],
        n_estimators: usize,
        learning_rate: f64,
        params: TreeParams,
        seed: u64,
    ) -> Self {
        let cols = Columns::new(x);
        let n = y.len();
        let mut sample_w = alloc::vec![1.0 / n as f64; n];
        let mut trees = Vec::new();
        let mut weights = Vec::new();
        for round in 0..n_estimators.max(1) {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, round as u64));
            let counts = weighted_bootstrap(&sample_w, &mut rng);
            let tree = RegressionTree::fit_weighted(&cols, y, Some(&counts), params);
            let pred = tree.predict(x);
            let mut err: Vec<f64> = pred.iter().zip(y).map(|(p, t)| math::abs(p - t)).collect();
            let max_err = err.iter().copied().fold(0.0, f64::max);
            if max_err > 0.0 {
                err.iter_mut().for_each(|e| *e /= max_err);
            }
            let estimator_error: f64 = sample_w.iter().zip(&err).map(|(w, e)| w * e).sum();

            if estimator_error <= 0.0 {
                trees.push(tree);
                weights.push(1.0);
                break;
            }
            if estimator_error >= 0.5 {
                // a useless first round is still needed to predict anything
                if trees.is_empty() {
                    trees.push(tree);
                    weights.push(1.0);
                }
                break;
            }
            let beta = estimator_error / (1.0 - estimator_error);
            weights.push(learning_rate * math::ln(1.0 / beta));
            trees.push(tree);
            if round + 1 == n_estimators {
                break;
            }
            for (w, e) in sample_w.iter_mut().zip(&err) {
                *w *= math::powf(beta, (1.0 - e) * learning_rate);
            }
            let total: f64 = sample_w.iter().sum();
            if total.is_nan() || total <= 0.0 {
                break;
            }
            sample_w.iter_mut().for_each(|w| *w /= total);
        }
        Self { trees, weights }
    }

    pub fn n_estimators(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.trees.first().map_or(0, RegressionTree::n_features)
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let per_tree: Vec<Vec<f64>> = self.trees.iter().map(|t| t.predict(x)).collect();
        let total: f64 = self.weights.iter().sum();
        let mut order: Vec<usize> = (0..self.trees.len()).collect();
        (0..x.rows())
            .map(|r| {
                order.sort_by(|&a, &b| per_tree[a][r].total_cmp(&per_tree[b][r]).then(a.cmp(&b)));
                let mut cum = 0.0;
                for &t in &order {
                    cum += self.weights[t];
                    if cum >= 0.5 * total {
                        return per_tree[t][r];
                    }
                }
                per_tree[order[order.len() - 1]][r]
            })
            .collect()
    }
}

/// Draws `n` rows with replacement with probability proportional to
/// `weights`, returned as per-row counts.
fn weighted_bootstrap(weights: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let mut counts = alloc::vec![0.0; weights.len()];
    for _ in 0..weights.len() {
        let u = rng.random::<f64>() * acc;
        let i = cdf.partition_point(|&c| c <= u).min(weights.len() - 1);
        counts[i] += 1.0;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Matrix, Vec<f64>) {
        let rows: Vec<[f64; 2]> = (0..60).map(|i| [i as f64, ((i * 7) % 13) as f64]).collect();
        let y = rows.iter().map(|r| 0.01 * r[0] + 0.02 * r[1]).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn forest_is_seed_deterministic() {
        let (x, y) = data();
        let p = TreeParams::default();
        let a = RandomForest::fit(&x, &y, 10, p, 1).predict(&x);
        assert_eq!(a, RandomForest::fit(&x, &y, 10, p, 1).predict(&x));
        assert_ne!(a, RandomForest::fit(&x, &y, 10, p, 2).predict(&x));
    }

    #[test]
    fn boosting_reduces_training_error() {
        let (x, y) = data();
        let p = TreeParams {
            max_depth: Some(3),
            ..TreeParams::default()
        };
        let mse = |m: &GradientBoosting| {
            m.predict(&x)
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let e25 = mse(&GradientBoosting::fit(&x, &y, 25, 0.1, p));
        let e200 = mse(&GradientBoosting::fit(&x, &y, 200, 0.1, p));
        assert!(e200 < e25);
    }

    #[test]
    fn adaboost_stays_in_target_range() {
        let (x, y) = data();
        let p = TreeParams {
            max_depth: Some(3),
            ..TreeParams::default()
        };
        let m = AdaBoostR2::fit(&x, &y, 50, 1.0, p, 3);
        let (lo, hi) = (
            y.iter().copied().fold(f64::INFINITY, f64::min),
            y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        assert!(m.n_estimators() >= 1);
        assert!(m.predict(&x).iter().all(|&v| v >= lo && v <= hi));
    }

    #[test]
    fn weighted_bootstrap_respects_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = weighted_bootstrap(&[0.0, 1.0, 0.0, 1.0], &mut rng);
        assert_eq!(c[0] + c[2], 0.0);
        assert_eq!(c.iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn seeds_differ_per_stream() {
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
