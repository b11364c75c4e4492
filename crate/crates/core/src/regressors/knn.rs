use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::scaler::Standardizer;
use crate::matrix::Matrix;

/// k-NN regressor: Euclidean distance on (optionally) standardized
/// features, unweighted mean of the `k` nearest targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    scaler: Standardizer,
    x: Matrix,
    y: Vec<f64>,
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[f64], k: usize, scaler: Standardizer) -> Self {
        Self {
            k: k.clamp(1, y.len()),
            x: scaler.transform(x),
            scaler,
            y: y.to_vec(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let q = self.scaler.transform(x);
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.y.len());
        (0..q.rows())
            .map(|r| {
                let query = q.row(r);
                dist.clear();
                dist.extend((0..self.x.rows()).map(|i| {
                    let d: f64 = self
                        .x
                        .row(i)
                        .iter()
                        .zip(query)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d, i)
                }));
                // distance ties resolve to the lower training index
                let cmp =
                    |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if self.k < dist.len() {
                    dist.select_nth_unstable_by(self.k - 1, cmp);
                }
                let nearest = &mut dist[..self.k];
                nearest.sort_unstable_by(cmp);
                nearest.iter().map(|&(_, i)| self.y[i]).sum::<f64>() / self.k as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_nn_reproduces_training_targets() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [2.0, 0.5], [4.0, 3.0], [1.0, 7.0]]).unwrap();
        let y = [0.1, 0.2, 0.3, 0.4];
        let m = KnnModel::fit(&x, &y, 1, Standardizer::fit(&x));
        assert_eq!(m.predict(&x), y.to_vec());
    }

    #[test]
    fn tie_prefers_lower_index() {
        let x = Matrix::from_rows(&[[-1.0], [1.0], [5.0]]).unwrap();
        let m = KnnModel::fit(&x, &[0.2, 0.8, 0.5], 1, Standardizer::identity(1));
        let q = Matrix::from_rows(&[[0.0]]).unwrap();
        assert_eq!(m.predict(&q), alloc::vec![0.2]);
        let m3 = KnnModel::fit(&x, &[0.2, 0.8, 0.5], 3, Standardizer::identity(1));
        assert!((m3.predict(&q)[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn k_larger_than_training_set() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let m = KnnModel::fit(&x, &[0.0, 1.0], 9, Standardizer::identity(1));
        assert_eq!(m.k(), 2);
        assert_eq!(m.predict(&x), alloc::vec![0.5, 0.5]);
    }
}
