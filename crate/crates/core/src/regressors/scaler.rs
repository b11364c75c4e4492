use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::matrix::Matrix;

/// Per-column z-score using training statistics. Constant columns are
/// centred but not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.cols());
        let mut sd = Vec::with_capacity(x.cols());
        for c in 0..x.cols() {
            let m = x.column(c).sum::<f64>() / n;
            let var = x.column(c).map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = math::sqrt(var);
            mean.push(m);
            sd.push(if s > 0.0 { s } else { 1.0 });
        }
        Self { mean, sd }
    }

    /// Identity transform for `cols` columns.
    pub fn identity(cols: usize) -> Self {
        Self {
            mean: alloc::vec![0.0; cols],
            sd: alloc::vec![1.0; cols],
        }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                out.set(r, c, (x.get(r, c) - self.mean[c]) / self.sd[c]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_unit_sd_and_constant_columns() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [3.0, 5.0]]).unwrap();
        let s = Standardizer::fit(&x);
        let z = s.transform(&x);
        assert_eq!(z.as_slice(), &[-1.0, 0.0, 1.0, 0.0]);
    }
}
