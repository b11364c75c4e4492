use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::linalg::lstsq;
use super::scaler::Standardizer;
use crate::matrix::Matrix;

/// Least squares against `f⁻¹(y)` with prediction `f(x̃·w + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub activation: Activation,
    pub scaler: Standardizer,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    /// `targets` must already be transformed by `activation.inverse`.
    pub fn fit(x: &Matrix, targets: &[f64], activation: Activation, scaler: Standardizer) -> Self {
        let z = scaler.transform(x);
        let cols = z.cols();
        let mut design = Matrix::zeros(z.rows(), cols + 1);
        for r in 0..z.rows() {
            for c in 0..cols {
                design.set(r, c, z.get(r, c));
            }
            design.set(r, cols, 1.0);
        }
        let mut w = lstsq(&design, targets);
        let intercept = w.pop().unwrap_or(0.0);
        Self {
            activation,
            scaler,
            weights: w,
            intercept,
        }
    }

    /// Raw linear response `x̃·w + b` before the activation.
    pub fn decision(&self, x: &Matrix) -> Vec<f64> {
        let z = self.scaler.transform(x);
        (0..z.rows())
            .map(|r| {
                z.row(r)
                    .iter()
                    .zip(&self.weights)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + self.intercept
            })
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        self.decision(x)
            .into_iter()
            .map(|v| self.activation.forward(v))
            .collect()
    }
}
