//! Regression suite behind one `fit` / `predict` interface.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

mod activation;
mod ensemble;
mod knn;
mod linalg;
mod linear;
mod scaler;
mod tree;

pub use activation::{Activation, TARGET_EPSILON};
pub use ensemble::{AdaBoostR2, GradientBoosting, RandomForest};
pub use knn::KnnModel;
pub use linalg::lstsq;
pub use linear::LinearModel;
pub use scaler::Standardizer;
pub use tree::{Node, RegressionTree, TreeParams};

/// Gradient boosting shrinkage.
pub const DEFAULT_GB_LEARNING_RATE: f64 = 0.1;
/// Depth of the boosting / AdaBoost base trees.
pub const DEFAULT_BOOSTED_DEPTH: usize = 3;
pub const DEFAULT_ADABOOST_LEARNING_RATE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressorError {
    #[error("training set is empty")]
    EmptyInput,
    #[error("{rows} feature rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("target {index} = {value} outside the domain of the {activation} activation")]
    TargetDomain {
        index: usize,
        value: f64,
        activation: &'static str,
    },
    #[error("non-finite feature at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Knn,
    Linear,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    AdaboostR2,
}

impl Family {
    /// Tree-based families predict from piecewise-constant leaves and
    /// cannot follow a trend past the training data. Single trees, forests
    /// and AdaBoost stay inside the training target range; gradient
    /// boosting can overshoot it slightly.
    pub fn is_tree_based(self) -> bool {
        matches!(
            self,
            Self::DecisionTree | Self::RandomForest | Self::GradientBoosting | Self::AdaboostR2
        )
    }
}

/// Family-specific settings. Unset fields take the documented defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegressorParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_estimators: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_samples_split: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    /// z-score features for k-NN and linear models (default true).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardize: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub family: Family,
    #[serde(default)]
    pub params: RegressorParams,
    #[serde(default)]
    pub seed: u64,
}

impl RegressorSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            params: RegressorParams::default(),
            seed: 0,
        }
    }

    pub fn knn(k: usize) -> Self {
        let mut s = Self::new(Family::Knn);
        s.params.k = Some(k);
        s
    }

    pub fn linear(activation: Activation) -> Self {
        let mut s = Self::new(Family::Linear);
        s.params.activation = Some(activation);
        s
    }

    pub fn ensemble(family: Family, n_estimators: usize) -> Self {
        let mut s = Self::new(family);
        s.params.n_estimators = Some(n_estimators);
        s
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_standardize(mut self, on: bool) -> Self {
        self.params.standardize = Some(on);
        self
    }

    pub fn activation(&self) -> Activation {
        self.params.activation.unwrap_or_default()
    }

    pub fn n_estimators(&self) -> usize {
        self.params.n_estimators.unwrap_or(100)
    }

    fn tree_params(&self) -> TreeParams {
        let boosted = matches!(self.family, Family::GradientBoosting | Family::AdaboostR2);
        TreeParams {
            max_depth: self
                .params
                .max_depth
                .or(boosted.then_some(DEFAULT_BOOSTED_DEPTH)),
            min_samples_split: self.params.min_samples_split.unwrap_or(2),
            min_samples_leaf: 1,
        }
    }

    /// Report label, e.g. `"3-NN"`, `"Linear Regression (D=0.25)"`,
    /// `"Gradient Boosting (N=200)"`.
    pub fn label(&self) -> String {
        let n = self.n_estimators();
        match self.family {
            Family::Knn => format!("{}-NN", self.params.k.unwrap_or(5)),
            Family::Linear => match self.activation().label() {
                None => String::from("Linear Regression"),
                Some(l) => format!("Linear Regression ({l})"),
            },
            Family::DecisionTree => String::from("Decision Tree"),
            Family::RandomForest => format!("Random Forest (N={n})"),
            Family::GradientBoosting => format!("Gradient Boosting (N={n})"),
            Family::AdaboostR2 => format!("AdaBoost (N={n})"),
        }
    }
}

/// A fitted model; immutable and deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Knn(KnnModel),
    Linear(LinearModel),
    Tree(RegressionTree),
    Forest(RandomForest),
    Boosting(GradientBoosting),
    AdaBoost(AdaBoostR2),
}

/// `f⁻¹(y)` elementwise (after the activation's clamping rule).
pub fn transform_targets(activation: Activation, y: &[f64]) -> Result<Vec<f64>, RegressorError> {
    y.iter()
        .enumerate()
        .map(|(index, &value)| {
            activation
                .inverse(value)
                .ok_or(RegressorError::TargetDomain {
                    index,
                    value,
                    activation: activation.name(),
                })
        })
        .collect()
}

fn check_finite(x: &Matrix) -> Result<(), RegressorError> {
    for row in 0..x.rows() {
        if let Some(col) = x.row(row).iter().position(|v| !v.is_finite()) {
            return Err(RegressorError::NonFinite { row, col });
        }
    }
    Ok(())
}

pub fn fit(spec: &RegressorSpec, x: &Matrix, y: &[f64]) -> Result<FittedModel, RegressorError> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(RegressorError::EmptyInput);
    }
    if x.rows() != y.len() {
        return Err(RegressorError::LengthMismatch {
            rows: x.rows(),
            targets: y.len(),
        });
    }
    check_finite(x)?;
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(RegressorError::TargetDomain {
            index: i,
            value: y[i],
            activation: spec.activation().name(),
        });
    }
    let scaler = || {
        if spec.params.standardize.unwrap_or(true) {
            Standardizer::fit(x)
        } else {
            Standardizer::identity(x.cols())
        }
    };
    let n_estimators = spec.n_estimators();
    if spec.family != Family::Knn
        && spec.family != Family::Linear
        && spec.family != Family::DecisionTree
        && n_estimators == 0
    {
        return Err(RegressorError::InvalidParam(String::from(
            "n_estimators must be at least 1",
        )));
    }
    Ok(match spec.family {
        Family::Knn => {
            let k = spec.params.k.unwrap_or(5);
            if k == 0 {
                return Err(RegressorError::InvalidParam(String::from(
                    "k must be at least 1",
                )));
            }
            FittedModel::Knn(KnnModel::fit(x, y, k, scaler()))
        }
        Family::Linear => {
            let activation = spec.activation();
            let t = transform_targets(activation, y)?;
            FittedModel::Linear(LinearModel::fit(x, &t, activation, scaler()))
        }
        Family::DecisionTree => FittedModel::Tree(RegressionTree::fit(x, y, spec.tree_params())),
        Family::RandomForest => FittedModel::Forest(RandomForest::fit(
            x,
            y,
            n_estimators,
            spec.tree_params(),
            spec.seed,
        )),
        Family::GradientBoosting => FittedModel::Boosting(GradientBoosting::fit(
            x,
            y,
            n_estimators,
            spec.params
                .learning_rate
                .unwrap_or(DEFAULT_GB_LEARNING_RATE),
            spec.tree_params(),
        )),
        Family::AdaboostR2 => FittedModel::AdaBoost(AdaBoostR2::fit(
            x,
            y,
            n_estimators,
            spec.params
                .learning_rate
                .unwrap_or(DEFAULT_ADABOOST_LEARNING_RATE),
            spec.tree_params(),
            spec.seed,
        )),
    })
}

impl FittedModel {
    pub fn n_features(&self) -> usize {
        match self {
            Self::Knn(m) => m.n_features(),
            Self::Linear(m) => m.weights.len(),
            Self::Tree(t) => t.n_features(),
            Self::Forest(f) => f.n_features(),
            Self::Boosting(g) => g.n_features(),
            Self::AdaBoost(a) => a.n_features(),
        }
    }
}

pub fn predict(model: &FittedModel, x: &Matrix) -> Result<Vec<f64>, RegressorError> {
    let expected = model.n_features();
    if x.cols() != expected {
        return Err(RegressorError::DimensionMismatch {
            expected,
            got: x.cols(),
        });
    }
    check_finite(x)?;
    Ok(match model {
        FittedModel::Knn(m) => m.predict(x),
        FittedModel::Linear(m) => m.predict(x),
        FittedModel::Tree(t) => t.predict(x),
        FittedModel::Forest(f) => f.predict(x),
        FittedModel::Boosting(g) => g.predict(x),
        FittedModel::AdaBoost(a) => a.predict(x),
    })
}

/// The baseline regression grid, SVR excluded:
/// 1/3/5/7/9-NN, seven linear variants, a decision tree and N ∈ {25, 50,
/// 100, 200} for gradient boosting, AdaBoost and random forest.
pub fn full_grid(seed: u64) -> Vec<RegressorSpec> {
    let mut grid = Vec::with_capacity(25);
    grid.extend([1, 3, 5, 7, 9].map(RegressorSpec::knn));
    grid.extend(Activation::ALL.map(RegressorSpec::linear));
    grid.push(RegressorSpec::new(Family::DecisionTree));
    for family in [
        Family::GradientBoosting,
        Family::AdaboostR2,
        Family::RandomForest,
    ] {
        grid.extend([25, 50, 100, 200].map(|n| RegressorSpec::ensemble(family, n)));
    }
    grid.into_iter().map(|s| s.with_seed(seed)).collect()
}

/// The seven linear variants used on the extrapolation splits.
pub fn linear_grid(seed: u64) -> Vec<RegressorSpec> {
    Activation::ALL
        .map(|a| RegressorSpec::linear(a).with_seed(seed))
        .to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn affine_data() -> (Matrix, Vec<f64>) {
        let rows: Vec<[f64; 3]> = (0..30)
            .map(|i| [i as f64, ((i * 5) % 7) as f64, ((i * i) % 11) as f64])
            .collect();
        let y = rows
            .iter()
            .map(|r| 0.1 + 0.01 * r[0] - 0.02 * r[1] + 0.005 * r[2])
            .collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn identity_linear_interpolates_affine_targets() {
        let (x, y) = affine_data();
        let m = fit(&RegressorSpec::linear(Activation::Identity), &x, &y).unwrap();
        let p = predict(&m, &x).unwrap();
        assert!(p.iter().zip(&y).all(|(a, b)| (a - b).abs() <= 1e-8));
        // raw features give the same fit
        let m = fit(
            &RegressorSpec::linear(Activation::Identity).with_standardize(false),
            &x,
            &y,
        )
        .unwrap();
        assert!(predict(&m, &x)
            .unwrap()
            .iter()
            .zip(&y)
            .all(|(a, b)| (a - b).abs() <= 1e-8));
    }

    #[test]
    fn pow_two_recovers_noiseless_targets() {
        let (x, _) = affine_data();
        let w0 = [0.02, 0.03, -0.01];
        let y: Vec<f64> = (0..x.rows())
            .map(|r| {
                let s: f64 = x.row(r).iter().zip(&w0).map(|(a, b)| a * b).sum();
                (s + 1.0) * (s + 1.0)
            })
            .collect();
        let m = fit(&RegressorSpec::linear(Activation::PowTwo), &x, &y).unwrap();
        let p = predict(&m, &x).unwrap();
        assert!(p.iter().zip(&y).all(|(a, b)| (a - b).abs() <= 1e-6));
    }

    #[test]
    fn sigmoid_outputs_in_unit_interval() {
        let (x, y) = affine_data();
        let m = fit(&RegressorSpec::linear(Activation::Sigmoid), &x, &y).unwrap();
        let far = Matrix::from_rows(&[[1e3, -1e3, 0.0], [-50.0, 3.0, 2.0]]).unwrap();
        assert!(predict(&m, &far)
            .unwrap()
            .iter()
            .all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn knn_one_returns_own_target() {
        let (x, y) = affine_data();
        let m = fit(&RegressorSpec::knn(1), &x, &y).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), y);
    }

    #[test]
    fn target_transform_examples_and_errors() {
        assert_eq!(
            transform_targets(Activation::Sigmoid, &[0.5]).unwrap(),
            vec![0.0]
        );
        assert_eq!(
            transform_targets(Activation::PowQuarter, &[1.0]).unwrap(),
            vec![0.0]
        );
        let err = transform_targets(Activation::PowHalf, &[0.5, -0.2]).unwrap_err();
        assert!(matches!(err, RegressorError::TargetDomain { index: 1, .. }));
    }

    #[test]
    fn errors() {
        let (x, y) = affine_data();
        assert_eq!(
            fit(&RegressorSpec::knn(3), &Matrix::zeros(0, 3), &[]),
            Err(RegressorError::EmptyInput)
        );
        assert!(matches!(
            fit(&RegressorSpec::knn(3), &x, &y[..5]),
            Err(RegressorError::LengthMismatch { .. })
        ));
        let m = fit(&RegressorSpec::knn(3), &x, &y).unwrap();
        assert!(matches!(
            predict(&m, &Matrix::zeros(2, 2)),
            Err(RegressorError::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
        let m = fit(
            &RegressorSpec::ensemble(Family::GradientBoosting, 5),
            &x,
            &y,
        )
        .unwrap();
        assert_eq!(m.n_features(), 3);
        assert!(fit(&RegressorSpec::knn(0), &x, &y).is_err());
    }

    #[test]
    fn gradient_boosting_more_stages_lower_train_mae() {
        let (x, y) = affine_data();
        let train_mae = |n| {
            let m = fit(
                &RegressorSpec::ensemble(Family::GradientBoosting, n),
                &x,
                &y,
            )
            .unwrap();
            crate::metrics::mae(&predict(&m, &x).unwrap(), &y).unwrap()
        };
        assert!(train_mae(200) <= train_mae(25));
    }

    #[test]
    fn grid_shape_and_labels() {
        let grid = full_grid(7);
        assert_eq!(grid.len(), 25);
        let labels: Vec<String> = grid.iter().map(RegressorSpec::label).collect();
        assert!(labels.iter().any(|l| l == "Linear Regression (D=0.25)"));
        assert_eq!(labels[1], "3-NN");
        assert!(labels.contains(&String::from("Gradient Boosting (N=200)")));
        assert!(labels.contains(&String::from("AdaBoost (N=100)")));
        assert_eq!(labels[24], "Random Forest (N=200)");
        assert!(grid.iter().all(|s| s.seed == 7));
        assert_eq!(linear_grid(0).len(), 7);
    }

    #[test]
    fn tree_families_stay_within_training_range() {
        let (x, y) = affine_data();
        let far = Matrix::from_rows(&[[-100.0, 50.0, -3.0], [500.0, -9.0, 40.0]]).unwrap();
        let (lo, hi) = (
            y.iter().copied().fold(f64::INFINITY, f64::min),
            y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        for spec in full_grid(1)
            .into_iter()
            .filter(|s| s.family.is_tree_based())
        {
            let m = fit(&spec, &x, &y).unwrap();
            // boosting adds shrunken residual fits, so it can step slightly past the hull
            let slack = if spec.family == Family::GradientBoosting {
                0.01 * (hi - lo)
            } else {
                1e-12
            };
            for v in predict(&m, &far).unwrap() {
                assert!(v >= lo - slack && v <= hi + slack, "{}: {v}", spec.label());
            }
        }
    }
}
