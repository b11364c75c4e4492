use naap_core::featsel::{FeatureMask, SubsetEvaluator};
use naap_core::matrix::Matrix;
use naap_core::metrics::{self, CostFunction, EvalResult};
use naap_core::regressors::{fit, predict, RegressorSpec};
use rayon::prelude::*;

use crate::error::DataError;

/// Train/test matrices of one split at one acceleration level.
#[derive(Debug, Clone)]
pub struct LevelData {
    pub level: usize,
    pub feature_names: Vec<String>,
    pub x_train: Matrix,
    pub y_train: Vec<f64>,
    pub x_test: Matrix,
    pub y_test: Vec<f64>,
}

impl LevelData {
    pub fn n_features(&self) -> usize {
        self.x_train.cols()
    }
}

/// Fits `spec` on the training columns selected by a mask and scores the
/// test predictions. Batches are evaluated in parallel on the current
/// rayon pool.
pub struct MaskedEvaluator<'a> {
    pub data: &'a LevelData,
    pub spec: RegressorSpec,
    pub cost: CostFunction,
}

impl MaskedEvaluator<'_> {
    pub fn predictions(&self, mask: FeatureMask) -> Result<Vec<f64>, DataError> {
        let cols = mask.indices();
        let model = fit(
            &self.spec,
            &self.data.x_train.select_cols(&cols),
            &self.data.y_train,
        )?;
        Ok(predict(&model, &self.data.x_test.select_cols(&cols))?)
    }
}

impl SubsetEvaluator for MaskedEvaluator<'_> {
    type Error = DataError;

    fn evaluate(&self, mask: FeatureMask) -> Result<EvalResult, DataError> {
        let pred = self.predictions(mask)?;
        Ok(metrics::evaluate(&pred, &self.data.y_test, self.cost)?)
    }

    fn evaluate_many(&self, masks: &[FeatureMask]) -> Vec<Result<EvalResult, DataError>> {
        masks.par_iter().map(|&m| self.evaluate(m)).collect()
    }
}
