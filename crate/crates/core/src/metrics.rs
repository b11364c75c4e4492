//! Prediction quality: MAE, pairwise monotonicity and subset-search costs.
//!
//! A monotonicity violation is a test pair whose predicted order
//! contradicts its ground-truth order. The violation rate is
//! `#violations / C(N, 2)` and the monotonicity score is one minus that
//! rate. Pairs tied in either sequence are never violations.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {pred} predictions vs {gt} ground-truth values")]
    LengthMismatch { pred: usize, gt: usize },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("{violations} violations exceed the {pairs} pairs of {n} samples")]
    ViolationsOutOfRange {
        violations: u64,
        pairs: u64,
        n: usize,
    },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("violation rate {0} outside [0, 1]")]
    RateOutOfRange(f64),
    #[error("log cost is undefined for a zero violation rate")]
    LogOfZero,
    #[error("MAE must be non-negative, got {0}")]
    NegativeMae(f64),
}

/// Cost minimized by the feature-subset search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFunction {
    /// `m · v`
    Product,
    /// `m · ln v` (negative; undefined at `v = 0`)
    Log,
    /// `m · √v`
    Sqrt,
    /// `round(m, 3) · √v`
    #[default]
    SqrtRounded,
}

impl CostFunction {
    pub const ALL: [CostFunction; 4] = [Self::Product, Self::Log, Self::Sqrt, Self::SqrtRounded];

    pub fn name(self) -> &'static str {
        match self {
            Self::Product => "product",
            Self::Log => "log",
            Self::Sqrt => "sqrt",
            Self::SqrtRounded => "sqrt_rounded",
        }
    }
}

impl core::str::FromStr for CostFunction {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or("expected one of product, log, sqrt, sqrt_rounded")
    }
}

/// Test-set evaluation of one fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mae: f64,
    pub violations: u64,
    pub n_test: usize,
    pub monotonicity: f64,
    pub cost: f64,
}

impl EvalResult {
    pub fn violation_rate(&self) -> f64 {
        1.0 - self.monotonicity
    }
}

/// `C(n, 2)`
#[inline]
pub fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

fn check_pair(pred: &[f64], gt: &[f64], min: usize) -> Result<(), MetricsError> {
    if pred.len() != gt.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    if pred.len() < min {
        return Err(MetricsError::TooFewSamples {
            min,
            got: pred.len(),
        });
    }
    for (i, (p, g)) in pred.iter().zip(gt).enumerate() {
        if !p.is_finite() || !g.is_finite() {
            return Err(MetricsError::NonFinite(i));
        }
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(pred: &[f64], gt: &[f64]) -> Result<f64, MetricsError> {
    check_pair(pred, gt, 1)?;
    let total: f64 = pred.iter().zip(gt).map(|(p, g)| math::abs(p - g)).sum();
    Ok(total / pred.len() as f64)
}

/// Number of pairs `i < j` with `(gt_i - gt_j) · (pred_i - pred_j) < 0`.
///
/// Runs in `O(N log N)`: order by `(gt, pred)`, then count strict
/// inversions of the predictions with a merge sort. Sorting ties in `gt` by
/// `pred` keeps gt-tied pairs out of the count, and the strict comparison
/// during merging keeps pred-tied pairs out.
pub fn count_violations(pred: &[f64], gt: &[f64]) -> Result<u64, MetricsError> {
    check_pair(pred, gt, 2)?;
    let mut order: Vec<usize> = (0..pred.len()).collect();
    order.sort_by(|&a, &b| gt[a].total_cmp(&gt[b]).then(pred[a].total_cmp(&pred[b])));
    let mut seq: Vec<f64> = order.iter().map(|&i| pred[i]).collect();
    let mut buf = alloc::vec![0.0; seq.len()];
    Ok(merge_count(&mut seq, &mut buf))
}

/// Sorts `seq` ascending and returns the number of pairs `i < j` with
/// `seq[i] > seq[j]`.
fn merge_count(seq: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = seq.split_at_mut(mid);
        let (lb, rb) = buf.split_at_mut(mid);
        merge_count(left, lb) + merge_count(right, rb)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        // Equal values go left first so ties never count.
        if seq[j].total_cmp(&seq[i]) == Ordering::Less {
            buf[k] = seq[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = seq[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + (mid - i)].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    buf[k..k + (n - j)].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&buf[..n]);
    count
}

/// `1 - violations / C(n_test, 2)`.
pub fn monotonicity_score(violations: u64, n_test: usize) -> Result<f64, MetricsError> {
    if n_test < 2 {
        return Err(MetricsError::TooFewSamples {
            min: 2,
            got: n_test,
        });
    }
    let pairs = pair_count(n_test);
    if violations > pairs {
        return Err(MetricsError::ViolationsOutOfRange {
            violations,
            pairs,
            n: n_test,
        });
    }
    Ok(1.0 - violations as f64 / pairs as f64)
}

/// Search cost from MAE `m` and violation rate `v`.
pub fn cost(mae: f64, violation_rate: f64, variant: CostFunction) -> Result<f64, MetricsError> {
    if mae.is_nan() || mae < 0.0 {
        return Err(MetricsError::NegativeMae(mae));
    }
    if !(0.0..=1.0).contains(&violation_rate) {
        return Err(MetricsError::RateOutOfRange(violation_rate));
    }
    Ok(match variant {
        CostFunction::Product => mae * violation_rate,
        CostFunction::Log => {
            if violation_rate == 0.0 {
                return Err(MetricsError::LogOfZero);
            }
            mae * math::ln(violation_rate)
        }
        CostFunction::Sqrt => mae * math::sqrt(violation_rate),
        CostFunction::SqrtRounded => math::round_to(mae, 3) * math::sqrt(violation_rate),
    })
}

/// MAE, violations, monotonicity and cost of one prediction vector.
pub fn evaluate(
    pred: &[f64],
    gt: &[f64],
    variant: CostFunction,
) -> Result<EvalResult, MetricsError> {
    let mae = mae(pred, gt)?;
    let violations = count_violations(pred, gt)?;
    let n_test = pred.len();
    let pairs = pair_count(n_test);
    let monotonicity = monotonicity_score(violations, n_test)?;
    let rate = violations as f64 / pairs as f64;
    let cost = cost(mae, rate, variant)?;
    Ok(EvalResult {
        mae,
        violations,
        n_test,
        monotonicity,
        cost,
    })
}

/// `"MAE / Monotonicity / #Violations"` with three decimals.
pub fn format_cell(result: &EvalResult) -> alloc::string::String {
    alloc::format!(
        "{:.3} / {:.3} / {}",
        result.mae,
        result.monotonicity,
        result.violations
    )
}
