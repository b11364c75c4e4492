//! NAAP-440e records, feature matrices, accuracy bins and splits.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::scheme::{SchemeFeatures, SCHEME_FEATURE_NAMES};

mod split;
mod synthetic;

pub use split::{
    bin_by_accuracy, extrapolation_split, make_split, uniform_split, Bins, Split, SplitKind,
    SplitMode, STANDARD_BIN_COUNT, STANDARD_RECORD_COUNT,
};
pub use synthetic::{
    generate_naap_like, generate_naap_like_with_schemes, generate_synthetic, SyntheticSpec,
    TabularData, TargetFn,
};

/// Epoch counts whose metrics are used as features (100%, 96.7%, 93.3% and
/// 90% acceleration out of 30 epochs).
pub const ACCELERATION_LEVELS: [usize; 4] = [0, 3, 6, 9];

/// Per-epoch feature suffixes in canonical column order.
pub const EPOCH_FEATURE_SUFFIXES: [&str; 3] = ["train_loss", "train_acc", "test_acc"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("dataset has no records")]
    Empty,
    #[error("record {row} ({id}): gt_accuracy {value} outside [0, 1]")]
    AccuracyOutOfRange { row: usize, id: String, value: f64 },
    #[error("record {row} ({id}): epoch {epoch} {field} = {value} out of range")]
    EpochOutOfRange {
        row: usize,
        id: String,
        epoch: usize,
        field: &'static str,
        value: f64,
    },
    #[error("record {row} ({id}): has {have} epochs, level {need} requested")]
    TooFewEpochs {
        row: usize,
        id: String,
        have: usize,
        need: usize,
    },
    #[error("{records} records cannot be split into {bins} equal bins")]
    NotDivisible { records: usize, bins: usize },
    #[error("bin {bin} has even size {size}; the centre sample is undefined")]
    EvenBinSize { bin: usize, size: usize },
    #[error("strict mode expects {expected} bins, got {got}")]
    BinCount { expected: usize, got: usize },
    #[error("strict mode expects {expected} records, got {got}")]
    RecordCount { expected: usize, got: usize },
    #[error("{bins} bins cannot be divided for the {kind} split")]
    IndivisibleSplit { bins: usize, kind: SplitKind },
}

/// Training metrics of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

impl EpochMetrics {
    pub fn to_array(&self) -> [f64; 3] {
        [self.train_loss, self.train_accuracy, self.test_accuracy]
    }
}

/// One candidate architecture: scheme features, early-epoch metrics and the
/// final test accuracy to predict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchRecord {
    pub id: String,
    pub scheme: SchemeFeatures,
    pub epochs: Vec<EpochMetrics>,
    pub gt_accuracy: f64,
}

/// Validated, immutable table of records in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<ArchRecord>,
}

fn unit_interval(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl Dataset {
    pub fn new(records: Vec<ArchRecord>) -> Result<Self, DatasetError> {
        if records.is_empty() {
            return Err(DatasetError::Empty);
        }
        for (row, r) in records.iter().enumerate() {
            if !unit_interval(r.gt_accuracy) {
                return Err(DatasetError::AccuracyOutOfRange {
                    row,
                    id: r.id.clone(),
                    value: r.gt_accuracy,
                });
            }
            for (e, m) in r.epochs.iter().enumerate() {
                let bad = if !(m.train_loss >= 0.0 && m.train_loss.is_finite()) {
                    Some(("train_loss", m.train_loss))
                } else if !unit_interval(m.train_accuracy) {
                    Some(("train_acc", m.train_accuracy))
                } else if !unit_interval(m.test_accuracy) {
                    Some(("test_acc", m.test_accuracy))
                } else {
                    None
                };
                if let Some((field, value)) = bad {
                    return Err(DatasetError::EpochOutOfRange {
                        row,
                        id: r.id.clone(),
                        epoch: e + 1,
                        field,
                        value,
                    });
                }
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ArchRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gt_accuracy).collect()
    }

    /// Largest epoch level every record can serve.
    pub fn max_level(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.epochs.len())
            .min()
            .unwrap_or(0)
    }

    /// Column names at `level`: the 8 scheme features followed by
    /// `epoch{e}_{train_loss,train_acc,test_acc}` for `e = 1..=level`.
    pub fn feature_names(level: usize) -> Vec<String> {
        let mut names: Vec<String> = SCHEME_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        for e in 1..=level {
            for suffix in EPOCH_FEATURE_SUFFIXES {
                names.push(format!("epoch{e}_{suffix}"));
            }
        }
        names
    }

    /// `N × (8 + 3·level)` feature matrix and the ground-truth targets.
    pub fn feature_matrix(&self, level: usize) -> Result<(Matrix, Vec<f64>), DatasetError> {
        let cols = SCHEME_FEATURE_NAMES.len() + 3 * level;
        let mut data = Vec::with_capacity(self.records.len() * cols);
        for (row, r) in self.records.iter().enumerate() {
            if r.epochs.len() < level {
                return Err(DatasetError::TooFewEpochs {
                    row,
                    id: r.id.clone(),
                    have: r.epochs.len(),
                    need: level,
                });
            }
            data.extend_from_slice(&r.scheme.to_array());
            for m in &r.epochs[..level] {
                data.extend_from_slice(&m.to_array());
            }
        }
        Ok((
            Matrix::from_vec(self.records.len(), cols, data),
            self.targets(),
        ))
    }
}
