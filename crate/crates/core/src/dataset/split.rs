//! Accuracy bins and the uniform / extrapolation train-test splits.
//!
//! Records are sorted by ground-truth accuracy and cut into equal bins
//! (bin 1 holds the lowest accuracies). The uniform split sends each bin's
//! centre sample to the test set. The extrapolation splits keep those
//! per-bin roles but drop whole halves (or quarters) so that every test
//! accuracy falls outside the training range.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError};

pub const STANDARD_RECORD_COUNT: usize = 440;
pub const STANDARD_BIN_COUNT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Uniform,
    /// Train on the upper half, predict the lower half.
    Left,
    /// Train on the lower half, predict the upper half.
    Right,
    /// Train on the central half, predict both outer quarters.
    Dual,
}

impl SplitKind {
    pub const ALL: [SplitKind; 4] = [Self::Uniform, Self::Left, Self::Right, Self::Dual];

    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Left => "left",
            Self::Right => "right",
            Self::Dual => "dual",
        }
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for SplitKind {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or("expected one of uniform, left, right, dual")
    }
}

/// Whether the standard geometry (440 records, 40 bins of 11) is enforced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    #[default]
    Strict,
    Permissive,
}

/// Train/test partition over dataset row indices (both ascending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub kind: SplitKind,
    #[serde(rename = "train")]
    pub train_idx: Vec<usize>,
    #[serde(rename = "test")]
    pub test_idx: Vec<usize>,
}

/// Row indices grouped into equal bins, ordered by ascending accuracy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bins(Vec<Vec<usize>>);

impl Bins {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.0.iter().map(Vec::as_slice)
    }

    /// 1-based bin lookup; bin 1 is the lowest-accuracy bin.
    pub fn bin(&self, number: usize) -> Option<&[usize]> {
        number
            .checked_sub(1)
            .and_then(|i| self.0.get(i))
            .map(Vec::as_slice)
    }
}

/// Sorts rows by `(accuracy, row index)` and chunks them into `n_bins`
/// equal bins.
pub fn bin_by_accuracy(accuracies: &[f64], n_bins: usize) -> Result<Bins, DatasetError> {
    let n = accuracies.len();
    if n_bins == 0 || n == 0 || n % n_bins != 0 {
        return Err(DatasetError::NotDivisible {
            records: n,
            bins: n_bins,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| accuracies[a].total_cmp(&accuracies[b]).then(a.cmp(&b)));
    Ok(Bins(
        order.chunks(n / n_bins).map(<[usize]>::to_vec).collect(),
    ))
}

impl Dataset {
    pub fn bin_by_accuracy(&self, n_bins: usize) -> Result<Bins, DatasetError> {
        bin_by_accuracy(&self.targets(), n_bins)
    }
}

/// Per-bin `(train, test)` roles: the centre position `(size-1)/2` is test.
fn bin_roles(bins: &Bins) -> Result<Vec<(Vec<usize>, usize)>, DatasetError> {
    bins.0
        .iter()
        .enumerate()
        .map(|(b, bin)| {
            if bin.len() % 2 == 0 {
                return Err(DatasetError::EvenBinSize {
                    bin: b + 1,
                    size: bin.len(),
                });
            }
            let centre = (bin.len() - 1) / 2;
            let train = bin
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != centre)
                .map(|(_, &r)| r)
                .collect();
            Ok((train, bin[centre]))
        })
        .collect()
}

fn assemble(kind: SplitKind, mut train_idx: Vec<usize>, mut test_idx: Vec<usize>) -> Split {
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Split {
        kind,
        train_idx,
        test_idx,
    }
}

pub fn uniform_split(bins: &Bins) -> Result<Split, DatasetError> {
    let roles = bin_roles(bins)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (t, c) in roles {
        train.extend(t);
        test.push(c);
    }
    Ok(assemble(SplitKind::Uniform, train, test))
}

/// Left, right or dual extrapolation split derived from the uniform roles.
///
/// With 40 bins: left trains on bins 21–40 and tests on bins 1–20; right is
/// the mirror; dual trains on bins 11–30 and tests on bins 1–10 and 31–40.
pub fn extrapolation_split(
    bins: &Bins,
    kind: SplitKind,
    mode: SplitMode,
) -> Result<Split, DatasetError> {
    let b = bins.len();
    if mode == SplitMode::Strict && b != STANDARD_BIN_COUNT {
        return Err(DatasetError::BinCount {
            expected: STANDARD_BIN_COUNT,
            got: b,
        });
    }
    let divisor = match kind {
        SplitKind::Uniform => return uniform_split(bins),
        SplitKind::Left | SplitKind::Right => 2,
        SplitKind::Dual => 4,
    };
    if b == 0 || b % divisor != 0 {
        return Err(DatasetError::IndivisibleSplit { bins: b, kind });
    }
    let roles = bin_roles(bins)?;
    let (half, quarter) = (b / 2, b / 4);
    let train_bin = |i: usize| match kind {
        SplitKind::Left => i >= half,
        SplitKind::Right => i < half,
        _ => (quarter..b - quarter).contains(&i),
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, (t, c)) in roles.into_iter().enumerate() {
        if train_bin(i) {
            train.extend(t);
        } else {
            test.push(c);
        }
    }
    Ok(assemble(kind, train, test))
}

/// Bins `accuracies` and builds the requested split. Strict mode requires
/// the 440-record / 40-bin geometry; permissive mode uses `n_bins`.
pub fn make_split(
    accuracies: &[f64],
    kind: SplitKind,
    mode: SplitMode,
    n_bins: usize,
) -> Result<Split, DatasetError> {
    if mode == SplitMode::Strict {
        if accuracies.len() != STANDARD_RECORD_COUNT {
            return Err(DatasetError::RecordCount {
                expected: STANDARD_RECORD_COUNT,
                got: accuracies.len(),
            });
        }
        if n_bins != STANDARD_BIN_COUNT {
            return Err(DatasetError::BinCount {
                expected: STANDARD_BIN_COUNT,
                got: n_bins,
            });
        }
    }
    let bins = bin_by_accuracy(accuracies, n_bins)?;
    extrapolation_split(&bins, kind, mode)
}
