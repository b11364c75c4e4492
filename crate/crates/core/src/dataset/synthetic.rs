//! Seeded synthetic data for oracle tests and offline runs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ArchRecord, Dataset, EpochMetrics};
use crate::math;
use crate::matrix::Matrix;
use crate::scheme::{
    scheme_feature_vector, ArchitectureScheme, LayerDescription, StageRule, DEFAULT_INPUT,
};

/// Response shape linking the informative columns to the target.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetFn {
    /// `0.2 + 0.6 · s` where `s ∈ [0, 1]` is the normalized weighted sum.
    #[default]
    Linear,
    /// `sigmoid(6 · (s − 0.5))`, monotone but curved.
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_informative: usize,
    pub n_distractor: usize,
    pub target_fn: TargetFn,
    pub noise_sd: f64,
    pub seed: u64,
}

/// Generic feature table with a planted ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularData {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    /// `informative[c]` is true when column `c` drives the target.
    pub informative: Vec<bool>,
    /// Weight of each column in the planted sum (zero for distractors).
    pub weights: Vec<f64>,
}

impl TabularData {
    pub fn informative_indices(&self) -> Vec<usize> {
        self.informative
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Uniform `[0, 1)` columns; informative columns sit at seeded random
/// positions and combine with positive weights in `[0.5, 1.5)`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> TabularData {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_cols = spec.n_informative + spec.n_distractor;
    let mut columns: Vec<usize> = (0..n_cols).collect();
    columns.shuffle(&mut rng);
    let mut informative = alloc::vec![false; n_cols];
    let mut weights = alloc::vec![0.0; n_cols];
    for &c in &columns[..spec.n_informative] {
        informative[c] = true;
        weights[c] = rng.random_range(0.5..1.5);
    }
    let weight_sum: f64 = weights.iter().sum();

    let noise =
        Normal::new(0.0, spec.noise_sd.max(0.0)).unwrap_or_else(|_| Normal::new(0.0, 0.0).unwrap());
    let mut data = Vec::with_capacity(spec.n_samples * n_cols);
    let mut y = Vec::with_capacity(spec.n_samples);
    for _ in 0..spec.n_samples {
        let row: Vec<f64> = (0..n_cols).map(|_| rng.random::<f64>()).collect();
        let s = if weight_sum > 0.0 {
            row.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / weight_sum
        } else {
            0.5
        };
        let clean = match spec.target_fn {
            TargetFn::Linear => 0.2 + 0.6 * s,
            TargetFn::Sigmoid => 1.0 / (1.0 + math::exp(-6.0 * (s - 0.5))),
        };
        let e = if spec.noise_sd > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        y.push((clean + e).clamp(0.0, 1.0));
        data.extend(row);
    }
    TabularData {
        x: Matrix::from_vec(spec.n_samples, n_cols, data),
        y,
        feature_names: (0..n_cols).map(|c| format!("x{c}")).collect(),
        informative,
        weights,
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, options: &[T]) -> T {
    options[rng.random_range(0..options.len())]
}

fn random_scheme(rng: &mut ChaCha8Rng, name: String) -> ArchitectureScheme {
    let d = |out_width, kernel, stride, skip| LayerDescription {
        in_width: None,
        out_width,
        kernel,
        stride,
        skip,
    };
    let mut layers = alloc::vec![
        d(16, 3, 1, false),
        d(pick(rng, &[16, 24]), 3, pick(rng, &[1, 2]), false),
        d(
            pick(rng, &[16, 24, 32]),
            pick(rng, &[1, 3]),
            pick(rng, &[1, 2]),
            rng.random_bool(0.5)
        ),
        d(
            pick(rng, &[32, 40]),
            pick(rng, &[1, 3]),
            pick(rng, &[1, 2]),
            rng.random_bool(0.5)
        ),
    ];
    if rng.random_bool(0.3) {
        layers.push(d(pick(rng, &[48, 64]), 3, 1, false));
    }
    ArchitectureScheme::from_descriptions(name, DEFAULT_INPUT, &layers)
        .expect("generator emits valid schemes")
}

/// NAAP-440e shaped dataset: random schemes from a NAAP-like generator,
/// nine epochs of noisy learning curves and a final accuracy that depends
/// on capacity, lost receptive field and skips. Accuracies are distinct.
pub fn generate_naap_like(n_records: usize, seed: u64) -> Dataset {
    generate_naap_like_with_schemes(n_records, seed).0
}

/// [`generate_naap_like`] together with the generated schemes, one per
/// record and named by record id.
pub fn generate_naap_like_with_schemes(
    n_records: usize,
    seed: u64,
) -> (Dataset, Vec<ArchitectureScheme>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let schemes: Vec<ArchitectureScheme> = (0..n_records)
        .map(|i| random_scheme(&mut rng, format!("arch_{i:03}")))
        .collect();
    let features: Vec<_> = schemes
        .iter()
        .map(|s| scheme_feature_vector(s, StageRule::default()))
        .collect();

    let raw: Vec<f64> = features
        .iter()
        .map(|f| {
            0.9 * math::ln(f.num_params as f64) + 0.4 * math::ln(f.num_macs as f64)
                - 0.8 * f.num_lost_rf_layers as f64
                + 0.3 * f.num_skip_connections as f64
                + 0.4 * unit.sample(&mut rng)
        })
        .collect();
    let n = raw.len().max(1) as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let sd = math::sqrt(raw.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).max(1e-12);

    let mut records = Vec::with_capacity(n_records);
    for (i, (scheme, feats)) in schemes.iter().zip(&features).enumerate() {
        let z = (raw[i] - mean) / sd;
        // index-dependent jitter below 1e-9 keeps accuracies distinct
        let gt = 0.6 + 0.3 / (1.0 + math::exp(-1.5 * z)) + i as f64 * 1e-10;
        let tau = 2.0 + 2.0 * rng.random::<f64>();
        let epochs = (1..=9)
            .map(|e| {
                let progress = 1.0 - math::exp(-(e as f64) / tau);
                let test = (gt * (0.6 + 0.4 * progress)
                    + 0.02 / math::sqrt(e as f64) * unit.sample(&mut rng))
                .clamp(0.0, 1.0);
                let train =
                    (test + 0.01 * e as f64 / 9.0 + 0.01 * unit.sample(&mut rng)).clamp(0.0, 1.0);
                let loss = (1.5 * -math::ln((train - 0.05).max(0.05))
                    + 0.02 * unit.sample(&mut rng))
                .max(0.0);
                EpochMetrics {
                    train_loss: loss,
                    train_accuracy: train,
                    test_accuracy: test,
                }
            })
            .collect();
        records.push(ArchRecord {
            id: String::from(scheme.name()),
            scheme: *feats,
            epochs,
            gt_accuracy: gt,
        });
    }
    (
        Dataset::new(records).expect("generator respects dataset invariants"),
        schemes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seed: u64, noise_sd: f64) -> SyntheticSpec {
        SyntheticSpec {
            n_samples: 50,
            n_informative: 3,
            n_distractor: 12,
            target_fn: TargetFn::Linear,
            noise_sd,
            seed,
        }
    }

    #[test]
    fn noiseless_linear_is_reproducible_from_informative_columns() {
        let d = generate_synthetic(&spec(3, 0.0));
        let wsum: f64 = d.weights.iter().sum();
        for r in 0..d.x.rows() {
            let s: f64 =
                d.x.row(r)
                    .iter()
                    .zip(&d.weights)
                    .map(|(x, w)| x * w)
                    .sum::<f64>()
                    / wsum;
            assert!((d.y[r] - (0.2 + 0.6 * s)).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_and_shaped() {
        assert_eq!(
            generate_synthetic(&spec(9, 0.01)),
            generate_synthetic(&spec(9, 0.01))
        );
        assert_ne!(
            generate_synthetic(&spec(9, 0.01)),
            generate_synthetic(&spec(10, 0.01))
        );
        let d = generate_synthetic(&spec(9, 0.0));
        assert_eq!(d.x.cols(), 15);
        assert_eq!(d.informative.iter().filter(|&&b| b).count(), 3);
        assert_eq!(d.informative_indices().len(), 3);
        let sig = generate_synthetic(&SyntheticSpec {
            target_fn: TargetFn::Sigmoid,
            ..spec(9, 0.5)
        });
        assert!(sig.y.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn naap_like_is_valid_and_distinct() {
        let ds = generate_naap_like(440, 1);
        assert_eq!(ds.len(), 440);
        assert_eq!(ds.max_level(), 9);
        let mut acc = ds.targets();
        acc.sort_by(f64::total_cmp);
        assert!(acc.windows(2).all(|w| w[0] < w[1]));
        assert!(ds
            .records()
            .iter()
            .all(|r| r.scheme.num_skip_connections <= 1 && r.scheme.num_lost_rf_layers <= 2));
        assert_eq!(generate_naap_like(20, 5), generate_naap_like(20, 5));
    }
}
