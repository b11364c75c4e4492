//! Budgeted best-first hill climbing over feature subsets.
//!
//! The search starts from the full feature set. Every descent step pops
//! all queued subsets that share the current best priority, evaluates up to
//! `b·|F|` of them (a seeded uniform sample when there are more, the rest
//! go back to the queue untouched) and queues each evaluated subset's
//! one-bit-flip neighbours with the subset's own cost as their priority.
//! The search stops after `p·|F|` descent steps or when the queue runs dry.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::math;
use crate::metrics::{self, CostFunction, EvalResult, MetricsError};

/// Widest feature set a mask can describe.
pub const MAX_FEATURES: usize = 64;
/// Widest feature set [`exhaustive_search`] accepts.
pub const MAX_EXHAUSTIVE_FEATURES: usize = 16;

/// Non-empty subset of `len` features; bit `i` selects feature `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask {
    len: u8,
    bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("feature count {0} outside 1..=64")]
    BadLength(usize),
    #[error("a feature mask must select at least one feature")]
    Empty,
    #[error("bit {bit} set beyond the {len} features")]
    OutOfRange { bit: usize, len: usize },
    #[error("invalid character {0:?} in mask string")]
    BadChar(char),
}

impl FeatureMask {
    fn width_mask(len: usize) -> u64 {
        if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        }
    }

    pub fn full(len: usize) -> Result<Self, MaskError> {
        if !(1..=MAX_FEATURES).contains(&len) {
            return Err(MaskError::BadLength(len));
        }
        Ok(Self {
            len: len as u8,
            bits: Self::width_mask(len),
        })
    }

    pub fn from_bits(bits: u64, len: usize) -> Result<Self, MaskError> {
        if !(1..=MAX_FEATURES).contains(&len) {
            return Err(MaskError::BadLength(len));
        }
        if bits & !Self::width_mask(len) != 0 {
            return Err(MaskError::OutOfRange {
                bit: 63 - bits.leading_zeros() as usize,
                len,
            });
        }
        if bits == 0 {
            return Err(MaskError::Empty);
        }
        Ok(Self {
            len: len as u8,
            bits,
        })
    }

    pub fn from_indices(indices: &[usize], len: usize) -> Result<Self, MaskError> {
        let mut bits = 0u64;
        for &i in indices {
            if i >= len.min(MAX_FEATURES) {
                return Err(MaskError::OutOfRange { bit: i, len });
            }
            bits |= 1 << i;
        }
        Self::from_bits(bits, len)
    }

    /// Parses a string of `0`/`1`, character `i` being feature `i`.
    pub fn parse_bit_string(s: &str) -> Result<Self, MaskError> {
        let mut bits = 0u64;
        let mut len = 0;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '1' if i < MAX_FEATURES => bits |= 1 << i,
                '0' => {}
                '1' => return Err(MaskError::BadLength(i + 1)),
                other => return Err(MaskError::BadChar(other)),
            }
            len = i + 1;
        }
        Self::from_bits(bits, len)
    }

    pub fn bit_string(&self) -> String {
        (0..self.len())
            .map(|i| if self.contains(i) { '1' } else { '0' })
            .collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        usize::from(self.len)
    }

    /// Always false; masks are never empty. Present for API symmetry with `len`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn contains(&self, feature: usize) -> bool {
        feature < self.len() && self.bits >> feature & 1 == 1
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.contains(i)).collect()
    }

    /// Mask with feature `i` toggled, or `None` if that would empty it.
    pub fn flip(&self, feature: usize) -> Option<Self> {
        let bits = self.bits ^ (1 << feature);
        (feature < self.len() && bits != 0).then_some(Self {
            len: self.len,
            bits,
        })
    }

    /// Order used to break cost ties: fewer features first, then the
    /// lexicographically smaller list of selected indices.
    pub fn simplicity_cmp(&self, other: &Self) -> Ordering {
        self.count()
            .cmp(&other.count())
            .then_with(|| self.indices().cmp(&other.indices()))
    }
}

impl fmt::Debug for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureMask({})", self.bit_string())
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bit_string())
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.bit_string())
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse_bit_string(&s).map_err(serde::de::Error::custom)
    }
}

/// All masks at Hamming distance one, ascending by flipped bit, without
/// the empty mask.
pub fn neighbors(mask: FeatureMask) -> Vec<FeatureMask> {
    (0..mask.len()).filter_map(|i| mask.flip(i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Descent steps per feature.
    pub p: f64,
    /// Evaluations per descent step per feature.
    pub b: usize,
    pub cost_variant: CostFunction,
    pub seed: u64,
    /// Skip subsets that were already evaluated.
    pub dedup: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            b: 3,
            cost_variant: CostFunction::SqrtRounded,
            seed: 0,
            dedup: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(ConfigError::StepMultiplier(self.p));
        }
        if self.b == 0 {
            return Err(ConfigError::ZeroBranching);
        }
        Ok(())
    }

    /// `⌊p·|F|⌋`
    pub fn max_steps(&self, n_features: usize) -> usize {
        math::floor(self.p * n_features as f64) as usize
    }

    /// `b·|F|`
    pub fn step_capacity(&self, n_features: usize) -> usize {
        self.b * n_features
    }

    /// `1 + p·|F|·b·|F|`, the most evaluations a search can perform.
    pub fn evaluation_budget(&self, n_features: usize) -> usize {
        1 + self.max_steps(n_features) * self.step_capacity(n_features)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("step multiplier p must be positive and finite, got {0}")]
    StepMultiplier(f64),
    #[error("branching factor b must be at least 1")]
    ZeroBranching,
}

/// Scores one feature subset. Only `mae`, `violations` and `n_test` of the
/// result are used; the search derives `monotonicity` and `cost` itself.
pub trait SubsetEvaluator {
    type Error;

    fn evaluate(&self, mask: FeatureMask) -> Result<EvalResult, Self::Error>;

    /// Scores a batch. Implementations may run in parallel but must return
    /// results in input order.
    fn evaluate_many(&self, masks: &[FeatureMask]) -> Vec<Result<EvalResult, Self::Error>> {
        masks.iter().map(|&m| self.evaluate(m)).collect()
    }
}

impl<F, E> SubsetEvaluator for F
where
    F: Fn(FeatureMask) -> Result<EvalResult, E>,
{
    type Error = E;

    fn evaluate(&self, mask: FeatureMask) -> Result<EvalResult, E> {
        self(mask)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub mask: FeatureMask,
    pub result: EvalResult,
    /// Descent step that evaluated the mask; 0 is the initial full set.
    pub step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Shared priority (parent cost) of the dequeued group.
    pub priority: f64,
    pub dequeued: usize,
    /// Dequeued masks dropped because they were already evaluated.
    pub duplicates: usize,
    pub evaluated: usize,
    /// Masks returned to the queue by stochastic pruning.
    pub pruned: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub n_features: usize,
    pub config: SearchConfig,
    pub evaluations: Vec<EvaluationRecord>,
    pub steps: Vec<StepRecord>,
    pub best: Option<EvaluationRecord>,
}

impl SearchTrace {
    fn new(n_features: usize, config: SearchConfig) -> Self {
        Self {
            n_features,
            config,
            evaluations: Vec::new(),
            steps: Vec::new(),
            best: None,
        }
    }

    fn record(&mut self, rec: EvaluationRecord) {
        if self.best.is_none_or(|b| rec.result.cost < b.result.cost) {
            self.best = Some(rec);
        }
        self.evaluations.push(rec);
    }

    /// Result for the full feature set (always the first evaluation).
    pub fn full_mask_result(&self) -> Option<&EvaluationRecord> {
        self.evaluations.first()
    }

    /// `(mask, cost)` of every evaluation in order.
    pub fn costs(&self) -> impl Iterator<Item = (FeatureMask, f64)> + '_ {
        self.evaluations.iter().map(|e| (e.mask, e.result.cost))
    }
}

#[derive(Debug, Error)]
pub enum SearchFailure<E> {
    #[error("evaluator failed on {mask}: {source}")]
    Evaluator { mask: FeatureMask, source: E },
    #[error("cost of {mask}: {source}")]
    Metrics {
        mask: FeatureMask,
        source: MetricsError,
    },
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// A failed search with everything evaluated up to the failure.
#[derive(Debug, Error)]
#[error("{failure}")]
pub struct SearchError<E> {
    pub failure: SearchFailure<E>,
    pub partial: Box<SearchTrace>,
}

struct Entry {
    priority: f64,
    order: u64,
    mask: FeatureMask,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // BinaryHeap is a max-heap: invert so the lowest priority, then the
    // earliest insertion, comes out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.order.cmp(&self.order))
    }
}

struct Queue {
    heap: BinaryHeap<Entry>,
    next: u64,
}

impl Queue {
    fn push(&mut self, mask: FeatureMask, priority: f64) {
        self.heap.push(Entry {
            priority,
            order: self.next,
            mask,
        });
        self.next += 1;
    }

    fn pop_best_group(&mut self) -> Option<(f64, Vec<Entry>)> {
        let first = self.heap.pop()?;
        let priority = first.priority;
        let mut group = alloc::vec![first];
        while self
            .heap
            .peek()
            .is_some_and(|e| e.priority.total_cmp(&priority) == Ordering::Equal)
        {
            group.extend(self.heap.pop());
        }
        Some((priority, group))
    }
}

/// Finalizes an evaluator result under `variant`.
fn score(raw: EvalResult, variant: CostFunction) -> Result<EvalResult, MetricsError> {
    let monotonicity = metrics::monotonicity_score(raw.violations, raw.n_test)?;
    let rate = raw.violations as f64 / metrics::pair_count(raw.n_test) as f64;
    let cost = metrics::cost(raw.mae, rate, variant)?;
    Ok(EvalResult {
        monotonicity,
        cost,
        ..raw
    })
}

/// Runs the budgeted best-first hill climb from the full feature set.
pub fn hill_climb<V: SubsetEvaluator>(
    evaluator: &V,
    n_features: usize,
    config: &SearchConfig,
) -> Result<SearchTrace, SearchError<V::Error>> {
    let mut trace = SearchTrace::new(n_features, *config);
    if let Err(e) = config.validate() {
        return Err(SearchError {
            failure: e.into(),
            partial: Box::new(trace),
        });
    }
    let full = match FeatureMask::full(n_features) {
        Ok(m) => m,
        Err(e) => {
            return Err(SearchError {
                failure: e.into(),
                partial: Box::new(trace),
            })
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut queue = Queue {
        heap: BinaryHeap::new(),
        next: 0,
    };
    let mut seen: BTreeMap<FeatureMask, ()> = BTreeMap::new();
    let max_steps = config.max_steps(n_features);
    let capacity = config.step_capacity(n_features).max(1);

    queue.push(full, f64::NEG_INFINITY);
    let mut step = 0;
    while let Some((priority, group)) = queue.pop_best_group() {
        let is_root = priority == f64::NEG_INFINITY;
        if !is_root && step >= max_steps {
            break;
        }
        let dequeued = group.len();
        let mut candidates: Vec<Entry> = Vec::with_capacity(group.len());
        let mut in_group: BTreeMap<FeatureMask, ()> = BTreeMap::new();
        for e in group {
            let fresh = !config.dedup
                || (!seen.contains_key(&e.mask) && in_group.insert(e.mask, ()).is_none());
            if fresh {
                candidates.push(e);
            }
        }
        let duplicates = dequeued - candidates.len();
        if candidates.is_empty() {
            continue;
        }

        let mut pruned = 0;
        if candidates.len() > capacity {
            let keep = rand::seq::index::sample(&mut rng, candidates.len(), capacity);
            let mut chosen = alloc::vec![false; candidates.len()];
            for i in keep.iter() {
                chosen[i] = true;
            }
            let mut kept = Vec::with_capacity(capacity);
            for (e, c) in candidates.into_iter().zip(chosen) {
                if c {
                    kept.push(e);
                } else {
                    pruned += 1;
                    queue.heap.push(e);
                }
            }
            candidates = kept;
        }

        let this_step = if is_root { 0 } else { step + 1 };
        let mut masks: Vec<FeatureMask> = candidates.iter().map(|e| e.mask).collect();
        masks.sort_unstable();
        let results = evaluator.evaluate_many(&masks);
        for (mask, raw) in masks.iter().copied().zip(results) {
            let raw = match raw {
                Ok(r) => r,
                Err(source) => {
                    return Err(SearchError {
                        failure: SearchFailure::Evaluator { mask, source },
                        partial: Box::new(trace),
                    })
                }
            };
            let result = match score(raw, config.cost_variant) {
                Ok(r) => r,
                Err(source) => {
                    return Err(SearchError {
                        failure: SearchFailure::Metrics { mask, source },
                        partial: Box::new(trace),
                    })
                }
            };
            seen.insert(mask, ());
            trace.record(EvaluationRecord {
                mask,
                result,
                step: this_step,
            });
            for nb in neighbors(mask) {
                if !config.dedup || !seen.contains_key(&nb) {
                    queue.push(nb, result.cost);
                }
            }
        }
        if !is_root {
            step += 1;
            trace.steps.push(StepRecord {
                step,
                priority,
                dequeued,
                duplicates,
                evaluated: masks.len(),
                pruned,
            });
        }
    }
    Ok(trace)
}

/// Result of evaluating every non-empty subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveResult {
    pub best: EvaluationRecord,
    /// One record per non-empty mask, ascending by mask bits.
    pub table: Vec<EvaluationRecord>,
}

/// Evaluates all `2^|F| − 1` subsets (`|F| ≤ 16`). Cost ties go to the
/// subset with fewer features, then to the lexicographically smaller list
/// of feature indices.
pub fn exhaustive_search<V: SubsetEvaluator>(
    evaluator: &V,
    n_features: usize,
    variant: CostFunction,
) -> Result<ExhaustiveResult, SearchFailure<V::Error>> {
    if n_features == 0 || n_features > MAX_EXHAUSTIVE_FEATURES {
        return Err(MaskError::BadLength(n_features).into());
    }
    let masks: Vec<FeatureMask> = (1u64..1 << n_features)
        .map(|b| FeatureMask::from_bits(b, n_features))
        .collect::<Result<_, _>>()?;
    let results = evaluator.evaluate_many(&masks);
    let mut table = Vec::with_capacity(masks.len());
    for (mask, raw) in masks.into_iter().zip(results) {
        let raw = raw.map_err(|source| SearchFailure::Evaluator { mask, source })?;
        let result =
            score(raw, variant).map_err(|source| SearchFailure::Metrics { mask, source })?;
        table.push(EvaluationRecord {
            mask,
            result,
            step: 0,
        });
    }
    let best = *table
        .iter()
        .min_by(|a, b| {
            a.result
                .cost
                .total_cmp(&b.result.cost)
                .then_with(|| a.mask.simplicity_cmp(&b.mask))
        })
        .expect("at least one mask");
    Ok(ExhaustiveResult { best, table })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImportanceError {
    #[error("no evaluated subsets to pool")]
    EmptyPool,
    #[error("top fraction {0} outside (0, 1]")]
    BadFraction(f64),
}

/// Per-feature selection rates among the best subsets of a pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRates {
    pub pooled: usize,
    pub kept: usize,
    /// `eligible[f]`: kept masks wide enough to contain feature `f`.
    pub eligible: Vec<usize>,
    /// `rates[f]`: share of the eligible masks that select `f` (0 when
    /// none are eligible).
    pub rates: Vec<f64>,
}

/// Pools every evaluated `(mask, cost)` of `traces`, keeps the
/// `⌈top_fraction · pool⌉` cheapest (stable on ties) and reports how often
/// each feature is selected. Features are indexed up to the widest pooled
/// mask.
pub fn feature_importance(
    traces: &[&SearchTrace],
    top_fraction: f64,
) -> Result<ImportanceRates, ImportanceError> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(ImportanceError::BadFraction(top_fraction));
    }
    let mut pool: Vec<(FeatureMask, f64)> = traces.iter().flat_map(|t| t.costs()).collect();
    if pool.is_empty() {
        return Err(ImportanceError::EmptyPool);
    }
    let width = pool.iter().map(|(m, _)| m.len()).max().unwrap_or(0);
    pool.sort_by(|a, b| a.1.total_cmp(&b.1));
    // guard against 0.08·25 = 2.0000000000000004 rounding up to 3
    let keep = (math::ceil(top_fraction * pool.len() as f64 - 1e-9) as usize).clamp(1, pool.len());
    let kept = &pool[..keep];
    let eligible: Vec<usize> = (0..width)
        .map(|f| kept.iter().filter(|(m, _)| m.len() > f).count())
        .collect();
    let rates = (0..width)
        .map(|f| {
            let selected = kept.iter().filter(|(m, _)| m.contains(f)).count();
            if eligible[f] == 0 {
                0.0
            } else {
                selected as f64 / eligible[f] as f64
            }
        })
        .collect();
    Ok(ImportanceRates {
        pooled: pool.len(),
        kept: keep,
        eligible,
        rates,
    })
}
