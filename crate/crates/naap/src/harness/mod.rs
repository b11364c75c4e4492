//! Experiment grids: every (regressor, acceleration level) cell is fitted on
//! the training part of a split and scored on its test part, optionally
//! after a feature-subset search.

mod artifacts;
mod evaluator;
mod report;

use naap_core::dataset::{make_split, Dataset, Split, SplitKind, SplitMode, STANDARD_BIN_COUNT};
use naap_core::featsel::{hill_climb, FeatureMask, SearchConfig, SearchTrace, SubsetEvaluator};
use naap_core::metrics::{CostFunction, EvalResult};
use naap_core::regressors::{full_grid, linear_grid, Activation, Family, RegressorSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use artifacts::{
    emit_importance, emit_scatter, slug, write_outputs, Artifact, Manifest, OutputFormats,
    TraceFile,
};
pub use evaluator::{LevelData, MaskedEvaluator};
pub use report::{Placeholder, Report, ReportKind, ReportRow};

use crate::error::{DataError, Error, Result};

/// Settings shared by every experiment runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub split: SplitKind,
    pub levels: Vec<usize>,
    pub specs: Vec<RegressorSpec>,
    /// Search settings; `search.cost_variant` also scores rows without a search.
    pub search: SearchConfig,
    pub featsel: bool,
    pub seed: u64,
    pub standardize: bool,
    /// Run tree-based families on extrapolation splits anyway.
    pub force_trees: bool,
}

impl ExperimentConfig {
    pub fn new(split: SplitKind, specs: Vec<RegressorSpec>) -> Self {
        Self {
            split,
            levels: naap_core::dataset::ACCELERATION_LEVELS.to_vec(),
            specs,
            search: SearchConfig::default(),
            featsel: true,
            seed: 0,
            standardize: true,
            force_trees: false,
        }
    }

    pub fn cost(&self) -> CostFunction {
        self.search.cost_variant
    }

    fn validate(&self, dataset: &Dataset) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Usage(
                "at least one acceleration level is required".into(),
            ));
        }
        if let Some(&l) = self.levels.iter().find(|&&l| l > dataset.max_level()) {
            return Err(Error::Usage(format!(
                "level {l} requested but the dataset has {} epochs",
                dataset.max_level()
            )));
        }
        if self.specs.is_empty() {
            return Err(Error::Usage("no regressors selected".into()));
        }
        self.search
            .validate()
            .map_err(|e| Error::Usage(e.to_string()))
    }
}

/// The algorithms of the feature-selection ablation grid.
pub fn ablation_grid(seed: u64) -> Vec<RegressorSpec> {
    [
        RegressorSpec::knn(3),
        RegressorSpec::linear(Activation::PowQuarter),
        RegressorSpec::new(Family::DecisionTree),
        RegressorSpec::ensemble(Family::GradientBoosting, 200),
        RegressorSpec::ensemble(Family::AdaboostR2, 100),
        RegressorSpec::ensemble(Family::RandomForest, 200),
    ]
    .map(|s| s.with_seed(seed))
    .to_vec()
}

/// Keeps the specs whose label is listed, in grid order.
pub fn select_specs(grid: Vec<RegressorSpec>, labels: &[String]) -> Result<Vec<RegressorSpec>> {
    if labels.is_empty() {
        return Ok(grid);
    }
    if let Some(unknown) = labels
        .iter()
        .find(|l| !grid.iter().any(|s| &s.label() == *l))
    {
        let known: Vec<String> = grid.iter().map(RegressorSpec::label).collect();
        return Err(Error::Usage(format!(
            "unknown algorithm `{unknown}`; expected one of: {}",
            known.join(", ")
        )));
    }
    Ok(grid
        .into_iter()
        .filter(|s| labels.contains(&s.label()))
        .collect())
}

/// Seed for one cell, hashed from the run coordinates so that adding or
/// removing cells never changes the others.
pub fn cell_seed(global: u64, split: SplitKind, label: &str, level: usize, purpose: &str) -> u64 {
    let digest = Sha256::digest(format!("{global}/{split}/{label}/{level}/{purpose}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields 32 bytes"))
}

pub fn split_dataset(dataset: &Dataset, kind: SplitKind) -> Result<Split> {
    Ok(make_split(
        &dataset.targets(),
        kind,
        SplitMode::Strict,
        STANDARD_BIN_COUNT,
    )?)
}

pub fn level_data(dataset: &Dataset, split: &Split, level: usize) -> Result<LevelData> {
    let (x, y) = dataset.feature_matrix(level)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
    Ok(LevelData {
        level,
        feature_names: Dataset::feature_names(level),
        x_train: x.select_rows(&split.train_idx),
        y_train: pick(&split.train_idx),
        x_test: x.select_rows(&split.test_idx),
        y_test: pick(&split.test_idx),
    })
}

/// Best subset found by the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub mask: FeatureMask,
    pub result: EvalResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub label: String,
    pub spec: RegressorSpec,
    pub level: usize,
    pub n_features: usize,
    pub all_features: EvalResult,
    pub selection: Option<Selection>,
    /// Test predictions of the reported configuration.
    pub predictions: Vec<f64>,
    #[serde(skip)]
    pub trace: Option<SearchTrace>,
}

impl CellOutcome {
    /// The selected subset's result when a search ran, else all features.
    pub fn reported(&self) -> &EvalResult {
        self.selection
            .as_ref()
            .map_or(&self.all_features, |s| &s.result)
    }
}

/// Checks the step and evaluation budgets of a finished search.
pub fn check_budget(trace: &SearchTrace) -> Result<()> {
    let (n, cfg) = (trace.n_features, &trace.config);
    if trace.steps.len() > cfg.max_steps(n) || trace.evaluations.len() > cfg.evaluation_budget(n) {
        return Err(Error::Internal(format!(
            "search exceeded its budget: {} steps (max {}), {} evaluations (max {})",
            trace.steps.len(),
            cfg.max_steps(n),
            trace.evaluations.len(),
            cfg.evaluation_budget(n)
        )));
    }
    Ok(())
}

/// Runs one cell. `spec` and `search` must already carry the cell's seeds.
pub fn run_cell(
    data: &LevelData,
    spec: RegressorSpec,
    search: Option<&SearchConfig>,
    cost: CostFunction,
) -> Result<CellOutcome> {
    let evaluator = MaskedEvaluator { data, spec, cost };
    let n = data.n_features();
    let full = FeatureMask::full(n).map_err(|e| Error::Internal(e.to_string()))?;
    let (all_features, selection, trace) = match search {
        None => (evaluator.evaluate(full)?, None, None),
        Some(cfg) => {
            let trace = hill_climb(&evaluator, n, cfg).map_err(|e| {
                let failed_after = e.partial.evaluations.len();
                match e.failure {
                    naap_core::featsel::SearchFailure::Evaluator { source, .. } => {
                        Error::Data(source)
                    }
                    naap_core::featsel::SearchFailure::Metrics { source, .. } => {
                        Error::Data(DataError::Metrics(source))
                    }
                    other => Error::Internal(format!(
                        "search failed after {failed_after} evaluations: {other}"
                    )),
                }
            })?;
            check_budget(&trace)?;
            let first = *trace
                .full_mask_result()
                .ok_or_else(|| Error::Internal("empty search trace".into()))?;
            let best = trace
                .best
                .ok_or_else(|| Error::Internal("search recorded no best subset".into()))?;
            (
                first.result,
                Some(Selection {
                    mask: best.mask,
                    result: best.result,
                }),
                Some(trace),
            )
        }
    };
    let mask = selection.as_ref().map_or(full, |s| s.mask);
    let predictions = evaluator.predictions(mask)?;
    Ok(CellOutcome {
        label: spec.label(),
        spec,
        level: data.level,
        n_features: n,
        all_features,
        selection,
        predictions,
        trace,
    })
}

/// Cells of a finished grid with the split they were scored on.
#[derive(Debug, Clone)]
pub struct GridRun {
    pub config: ExperimentConfig,
    pub split: Split,
    /// Spec-major, level-minor, in configuration order.
    pub cells: Vec<CellOutcome>,
}

impl GridRun {
    pub fn traces(&self) -> impl Iterator<Item = (&CellOutcome, &SearchTrace)> {
        self.cells
            .iter()
            .filter_map(|c| c.trace.as_ref().map(|t| (c, t)))
    }
}

/// Fits every (spec, level) cell of `config` in parallel on the current
/// rayon pool. Results do not depend on the pool size.
pub fn run_grid(dataset: &Dataset, config: &ExperimentConfig) -> Result<GridRun> {
    config.validate(dataset)?;
    let split = split_dataset(dataset, config.split)?;
    let levels: Vec<LevelData> = config
        .levels
        .iter()
        .map(|&l| level_data(dataset, &split, l))
        .collect::<Result<_>>()?;
    let jobs: Vec<(RegressorSpec, &LevelData)> = config
        .specs
        .iter()
        .flat_map(|s| levels.iter().map(move |d| (*s, d)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(spec, data)| {
            let label = spec.label();
            let seeded = spec
                .with_seed(cell_seed(
                    config.seed,
                    config.split,
                    &label,
                    data.level,
                    "model",
                ))
                .with_standardize(config.standardize);
            let search = config.featsel.then(|| SearchConfig {
                seed: cell_seed(config.seed, config.split, &label, data.level, "search"),
                ..config.search
            });
            let cell = run_cell(data, seeded, search.as_ref(), config.cost())?;
            log::info!(
                "{label} @ {} epochs: {}",
                data.level,
                naap_core::metrics::format_cell(cell.reported())
            );
            Ok(cell)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridRun {
        config: config.clone(),
        split,
        cells,
    })
}

/// New-baseline grid on the uniform split; rows report the selected subset
/// when the search is on.
pub fn run_baseline(dataset: &Dataset, config: &ExperimentConfig) -> Result<(Report, GridRun)> {
    if config.split != SplitKind::Uniform {
        return Err(Error::Usage(
            "the baseline runs on the uniform split".into(),
        ));
    }
    let run = run_grid(dataset, config)?;
    Ok((Report::baseline(&run), run))
}

/// Same cells with the search forced on; each cell yields an all-features
/// row and a selected-subset row.
pub fn run_ablation(dataset: &Dataset, config: &ExperimentConfig) -> Result<(Report, GridRun)> {
    let config = ExperimentConfig {
        featsel: true,
        ..config.clone()
    };
    let run = run_grid(dataset, &config)?;
    Ok((Report::ablation(&run), run))
}

/// Linear-family grid on an extrapolation split.
pub fn run_extrapolation(
    dataset: &Dataset,
    config: &ExperimentConfig,
) -> Result<(Report, GridRun)> {
    if config.split == SplitKind::Uniform {
        return Err(Error::Usage(
            "extrapolation needs a left, right or dual split".into(),
        ));
    }
    let trees: Vec<String> = config
        .specs
        .iter()
        .filter(|s| s.family.is_tree_based())
        .map(RegressorSpec::label)
        .collect();
    if !trees.is_empty() {
        let msg = format!(
            "tree-based models cannot predict outside their training target range: {}",
            trees.join(", ")
        );
        if !config.force_trees {
            return Err(Error::Usage(format!(
                "{msg}; pass --force-trees to run them anyway"
            )));
        }
        log::warn!("{msg}");
    }
    let run = run_grid(dataset, config)?;
    Ok((Report::extrapolation(&run), run))
}

/// Default regressor grid for a report kind.
pub fn default_grid(kind: ReportKind, seed: u64) -> Vec<RegressorSpec> {
    match kind {
        ReportKind::Baseline => full_grid(seed),
        ReportKind::Ablation => ablation_grid(seed),
        ReportKind::Extrapolation => linear_grid(seed),
    }
}
