use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use naap::core::dataset::{generate_naap_like_with_schemes, Dataset, SplitKind};
use naap::core::featsel::SearchConfig;
use naap::core::metrics::{format_cell, CostFunction};
use naap::core::regressors::full_grid;
use naap::error::{Error, Result};
use naap::harness::{
    self, cell_seed, default_grid, emit_importance, level_data, run_cell, select_specs,
    split_dataset, write_outputs, ExperimentConfig, Manifest, OutputFormats, Report, ReportKind,
    TraceFile,
};
use naap::io::{self, AliasTable, CsvLayout};

#[derive(Parser)]
#[command(
    name = "naap",
    version,
    about = "Architecture accuracy-prediction benchmark harness"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Add the skip-connection and lost-receptive-field columns to a six-feature CSV.
    Extend {
        /// Scheme documents (JSON array or JSON lines).
        #[arg(long)]
        schemes: PathBuf,
        /// Six-feature dataset CSV.
        #[arg(long)]
        dataset: PathBuf,
        /// Where to write the extended CSV.
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        aliases: Option<PathBuf>,
    },
    /// Full regressor grid on the uniform split.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Score all features only.
        #[arg(long)]
        no_featsel: bool,
        /// Comma-separated algorithm labels to run (default: whole grid).
        #[arg(long, value_delimiter = ',')]
        algos: Vec<String>,
    },
    /// All-features vs selected-subset comparison on the uniform split.
    Ablation {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        algos: Vec<String>,
    },
    /// Linear regressors on an extrapolation split.
    Extrapolate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kind: SplitKind,
        #[arg(long)]
        no_featsel: bool,
        /// Allow tree-based algorithms in `--algos`.
        #[arg(long)]
        force_trees: bool,
        /// Labels from the full grid (default: the linear variants).
        #[arg(long, value_delimiter = ',')]
        algos: Vec<String>,
    },
    /// One feature-subset search; writes its trace.
    Featsel {
        #[command(flatten)]
        common: Common,
        /// Algorithm label, e.g. "Gradient Boosting (N=200)".
        #[arg(long)]
        algo: String,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value = "uniform")]
        split: SplitKind,
    },
    /// Feature selection rates from search traces.
    Importance {
        /// Directory searched recursively for trace JSON files.
        #[arg(long)]
        traces: PathBuf,
        /// Fraction of lowest-cost subsets kept.
        #[arg(long, default_value_t = 0.08)]
        top: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a NAAP-440e shaped dataset for testing.
    Synth {
        #[arg(long, default_value_t = 440)]
        records: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Full dataset CSV.
        #[arg(long)]
        output: PathBuf,
        /// Also write the scheme documents (JSON lines).
        #[arg(long)]
        schemes: Option<PathBuf>,
        /// Also write the six-feature CSV that `extend` consumes.
        #[arg(long)]
        base: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Dataset CSV.
    #[arg(long)]
    dataset: PathBuf,
    /// JSON object mapping extra header names to canonical ones.
    #[arg(long)]
    aliases: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "sqrt_rounded")]
    cost: CostFunction,
    /// Descent steps per feature.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Maximum evaluations per descent step per feature.
    #[arg(long, default_value_t = 3)]
    branch: usize,
    /// Re-evaluate subsets that were already scored.
    #[arg(long)]
    no_dedup: bool,
    /// Feed raw features to k-NN and linear models.
    #[arg(long)]
    no_standardize: bool,
    #[arg(long, default_value = "all")]
    format: OutputFormats,
    /// Epoch levels to evaluate.
    #[arg(long, value_delimiter = ',', default_values_t = [0, 3, 6, 9])]
    levels: Vec<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<Dataset> {
        let aliases = load_aliases(self.aliases.as_deref())?;
        Ok(io::load_csv(&self.dataset, &aliases)?)
    }

    fn search(&self) -> SearchConfig {
        SearchConfig {
            p: self.p,
            b: self.branch,
            cost_variant: self.cost,
            seed: self.seed,
            dedup: !self.no_dedup,
        }
    }

    fn experiment(
        &self,
        split: SplitKind,
        specs: Vec<naap::core::RegressorSpec>,
        featsel: bool,
    ) -> ExperimentConfig {
        ExperimentConfig {
            split,
            levels: self.levels.clone(),
            specs,
            search: self.search(),
            featsel,
            seed: self.seed,
            standardize: !self.no_standardize,
            force_trees: false,
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(Error::Usage("--threads must be at least 1".into()));
            }
            builder = builder.num_threads(n);
        }
        builder.build().map_err(|e| Error::Internal(e.to_string()))
    }
}

fn load_aliases(path: Option<&Path>) -> Result<AliasTable> {
    Ok(match path {
        Some(p) => AliasTable::from_json_file(p)?,
        None => AliasTable::default(),
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<serde_json::Value> {
    serde_json::to_value(value).map_err(|e| Error::Internal(e.to_string()))
}

type Runner = fn(&Dataset, &ExperimentConfig) -> Result<(Report, harness::GridRun)>;

fn run_experiment(
    common: &Common,
    command: &str,
    stem: &str,
    config: ExperimentConfig,
    runner: Runner,
) -> Result<()> {
    let dataset = common.load()?;
    let (report, run) = common.pool()?.install(|| runner(&dataset, &config))?;
    let artifacts = write_outputs(&report, &run, &dataset, &common.out, stem, common.format)?;
    let mut manifest = Manifest::new(command, common.seed, to_json(&config)?);
    manifest.add_input(&common.dataset)?;
    manifest.artifacts = artifacts;
    let path = manifest.write(&common.out, stem)?;
    print!("{}", report.to_markdown());
    log::info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extend {
            schemes,
            dataset,
            output,
            aliases,
        } => {
            let schemes = io::load_schemes(&schemes)?;
            let extended = io::extend(&dataset, &schemes, &load_aliases(aliases.as_deref())?)?;
            io::write_csv(&extended, &output, CsvLayout::Full)?;
            eprintln!("{} records written to {}", extended.len(), output.display());
            Ok(())
        }
        Command::Baseline {
            common,
            no_featsel,
            algos,
        } => {
            let specs = select_specs(default_grid(ReportKind::Baseline, common.seed), &algos)?;
            let config = common.experiment(SplitKind::Uniform, specs, !no_featsel);
            run_experiment(
                &common,
                "baseline",
                "baseline",
                config,
                harness::run_baseline,
            )
        }
        Command::Ablation { common, algos } => {
            let specs = select_specs(default_grid(ReportKind::Ablation, common.seed), &algos)?;
            let config = common.experiment(SplitKind::Uniform, specs, true);
            run_experiment(
                &common,
                "ablation",
                "ablation",
                config,
                harness::run_ablation,
            )
        }
        Command::Extrapolate {
            common,
            kind,
            no_featsel,
            force_trees,
            algos,
        } => {
            let specs = if algos.is_empty() {
                default_grid(ReportKind::Extrapolation, common.seed)
            } else {
                select_specs(full_grid(common.seed), &algos)?
            };
            let config = ExperimentConfig {
                force_trees,
                ..common.experiment(kind, specs, !no_featsel)
            };
            let stem = format!("extrapolation_{kind}");
            run_experiment(
                &common,
                "extrapolate",
                &stem,
                config,
                harness::run_extrapolation,
            )
        }
        Command::Featsel {
            common,
            algo,
            level,
            split,
        } => featsel(&common, &algo, level, split),
        Command::Importance { traces, top, out } => {
            let files = trace_files(&traces)?;
            let loaded = files
                .iter()
                .map(|p| TraceFile::read(p))
                .collect::<Result<Vec<_>, _>>()?;
            let path = out.join("importance.csv");
            emit_importance(&loaded, top, &path)?;
            eprintln!("{} traces summarized in {}", loaded.len(), path.display());
            Ok(())
        }
        Command::Synth {
            records,
            seed,
            output,
            schemes,
            base,
        } => {
            let (dataset, generated) = generate_naap_like_with_schemes(records, seed);
            io::write_csv(&dataset, &output, CsvLayout::Full)?;
            if let Some(p) = schemes {
                io::write_schemes_jsonl(&generated, &p)?;
            }
            if let Some(p) = base {
                io::write_csv(&dataset, &p, CsvLayout::Base)?;
            }
            eprintln!("{records} records written to {}", output.display());
            Ok(())
        }
    }
}

fn featsel(common: &Common, algo: &str, level: usize, split_kind: SplitKind) -> Result<()> {
    let dataset = common.load()?;
    let spec = *select_specs(full_grid(common.seed), &[algo.to_string()])?
        .first()
        .expect("one label selected");
    if level > dataset.max_level() {
        return Err(Error::Usage(format!(
            "level {level} requested but the dataset has {} epochs",
            dataset.max_level()
        )));
    }
    let split = split_dataset(&dataset, split_kind)?;
    let data = level_data(&dataset, &split, level)?;
    let label = spec.label();
    let spec = spec
        .with_seed(cell_seed(common.seed, split_kind, &label, level, "model"))
        .with_standardize(!common.no_standardize);
    let search = SearchConfig {
        seed: cell_seed(common.seed, split_kind, &label, level, "search"),
        ..common.search()
    };
    search.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let cell = common
        .pool()?
        .install(|| run_cell(&data, spec, Some(&search), common.cost))?;
    let trace = cell
        .trace
        .clone()
        .ok_or_else(|| Error::Internal("search produced no trace".into()))?;
    let selection = cell
        .selection
        .as_ref()
        .ok_or_else(|| Error::Internal("search produced no selection".into()))?;

    let file = TraceFile {
        algorithm: label.clone(),
        level,
        feature_names: data.feature_names.clone(),
        trace,
    };
    let rel = format!("traces/featsel/{}_L{level}.json", harness::slug(&label));
    let json = serde_json::to_vec(&file).map_err(|e| Error::Internal(e.to_string()))?;
    io::write_file(&common.out.join(&rel), &json)?;

    let mut manifest = Manifest::new(
        "featsel",
        common.seed,
        to_json(&(&label, level, split_kind, &search))?,
    );
    manifest.add_input(&common.dataset)?;
    manifest.artifacts.push(harness::Artifact::of(&rel, &json));
    manifest.write(
        &common.out,
        &format!("featsel_{}_L{level}", harness::slug(&label)),
    )?;

    let names: Vec<&str> = selection
        .mask
        .indices()
        .iter()
        .map(|&i| data.feature_names[i].as_str())
        .collect();
    println!("{label} @ {level} epochs, {split_kind} split");
    println!("all features:  {}", format_cell(&cell.all_features));
    println!(
        "best subset:   {}  ({} of {})",
        format_cell(&selection.result),
        names.len(),
        data.n_features()
    );
    println!("features:      {}", names.join(", "));
    println!(
        "evaluations:   {}  steps: {}",
        file.trace.evaluations.len(),
        file.trace.steps.len()
    );
    Ok(())
}

fn trace_files(dir: &Path) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else if path.extension().is_some_and(|e| e == "json") {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, &mut files).map_err(|source| naap::DataError::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    files.sort();
    Ok(files)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(naap::ExitCode::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
