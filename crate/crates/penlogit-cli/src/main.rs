//! Command-line surface: fit, select and calibrate on CSV data, and run the
//! seeded Monte-Carlo benchmark with optional SVG output.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, unparsable
//! penalty/collection/truth specs), 2 on data errors (unreadable or invalid
//! input files, I/O failures).

mod ingest;
mod plot;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use penlogit::export::to_json;
use penlogit::regressogram::{
    best_irregular_partition, fit_regressogram, regular_collection, MaxDimRule, PartitionModel,
    RegressogramError,
};
use penlogit::selection::{
    dimension_jump, select, CalibrationResult, CriterionPath, KappaGrid, ModelFit, PenaltyConfig,
};
use penlogit::simulation::{run_benchmark_sweep, Scenario, TruthId};
use penlogit::{BinarySample, PenaltySpec};

use ingest::IngestError;
use plot::{PlotError, Series};

#[derive(Parser)]
#[command(
    name = "penlogit",
    version,
    about = "Penalized maximum-likelihood model selection for binary regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every model in a collection to a CSV dataset.
    Fit {
        /// CSV file with header "x,y".
        #[arg(long)]
        input: PathBuf,
        /// "regular" or "irregular:<maxD>:<minCell>".
        #[arg(long, default_value = "regular")]
        collection: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Fit a collection and pick the model minimizing contrast + penalty.
    Select {
        #[arg(long)]
        input: PathBuf,
        /// "aic" | "bic" | "lin:<c>" | "lin:auto" | "shape:<mu>" |
        /// "shape:auto" | "weighted:<mu>:<L|auto>"; auto variants calibrate
        /// the constant by the dimension jump.
        #[arg(long, default_value = "shape:auto")]
        penalty: String,
        #[arg(long, default_value = "regular")]
        collection: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Calibrate the shape-penalty constant by the dimension jump.
    Calibrate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "regular")]
        collection: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Seeded Monte-Carlo benchmark of selection rules against the oracle.
    Simulate {
        /// Mod1 | Mod2 | Mod3 | Mod4.
        #[arg(long)]
        truth: String,
        /// Sample size, or a comma-separated list for a sweep.
        #[arg(long)]
        n: String,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated penalty specs.
        #[arg(long, default_value = "aic,bic,lin:auto,shape:auto")]
        penalties: String,
        /// Report path (JSON); a CSV twin is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Optional SVG chart of C* against n.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PlotError> for CliError {
    fn from(e: PlotError) -> Self {
        match e {
            PlotError::EmptySeries => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Writes via a temp file in the same directory plus a rename, so readers
/// never observe a half-written file.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = configure_threads().and_then(|()| run(cli)) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("PENLOG_THREADS") {
        let threads: usize = v.parse().map_err(|_| {
            CliError::Usage(format!("PENLOG_THREADS must be a positive integer, got '{v}'"))
        })?;
        if threads == 0 {
            return Err(CliError::Usage("PENLOG_THREADS must be at least 1".into()));
        }
        // ignore the error when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

enum CollectionSpec {
    Regular,
    Irregular { max_dim: usize, min_cell: usize },
}

impl CollectionSpec {
    fn parse(s: &str) -> Result<Self, CliError> {
        if s == "regular" {
            return Ok(CollectionSpec::Regular);
        }
        let parts: Vec<&str> = s.split(':').collect();
        if let ["irregular", max_dim, min_cell] = parts.as_slice() {
            let max_dim: usize = max_dim
                .parse()
                .map_err(|_| CliError::Usage(format!("bad maxD in collection '{s}'")))?;
            let min_cell: usize = min_cell
                .parse()
                .map_err(|_| CliError::Usage(format!("bad minCell in collection '{s}'")))?;
            if max_dim == 0 || min_cell == 0 {
                return Err(CliError::Usage(format!("collection '{s}' needs positive parameters")));
            }
            return Ok(CollectionSpec::Irregular { max_dim, min_cell });
        }
        Err(CliError::Usage(format!(
            "cannot parse collection '{s}': expected 'regular' or 'irregular:<maxD>:<minCell>'"
        )))
    }
}

#[derive(Serialize, Clone)]
struct FitRecord {
    model_id: usize,
    kind: String,
    dimension: usize,
    contrast: f64,
    cell_probs: Vec<f64>,
    empty_cells: Vec<usize>,
    degenerate_cells: Vec<usize>,
    model: PartitionModel,
}

struct FittedCollection {
    records: Vec<FitRecord>,
    fits: Vec<ModelFit>,
}

fn fit_collection(sample: &BinarySample, spec: &CollectionSpec) -> Result<FittedCollection, CliError> {
    let n = sample.n();
    if n < 2 {
        return Err(CliError::Data("need at least 2 observations".into()));
    }
    let models: Vec<PartitionModel> = match spec {
        CollectionSpec::Regular => regular_collection(n, MaxDimRule::NOverLogN),
        CollectionSpec::Irregular { max_dim, min_cell } => {
            let mut models = Vec::new();
            for dim in 1..=*max_dim {
                match best_irregular_partition(sample, dim, *min_cell) {
                    Ok((model, _)) => models.push(model),
                    Err(RegressogramError::InfeasibleDimension { .. }) => break,
                    Err(e) => return Err(CliError::Data(e.to_string())),
                }
            }
            if models.is_empty() {
                return Err(CliError::Data(format!(
                    "collection is empty: {n} observations cannot hold any cell of the requested size"
                )));
            }
            models
        }
    };
    let mut records = Vec::with_capacity(models.len());
    let mut fits = Vec::with_capacity(models.len());
    for (model_id, model) in models.into_iter().enumerate() {
        let fit = fit_regressogram(sample, &model);
        fits.push(ModelFit { model_id, dimension: model.dimension(), contrast: fit.contrast });
        records.push(FitRecord {
            model_id,
            kind: format!("{:?}", model.kind()).to_lowercase(),
            dimension: model.dimension(),
            contrast: fit.contrast,
            cell_probs: fit.cell_probs,
            empty_cells: fit.empty_cells.into_iter().collect(),
            degenerate_cells: fit.degenerate_cells.into_iter().collect(),
            model,
        });
    }
    Ok(FittedCollection { records, fits })
}

#[derive(Serialize)]
struct FitOutput {
    n: usize,
    collection: String,
    models: Vec<FitRecord>,
}

#[derive(Serialize)]
struct SelectOutput {
    n: usize,
    penalty: String,
    resolved_penalty: String,
    calibration: Option<CalibrationResult>,
    path: CriterionPath,
    chosen: FitRecord,
}

#[derive(Serialize)]
struct CalibrateOutput {
    n: usize,
    collection: String,
    calibration: CalibrationResult,
}

fn emit<T: Serialize>(value: &T, out: &Path) -> Result<(), CliError> {
    let json = to_json(value).map_err(|e| CliError::Data(e.to_string()))?;
    write_atomic(out, &json)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit { input, collection, out, format } => {
            let sample = ingest::ingest_csv(&input)?;
            let spec = CollectionSpec::parse(&collection)?;
            let fitted = fit_collection(&sample, &spec)?;
            match format {
                OutputFormat::Json => emit(
                    &FitOutput { n: sample.n(), collection, models: fitted.records },
                    &out,
                )?,
                OutputFormat::Csv => {
                    let mut csv = String::from("model_id,kind,dimension,contrast\n");
                    for r in &fitted.records {
                        csv.push_str(&format!(
                            "{},{},{},{:.16e}\n",
                            r.model_id, r.kind, r.dimension, r.contrast
                        ));
                    }
                    write_atomic(&out, &csv)?;
                }
            }
            Ok(())
        }
        Command::Select { input, penalty, collection, out, format } => {
            let config: PenaltyConfig = penalty
                .parse()
                .map_err(|e| CliError::Usage(format!("bad penalty '{penalty}': {e}")))?;
            let sample = ingest::ingest_csv(&input)?;
            let spec = CollectionSpec::parse(&collection)?;
            let fitted = fit_collection(&sample, &spec)?;
            let (resolved, calibration) = config
                .resolve(&fitted.fits, &KappaGrid::default(), sample.n())
                .map_err(|e| CliError::Data(e.to_string()))?;
            let path = select(&fitted.fits, &resolved, sample.n())
                .map_err(|e| CliError::Data(e.to_string()))?;
            let chosen = fitted.records[path.chosen_entry().model_id].clone();
            match format {
                OutputFormat::Json => emit(
                    &SelectOutput {
                        n: sample.n(),
                        penalty,
                        resolved_penalty: resolved.to_string(),
                        calibration,
                        path,
                        chosen,
                    },
                    &out,
                )?,
                OutputFormat::Csv => write_atomic(&out, &path.to_csv())?,
            }
            Ok(())
        }
        Command::Calibrate { input, collection, out, format } => {
            let sample = ingest::ingest_csv(&input)?;
            let spec = CollectionSpec::parse(&collection)?;
            let fitted = fit_collection(&sample, &spec)?;
            let calibration =
                dimension_jump(&fitted.fits, &PenaltySpec::Shape(1.0), &KappaGrid::default(), sample.n())
                    .map_err(|e| CliError::Data(e.to_string()))?;
            match format {
                OutputFormat::Json => emit(
                    &CalibrateOutput { n: sample.n(), collection, calibration },
                    &out,
                )?,
                OutputFormat::Csv => write_atomic(&out, &calibration.to_csv())?,
            }
            Ok(())
        }
        Command::Simulate { truth, n, reps, seed, penalties, out, plot } => {
            let truth_id: TruthId = truth
                .parse()
                .map_err(|e| CliError::Usage(format!("{e}")))?;
            let ns = parse_n_list(&n)?;
            let penalty_configs = parse_penalties(&penalties)?;
            let base = Scenario::new(truth_id, ns[0], reps, seed).with_penalties(penalty_configs);
            let report = run_benchmark_sweep(&base, &ns).map_err(|e| match e {
                penlogit::simulation::SimulationError::SampleTooSmall(_)
                | penlogit::simulation::SimulationError::NoReplications
                | penlogit::simulation::SimulationError::NoPenalties => {
                    CliError::Usage(e.to_string())
                }
                other => CliError::Data(other.to_string()),
            })?;
            emit(&report, &out)?;
            write_atomic(&out.with_extension("csv"), &report.to_csv())?;
            if let Some(plot_path) = plot {
                let series: Vec<Series> = report
                    .series()
                    .into_iter()
                    .map(|(label, xs, ys)| Series { label, xs, ys })
                    .collect();
                plot::emit_plot(&series, &plot_path, "n", "C*")?;
            }
            Ok(())
        }
    }
}

fn parse_n_list(text: &str) -> Result<Vec<usize>, CliError> {
    let ns: Vec<usize> = text
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad sample size '{t}'")))
        })
        .collect::<Result<_, _>>()?;
    if ns.is_empty() {
        return Err(CliError::Usage("--n needs at least one sample size".into()));
    }
    Ok(ns)
}

fn parse_penalties(text: &str) -> Result<Vec<PenaltyConfig>, CliError> {
    let configs: Vec<PenaltyConfig> = text
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<PenaltyConfig>()
                .map_err(|e| CliError::Usage(format!("bad penalty '{t}': {e}")))
        })
        .collect::<Result<_, _>>()?;
    if configs.is_empty() {
        return Err(CliError::Usage("--penalties needs at least one penalty".into()));
    }
    Ok(configs)
}
