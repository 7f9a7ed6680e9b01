//! `covshift` — importance weights for covariate shift and the
//! weighted-LDA/QDA benchmark harness.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime/data error,
//! 3 estimator failure (`weights`/`synth`).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use covshift_core::{
    estimate_weights, load_csv, oracle_validate, run_experiment, ulsif_fit, Dataset, DatasetSpec,
    DiscriminantKind, Error, Estimator, EstimatorError, EstimatorOptions, ExperimentConfig,
    SyntheticShift, TrainMode, UlsifOptions, WeightVector,
};

#[derive(Parser)]
#[command(
    name = "covshift",
    version,
    about = "Covariate-shift importance weighting: NNeW/NNeW+1, KLIEP, uLSIF, Parzen, and a weighted-LDA/QDA benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate importance weights for source rows against a target sample
    Weights(WeightsArgs),
    /// Run the repeated-split benchmark and emit a significance-marked report
    Bench(BenchArgs),
    /// Score an estimator against the analytic ratio of a synthetic shift
    Synth(SynthArgs),
    /// Summarize a dataset file
    Info(InfoArgs),
}

#[derive(Args)]
struct WeightsArgs {
    /// Source sample CSV (weights are produced for these rows)
    source: PathBuf,
    /// Target sample CSV
    target: PathBuf,
    /// nnew | nnew1 | kliep | ulsif | parzen | uniform
    #[arg(long)]
    estimator: String,
    /// Output path for the weight CSV (stdout when omitted)
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Label column to ignore in both files
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 1-NN search: brute | kd-tree
    #[arg(long, default_value = "kd-tree")]
    acceleration: String,
    /// uLSIF starvation floor on strictly positive weights
    /// (default: dimensionality + 1; 0 disables)
    #[arg(long)]
    positive_floor: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Plain key = value config file
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Datasets as name:path entries (overrides the config list)
    #[arg(long, value_delimiter = ',')]
    dataset: Vec<String>,
    /// Label column for all datasets (default: last CSV column)
    #[arg(long)]
    label_column: Option<String>,
    /// Comma-separated estimator names
    #[arg(long, value_delimiter = ',')]
    estimator: Vec<String>,
    /// Comma-separated classifier names (lda, qda)
    #[arg(long, value_delimiter = ',')]
    classifier: Vec<String>,
    /// Comma-separated training modes (half, minimal)
    #[arg(long, value_delimiter = ',')]
    train_mode: Vec<String>,
    #[arg(long)]
    repetitions: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    retained_fraction: Option<f64>,
    #[arg(long)]
    reduction_factor: Option<f64>,
    /// Standardize features before PCA
    #[arg(long)]
    standardize: bool,
    /// Stdout format: table | csv | json
    #[arg(long, default_value = "table")]
    format: String,
    /// Also write the machine-readable CSV report here
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Shift family: gauss-mean:<delta> or gauss-scale:<s>
    #[arg(long)]
    shift: String,
    #[arg(long)]
    estimator: String,
    /// Sample size for both sides
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Override the source sample size
    #[arg(long)]
    n_source: Option<usize>,
    /// Override the target sample size
    #[arg(long)]
    n_target: Option<usize>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InfoArgs {
    path: PathBuf,
    /// Label column (default: last CSV column)
    #[arg(long)]
    label_column: Option<String>,
}

enum CliError {
    Usage(String),
    Data(String),
    Estimator(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Estimator(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Estimator(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Weights(args) => run_weights(args),
        Command::Bench(args) => run_bench(args),
        Command::Synth(args) => run_synth(args),
        Command::Info(args) => run_info(args),
    }
}

fn load_sample(path: &Path, label_column: Option<&str>) -> Result<Dataset, CliError> {
    let loaded = load_csv(path, label_column).map_err(data)?;
    Ok(loaded.without_labels())
}

fn write_weights(weights: &WeightVector, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| data(format!("cannot create {}: {e}", path.display())))?;
            weights
                .write_csv(BufWriter::new(file))
                .map_err(|e| data(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut buf = Vec::new();
            weights.write_csv(&mut buf).map_err(data)?;
            print!("{}", String::from_utf8_lossy(&buf));
            Ok(())
        }
    }
}

fn run_weights(args: WeightsArgs) -> Result<(), CliError> {
    let estimator: Estimator = args.estimator.parse().map_err(usage)?;
    let acceleration = args.acceleration.parse().map_err(usage)?;
    let source = load_sample(&args.source, args.label_column.as_deref())?;
    let target = load_sample(&args.target, args.label_column.as_deref())?;
    if source.dim() != target.dim() {
        return Err(data(format!(
            "dimension mismatch: source has {} features, target has {}",
            source.dim(),
            target.dim()
        )));
    }

    let mut options = EstimatorOptions {
        acceleration,
        ..Default::default()
    };
    let weights = if estimator == Estimator::Ulsif {
        let floor = args.positive_floor.unwrap_or(source.dim() + 1);
        let ulsif_options = UlsifOptions {
            positive_floor: floor,
            seed: args.seed,
            ..options.ulsif
        };
        let fit = ulsif_fit(&source, &target, &ulsif_options).map_err(estimator_error)?;
        if let Some(starved) = fit.starvation {
            return Err(CliError::Estimator(format!(
                "ulsif weight starvation: {} of {} weights are zero, only {} strictly positive (floor {})",
                fit.weights.zero_count(),
                fit.weights.len(),
                starved.positive_count,
                starved.floor
            )));
        }
        fit.weights
    } else {
        options.ulsif.seed = args.seed;
        estimate_weights(estimator, &source, &target, &options, args.seed)
            .map_err(estimator_error)?
    };

    write_weights(&weights, args.out.as_deref())?;
    let summary = format!(
        "n_source={} n_target={} estimator={} min={} mean={} max={} zeros={}",
        source.n_samples(),
        target.n_samples(),
        estimator.name(),
        weights.min(),
        weights.mean(),
        weights.max(),
        weights.zero_count()
    );
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn estimator_error(e: EstimatorError) -> CliError {
    match e {
        EstimatorError::Invalid(err) => data(err),
        EstimatorError::Failure(f) => CliError::Estimator(f.to_string()),
    }
}

fn run_bench(args: BenchArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(|e| match e {
            Error::InvalidArgument(_) => usage(e),
            other => data(other),
        })?,
        None => ExperimentConfig::default(),
    };
    if !args.dataset.is_empty() {
        config.datasets = args.dataset.iter().map(|s| DatasetSpec::parse(s)).collect();
    }
    if let Some(col) = &args.label_column {
        for spec in &mut config.datasets {
            spec.label_column = Some(col.clone());
        }
    }
    if !args.estimator.is_empty() {
        config.estimators = parse_list::<Estimator>(&args.estimator)?;
    }
    if !args.classifier.is_empty() {
        config.classifiers = parse_list::<DiscriminantKind>(&args.classifier)?;
    }
    if !args.train_mode.is_empty() {
        config.train_modes = parse_list::<TrainMode>(&args.train_mode)?;
    }
    if let Some(r) = args.repetitions {
        if r == 0 {
            return Err(usage("--repetitions must be >= 1"));
        }
        config.repetitions = r;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(f) = args.retained_fraction {
        config.retained_fraction = f;
    }
    if let Some(f) = args.reduction_factor {
        config.reduction_factor = f;
    }
    if args.standardize {
        config.standardize = true;
    }
    if config.datasets.is_empty() {
        return Err(usage(
            "no datasets: pass --config <file> or --dataset name:path",
        ));
    }
    if !matches!(args.format.as_str(), "table" | "csv" | "json") {
        return Err(usage(format!(
            "unknown format `{}` (expected table|csv|json)",
            args.format
        )));
    }

    let outcome = run_experiment(&config).map_err(data)?;
    for diagnostic in &outcome.diagnostics {
        eprintln!("warning: {diagnostic}");
    }
    if outcome.report.is_empty() {
        return Err(data("no dataset loadable"));
    }

    match args.format.as_str() {
        "table" => print!("{}", outcome.report.render_table()),
        "csv" => print!("{}", outcome.report.to_csv()),
        "json" => println!("{}", outcome.report.to_json()),
        _ => unreachable!(),
    }
    if let Some(path) = &args.out {
        let mut file = BufWriter::new(
            File::create(path)
                .map_err(|e| data(format!("cannot create {}: {e}", path.display())))?,
        );
        file.write_all(outcome.report.to_csv().as_bytes())
            .map_err(|e| data(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>, CliError> {
    items.iter().map(|s| s.trim().parse().map_err(usage)).collect()
}

fn run_synth(args: SynthArgs) -> Result<(), CliError> {
    let shift = SyntheticShift::parse(&args.shift, args.dim).map_err(usage)?;
    let estimator: Estimator = args.estimator.parse().map_err(usage)?;
    let n_source = args.n_source.unwrap_or(args.n);
    let n_target = args.n_target.unwrap_or(args.n);
    if n_source == 0 || n_target == 0 {
        return Err(usage("sample sizes must be >= 1"));
    }
    let outcome = oracle_validate(
        &shift,
        n_source,
        n_target,
        estimator,
        &EstimatorOptions::default(),
        args.seed,
    )
    .map_err(estimator_error)?;
    println!(
        "corr={} ms_log_err={} n_positive={}",
        outcome.correlation, outcome.ms_log_error, outcome.n_positive
    );
    Ok(())
}

fn run_info(args: InfoArgs) -> Result<(), CliError> {
    let label = match &args.label_column {
        Some(col) => col.clone(),
        None => {
            let text = std::fs::read_to_string(&args.path)
                .map_err(|e| data(format!("cannot read {}: {e}", args.path.display())))?;
            text.lines()
                .next()
                .and_then(|h| h.split(',').next_back())
                .unwrap_or("class")
                .trim()
                .to_owned()
        }
    };
    let dataset = load_csv(&args.path, Some(&label)).map_err(data)?;
    println!("name={}", dataset.name());
    println!("n_samples={}", dataset.n_samples());
    println!("dim={}", dataset.dim());
    println!("n_classes={}", dataset.n_classes());
    let counts = dataset.class_counts();
    println!(
        "class_counts={}",
        counts
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    );
    Ok(())
}
