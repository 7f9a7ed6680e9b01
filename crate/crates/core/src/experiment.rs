//! The repeated-split benchmark harness: preprocess each dataset, run R
//! repetitions of (bias draw → split → weight estimation → weighted fit →
//! target error), aggregate per cell, and mark significance. Also hosts the
//! synthetic-oracle validation of estimators against the analytic ratio.

use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::classify::{fit_weighted, DiscriminantKind};
use crate::data::{
    bias_sample, fit_pca, load_csv, make_splits_full, project, standardize, Dataset, SplitSpec,
    TrainMode,
};
use crate::error::{ClassifyError, Error, EstimatorError, EstimatorFailure, Result};
use crate::estimator::{estimate_weights, Estimator, EstimatorOptions};
use crate::report::{mark_significance, CellResult, ExperimentReport, ReportRow};
use crate::seeding::mix_seed;
use crate::synth::SyntheticShift;
use crate::weights::normalize_mean_one;

/// A dataset entry of the benchmark configuration.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    /// Label column; `None` uses the last column of the header.
    pub label_column: Option<String>,
}

impl DatasetSpec {
    /// Parses `name:path` or a bare path (name = file stem).
    pub fn parse(entry: &str) -> Self {
        match entry.split_once(':') {
            Some((name, path)) if !name.is_empty() && !path.is_empty() => Self {
                name: name.to_owned(),
                path: PathBuf::from(path),
                label_column: None,
            },
            _ => {
                let path = PathBuf::from(entry);
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| entry.to_owned());
                Self {
                    name,
                    path,
                    label_column: None,
                }
            }
        }
    }
}

/// Full description of one benchmark run. The defaults reproduce the
/// experimental protocol: 100 repetitions, 0.999 retained variance,
/// quadrant reduction factor 5, no standardization.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub estimators: Vec<Estimator>,
    pub classifiers: Vec<DiscriminantKind>,
    pub train_modes: Vec<TrainMode>,
    pub repetitions: u32,
    pub retained_fraction: f64,
    pub reduction_factor: f64,
    pub seed: u64,
    pub standardize: bool,
    pub estimator_options: EstimatorOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            estimators: vec![
                Estimator::Kliep,
                Estimator::Ulsif,
                Estimator::Parzen,
                Estimator::Nnew,
                Estimator::Nnew1,
            ],
            classifiers: vec![DiscriminantKind::Lda, DiscriminantKind::Qda],
            train_modes: vec![TrainMode::Minimal, TrainMode::Half],
            repetitions: 100,
            retained_fraction: 0.999,
            reduction_factor: 5.0,
            seed: 0,
            standardize: false,
            estimator_options: EstimatorOptions::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses a plain `key = value` config file. Relative dataset paths are
    /// resolved against the config file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config = Self::default();
        let mut label_column: Option<String> = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("config line {}: expected key = value", no + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::InvalidArgument(format!("config line {}: {what}", no + 1))
            };
            match key {
                "dataset" => {
                    let mut spec = DatasetSpec::parse(value);
                    if spec.path.is_relative() {
                        spec.path = base_dir.join(&spec.path);
                    }
                    config.datasets.push(spec);
                }
                "label_column" => label_column = Some(value.to_owned()),
                "estimators" => {
                    config.estimators = value
                        .split(',')
                        .map(|s| s.trim().parse())
                        .collect::<Result<_>>()?;
                }
                "classifiers" => {
                    config.classifiers = value
                        .split(',')
                        .map(|s| s.trim().parse())
                        .collect::<Result<_>>()?;
                }
                "train_modes" => {
                    config.train_modes = value
                        .split(',')
                        .map(|s| s.trim().parse())
                        .collect::<Result<_>>()?;
                }
                "repetitions" => {
                    config.repetitions = value.parse().map_err(|_| bad("bad repetitions"))?;
                }
                "retained_fraction" => {
                    config.retained_fraction =
                        value.parse().map_err(|_| bad("bad retained_fraction"))?;
                }
                "reduction_factor" => {
                    config.reduction_factor =
                        value.parse().map_err(|_| bad("bad reduction_factor"))?;
                }
                "seed" => config.seed = value.parse().map_err(|_| bad("bad seed"))?,
                "standardize" => {
                    config.standardize = value.parse().map_err(|_| bad("bad standardize"))?;
                }
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "config line {}: unknown key `{other}`",
                        no + 1
                    )));
                }
            }
        }
        if let Some(col) = label_column {
            for spec in &mut config.datasets {
                spec.label_column = Some(col.clone());
            }
        }
        if config.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be >= 1".into()));
        }
        Ok(config)
    }
}

/// Loads a dataset described by `spec`; without an explicit label column
/// the last header column is used.
pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let label = match &spec.label_column {
        Some(col) => col.clone(),
        None => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .from_path(&spec.path)
                .map_err(Error::Csv)?;
            reader
                .headers()
                .map_err(Error::Csv)?
                .iter()
                .last()
                .unwrap_or("class")
                .to_owned()
        }
    };
    let loaded = load_csv(&spec.path, Some(&label))?;
    Ok(Dataset::new(
        spec.name.clone(),
        loaded.features().clone(),
        loaded.labels().map(<[usize]>::to_vec),
    )?)
}

/// A completed run: the report plus diagnostics for skipped datasets.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: ExperimentReport,
    pub diagnostics: Vec<String>,
}

// salts for per-purpose seed streams
const SALT_BIAS: u64 = 0x01;
const SALT_SPLIT: u64 = 0x02;
const SALT_ESTIMATE: u64 = 0x03;

fn name_salt(name: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Per-repetition outcome: `cells[mode][estimator][classifier]` holds the
/// target error of a successful repetition, `None` for a typed failure.
type RepCells = Vec<Vec<Vec<Option<f64>>>>;

fn run_repetition(
    target: &Dataset,
    config: &ExperimentConfig,
    dataset_salt: u64,
    rep: u32,
) -> Result<RepCells> {
    let rep_seed = mix_seed(dataset_salt, rep as u64);
    let empty = || {
        vec![
            vec![vec![None; config.classifiers.len()]; config.estimators.len()];
            config.train_modes.len()
        ]
    };

    // fresh bias draw per repetition; reseed when a class empties
    let mut source = None;
    for attempt in 0..100u64 {
        let bias_seed = mix_seed(mix_seed(rep_seed, SALT_BIAS), attempt);
        match bias_sample(target, config.reduction_factor, bias_seed) {
            Ok(s) => {
                source = Some(s);
                break;
            }
            Err(Error::BiasEmptiedClass { .. }) | Err(Error::BiasRemovedAllRows) => continue,
            Err(other) => return Err(other),
        }
    }
    let Some(source) = source else {
        return Ok(empty());
    };

    let mut cells = empty();
    for (mode_idx, &mode) in config.train_modes.iter().enumerate() {
        let spec = SplitSpec {
            seed: mix_seed(mix_seed(dataset_salt, SALT_SPLIT), mode_idx as u64),
            train_mode: mode,
            repetition: rep,
        };
        let split = match make_splits_full(&source, target, spec) {
            Ok(s) => s,
            Err(Error::ClassTooSmall { .. }) | Err(Error::EmptyTestSet) => continue,
            Err(other) => return Err(other),
        };

        for (est_idx, &estimator) in config.estimators.iter().enumerate() {
            let est_seed = mix_seed(
                mix_seed(rep_seed, SALT_ESTIMATE),
                (mode_idx * 64 + est_idx) as u64,
            );
            let raw = match estimate_weights(
                estimator,
                &split.train,
                &split.held_in_target,
                &config.estimator_options,
                est_seed,
            ) {
                Ok(w) => w,
                Err(EstimatorError::Failure(_)) => continue,
                Err(EstimatorError::Invalid(e)) => return Err(e),
            };
            let weights = match normalize_mean_one(&raw) {
                Ok(w) => w,
                // all-zero weights: starvation, tabulated as a failure
                Err(Error::AllZeroWeights) => continue,
                Err(other) => return Err(other),
            };
            for (clf_idx, &classifier) in config.classifiers.iter().enumerate() {
                match fit_weighted(classifier, &split.train, &weights) {
                    Ok(model) => {
                        let error = model.error_rate(&split.test)?;
                        cells[mode_idx][est_idx][clf_idx] = Some(error);
                    }
                    Err(ClassifyError::Failure(_)) => {}
                    Err(ClassifyError::Invalid(e)) => return Err(e),
                }
            }
        }
    }
    Ok(cells)
}

/// Runs the benchmark on datasets that are already loaded and labeled.
pub fn run_experiment_on(
    config: &ExperimentConfig,
    datasets: &[Dataset],
) -> Result<ExperimentReport> {
    if config.estimators.is_empty() || config.classifiers.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one estimator and one classifier".into(),
        ));
    }
    let mut rows = Vec::new();
    for dataset in datasets {
        if dataset.labels().is_none() {
            return Err(Error::MissingLabels {
                name: dataset.name().to_owned(),
            });
        }
        let prepared = if config.standardize {
            standardize(dataset)
        } else {
            dataset.clone()
        };
        let pca = fit_pca(&prepared, config.retained_fraction)?;
        let target = project(&pca, &prepared)?;
        if target.dim() < 2 {
            return Err(Error::BiasNeedsTwoDims { dim: target.dim() });
        }

        let dataset_salt = mix_seed(config.seed, name_salt(dataset.name()));
        let reps: Vec<u32> = (0..config.repetitions).collect();

        #[cfg(feature = "parallel")]
        let outcomes: Result<Vec<RepCells>> = reps
            .par_iter()
            .map(|&rep| run_repetition(&target, config, dataset_salt, rep))
            .collect();
        #[cfg(not(feature = "parallel"))]
        let outcomes: Result<Vec<RepCells>> = reps
            .iter()
            .map(|&rep| run_repetition(&target, config, dataset_salt, rep))
            .collect();
        let outcomes = outcomes?;

        for (mode_idx, &mode) in config.train_modes.iter().enumerate() {
            for (clf_idx, &classifier) in config.classifiers.iter().enumerate() {
                let mut cells = Vec::with_capacity(config.estimators.len());
                for est_idx in 0..config.estimators.len() {
                    let mut errors = Vec::new();
                    let mut failures = 0u32;
                    for rep_cells in &outcomes {
                        match rep_cells[mode_idx][est_idx][clf_idx] {
                            Some(err) => errors.push(err),
                            None => failures += 1,
                        }
                    }
                    cells.push(CellResult::from_errors(&errors, failures));
                }
                let flags = mark_significance(&cells);
                rows.push(ReportRow {
                    dataset: dataset.name().to_owned(),
                    train_mode: mode,
                    classifier,
                    cells,
                    flags,
                });
            }
        }
    }
    Ok(ExperimentReport {
        estimator_names: config
            .estimators
            .iter()
            .map(|e| e.name().to_owned())
            .collect(),
        rows,
    })
}

/// Loads every configured dataset and runs the benchmark. Unloadable or
/// unusable datasets are skipped with a diagnostic instead of aborting the
/// run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    let mut diagnostics = Vec::new();
    let mut report = ExperimentReport {
        estimator_names: config
            .estimators
            .iter()
            .map(|e| e.name().to_owned())
            .collect(),
        rows: Vec::new(),
    };
    for spec in &config.datasets {
        let dataset = match load_dataset(spec) {
            Ok(d) => d,
            Err(e) => {
                diagnostics.push(format!("skipped {}: {e}", spec.name));
                continue;
            }
        };
        match run_experiment_on(config, std::slice::from_ref(&dataset)) {
            Ok(part) => report.rows.extend(part.rows),
            Err(e) => diagnostics.push(format!("skipped {}: {e}", spec.name)),
        }
    }
    Ok(RunOutcome {
        report,
        diagnostics,
    })
}

/// Estimator-vs-analytic-ratio metrics from [`oracle_validate`].
#[derive(Debug, Clone, Copy)]
pub struct OracleOutcome {
    /// Pearson correlation between mean-one-normalized estimated weights
    /// and the equally normalized true ratio at the source points (0 when
    /// either side is constant).
    pub correlation: f64,
    /// Mean squared difference of the logs, over strictly positive weights.
    pub ms_log_error: f64,
    /// Number of strictly positive weights entering the log comparison.
    pub n_positive: usize,
}

/// Draws samples from a synthetic shift, estimates weights, and scores them
/// against the analytic importance ratio.
pub fn oracle_validate(
    shift: &SyntheticShift,
    n_source: usize,
    n_target: usize,
    estimator: Estimator,
    options: &EstimatorOptions,
    seed: u64,
) -> std::result::Result<OracleOutcome, EstimatorError> {
    let source = shift
        .sample_source(n_source, mix_seed(seed, 0x50))
        .map_err(EstimatorError::Invalid)?;
    let target = shift
        .sample_target(n_target, mix_seed(seed, 0x51))
        .map_err(EstimatorError::Invalid)?;
    let raw = estimate_weights(estimator, &source, &target, options, mix_seed(seed, 0x52))?;
    let weights = match normalize_mean_one(&raw) {
        Ok(w) => w,
        Err(Error::AllZeroWeights) => {
            return Err(EstimatorError::Failure(EstimatorFailure::AllWeightsZero))
        }
        Err(other) => return Err(EstimatorError::Invalid(other)),
    };

    let ratios: Vec<f64> = (0..n_source)
        .map(|i| shift.true_ratio(&source.row(i)))
        .collect();
    let ratio_mean = ratios.iter().sum::<f64>() / n_source as f64;
    let normalized_ratios: Vec<f64> = ratios.iter().map(|r| r / ratio_mean).collect();

    let correlation = pearson(weights.values(), &normalized_ratios);
    let mut log_sq = 0.0;
    let mut n_positive = 0usize;
    for (&w, &r) in weights.values().iter().zip(&normalized_ratios) {
        if w > 0.0 {
            log_sq += (w.ln() - r.ln()).powi(2);
            n_positive += 1;
        }
    }
    let ms_log_error = if n_positive > 0 {
        log_sq / n_positive as f64
    } else {
        f64::INFINITY
    };
    Ok(OracleOutcome {
        correlation,
        ms_log_error,
        n_positive,
    })
}

/// Pearson correlation; 0 when either side has (numerically) no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let (ma, mb) = (
        a.iter().sum::<f64>() / n,
        b.iter().sum::<f64>() / n,
    );
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    let denom = (va * vb).sqrt();
    if denom <= 0.0 || !denom.is_finite() {
        0.0
    } else {
        cov / denom
    }
}
