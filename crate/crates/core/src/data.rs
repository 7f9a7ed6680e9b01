//! Dataset representation, CSV ingestion, PCA reduction, quadrant-bias
//! sampling, and train/test split construction.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seeding::{mix_seed, rng_from};

/// An N×d feature matrix with optional dense class labels.
///
/// Invariants enforced at construction: every feature entry is finite,
/// N ≥ 1, d ≥ 1, and labels (when present) are class ids below
/// `n_classes`. [`Dataset::new`] additionally requires every class to
/// occur at least once; row subsets taken with [`Dataset::select_rows`]
/// inherit `n_classes` and may miss classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: Option<Vec<usize>>,
    n_classes: usize,
    name: String,
}

impl Dataset {
    /// Builds a dataset from a row-major feature matrix, checking all
    /// invariants. `labels` must use dense ids `0..C-1` with every class
    /// present.
    pub fn new(
        name: impl Into<String>,
        features: DMatrix<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::InvalidDataset {
            name: name.clone(),
            reason,
        };
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(invalid(format!(
                "need at least 1 row and 1 column, got {}x{}",
                features.nrows(),
                features.ncols()
            )));
        }
        if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite feature value {bad}")));
        }
        let n_classes = match &labels {
            None => 0,
            Some(ls) => {
                if ls.len() != features.nrows() {
                    return Err(invalid(format!(
                        "{} labels for {} rows",
                        ls.len(),
                        features.nrows()
                    )));
                }
                let c = ls.iter().max().map_or(0, |m| m + 1);
                let mut seen = vec![false; c];
                for &l in ls {
                    seen[l] = true;
                }
                if let Some(missing) = seen.iter().position(|s| !s) {
                    return Err(invalid(format!("class {missing} has no instances")));
                }
                c
            }
        };
        Ok(Self {
            features,
            labels,
            n_classes,
            name,
        })
    }

    /// Convenience constructor from row slices, mainly for tests.
    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let features = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        Self::new(name, features, labels)
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of classes in the dataset family (0 when unlabeled).
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Copies row `i` into a dense vector.
    pub fn row(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }

    /// Per-class instance counts (empty when unlabeled).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        if let Some(ls) = &self.labels {
            for &l in ls {
                counts[l] += 1;
            }
        }
        counts
    }

    /// Row subset in the given index order. Inherits `n_classes`; the
    /// subset may miss classes.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let features = DMatrix::from_fn(indices.len(), self.dim(), |i, j| {
            self.features[(indices[i], j)]
        });
        let labels = self
            .labels
            .as_ref()
            .map(|ls| indices.iter().map(|&i| ls[i]).collect());
        Self {
            features,
            labels,
            n_classes: self.n_classes,
            name: self.name.clone(),
        }
    }

    /// Drops the label column.
    pub fn without_labels(&self) -> Self {
        Self {
            features: self.features.clone(),
            labels: None,
            n_classes: 0,
            name: self.name.clone(),
        }
    }

    /// Bit pattern of row `i`, used for exact feature-vector identity.
    pub(crate) fn row_bits(&self, i: usize) -> Vec<u64> {
        (0..self.dim())
            .map(|j| self.features[(i, j)].to_bits())
            .collect()
    }

    /// Writes the dataset in the same CSV format that `load_csv` reads:
    /// header row, comma separated, one sample per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("f{j}")).collect();
        if self.labels.is_some() {
            header.push("class".to_owned());
        }
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.n_samples() {
            let mut fields: Vec<String> =
                (0..self.dim()).map(|j| self.features[(i, j)].to_string()).collect();
            if let Some(ls) = &self.labels {
                fields.push(ls[i].to_string());
            }
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_file(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        self.write_csv(BufWriter::new(file)).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }
}

/// Loads a dataset from a comma-separated file with a header row.
///
/// All columns except `label_column` must parse as finite reals. Labels are
/// re-encoded to dense ids `0..C-1` in first-appearance order.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    io_err(io)
                } else {
                    unreachable!()
                }
            }
            _ => Error::Csv(e),
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(Error::Csv)?
        .iter()
        .map(str::to_owned)
        .collect();
    let label_idx = match label_column {
        None => None,
        Some(col) => Some(headers.iter().position(|h| h == col).ok_or_else(|| {
            Error::MissingColumn {
                path: path.to_owned(),
                column: col.to_owned(),
            }
        })?),
    };

    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|j| Some(*j) != label_idx)
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(Error::Csv)?;
        let mut row = Vec::with_capacity(feature_cols.len());
        for &j in &feature_cols {
            let raw = record.get(j).unwrap_or("");
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                path: path.to_owned(),
                row: row_no + 1,
                column: headers[j].clone(),
                value: raw.to_owned(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    path: path.to_owned(),
                    row: row_no + 1,
                    column: headers[j].clone(),
                    value,
                });
            }
            row.push(value);
        }
        if let Some(li) = label_idx {
            raw_labels.push(record.get(li).unwrap_or("").to_owned());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_owned(),
        });
    }

    let labels = label_idx.map(|_| {
        let mut order: Vec<String> = Vec::new();
        raw_labels
            .iter()
            .map(|raw| match order.iter().position(|s| s == raw) {
                Some(id) => id,
                None => {
                    order.push(raw.clone());
                    order.len() - 1
                }
            })
            .collect()
    });

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned());
    Dataset::new(name, DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]), labels)
}

/// Per-column z-scoring (sample standard deviation). Constant columns are
/// centered only.
pub fn standardize(data: &Dataset) -> Dataset {
    let x = data.features();
    let n = x.nrows() as f64;
    let mut out = x.clone();
    for j in 0..x.ncols() {
        let col = x.column(j);
        let mean = col.sum() / n;
        let var = if x.nrows() > 1 {
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in 0..x.nrows() {
            out[(i, j)] = (x[(i, j)] - mean) / sd;
        }
    }
    Dataset {
        features: out,
        labels: data.labels.clone(),
        n_classes: data.n_classes,
        name: data.name.clone(),
    }
}

/// Principal-component model: column mean, orthonormal axes in descending
/// eigenvalue order, and the retained eigenvalues.
#[derive(Debug, Clone)]
pub struct PcaModel {
    mean: DVector<f64>,
    components: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    retained_fraction: f64,
    total_variance: f64,
}

impl PcaModel {
    /// Assembles a model from parts, checking orthonormality and eigenvalue
    /// ordering.
    pub fn new(
        mean: DVector<f64>,
        components: DMatrix<f64>,
        eigenvalues: DVector<f64>,
        retained_fraction: f64,
        total_variance: f64,
    ) -> Result<Self> {
        let (d, k) = (components.nrows(), components.ncols());
        if mean.len() != d || eigenvalues.len() != k {
            return Err(Error::InvalidArgument(
                "pca model dimensions are inconsistent".into(),
            ));
        }
        let gram = components.transpose() * &components;
        let ortho_err = (&gram - DMatrix::identity(k, k)).abs().max();
        if ortho_err > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "components not orthonormal (max deviation {ortho_err:.2e})"
            )));
        }
        for w in eigenvalues.as_slice().windows(2) {
            if w[1] > w[0] {
                return Err(Error::InvalidArgument(
                    "eigenvalues must be nonincreasing".into(),
                ));
            }
        }
        if eigenvalues.iter().any(|&l| l < 0.0) {
            return Err(Error::InvalidArgument("negative eigenvalue".into()));
        }
        Ok(Self {
            mean,
            components,
            eigenvalues,
            retained_fraction,
            total_variance,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.components.ncols()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn retained_fraction(&self) -> f64 {
        self.retained_fraction
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    /// Eigenvalue mass of the dropped components.
    pub fn discarded_variance(&self) -> f64 {
        self.total_variance - self.eigenvalues.sum()
    }
}

/// Fits PCA by eigendecomposition of the sample covariance (divisor N−1)
/// and keeps the smallest number of leading components whose cumulative
/// eigenvalue fraction reaches `retained_fraction`.
///
/// Each component's sign is fixed so that its largest-magnitude entry is
/// positive.
pub fn fit_pca(data: &Dataset, retained_fraction: f64) -> Result<PcaModel> {
    if data.n_samples() < 2 {
        return Err(Error::InvalidArgument(
            "pca needs at least 2 samples".into(),
        ));
    }
    if !(retained_fraction > 0.0 && retained_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "retained_fraction must be in (0,1], got {retained_fraction}"
        )));
    }
    let x = data.features();
    let (n, d) = (x.nrows(), x.ncols());
    let mean = DVector::from_fn(d, |j, _| x.column(j).sum() / n as f64);
    let mut centered = x.clone();
    for i in 0..n {
        for j in 0..d {
            centered[(i, j)] -= mean[j];
        }
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = nalgebra::SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroVariance);
    }

    let mut cum = 0.0;
    let mut k = d;
    for (i, &l) in sorted.iter().enumerate() {
        cum += l;
        // tiny slack so exact fractions (e.g. rank-deficient data) round down
        if cum / total >= retained_fraction - 1e-12 {
            k = i + 1;
            break;
        }
    }

    let mut components = DMatrix::zeros(d, k);
    for (col, &src) in order.iter().take(k).enumerate() {
        let mut v = eig.eigenvectors.column(src).clone_owned();
        let lead = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if v[lead] < 0.0 {
            v.neg_mut();
        }
        components.set_column(col, &v);
    }
    PcaModel::new(
        mean,
        components,
        DVector::from_vec(sorted[..k].to_vec()),
        retained_fraction,
        total,
    )
}

/// Projects `data` onto the model's principal axes: `(X − mean) · components`.
/// Labels are carried through unchanged.
pub fn project(model: &PcaModel, data: &Dataset) -> Result<Dataset> {
    if data.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            got: data.dim(),
        });
    }
    let x = data.features();
    let mut centered = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            centered[(i, j)] -= model.mean[j];
        }
    }
    let projected = centered * &model.components;
    Ok(Dataset {
        features: projected,
        labels: data.labels.clone(),
        n_classes: data.n_classes,
        name: data.name.clone(),
    })
}

/// Thins quadrants I and III of the first two principal coordinates.
///
/// A row whose first two coordinates are both positive (quadrant I) or both
/// negative (quadrant III) is kept with probability `1/reduction_factor`;
/// every other row is kept. Points with a zero coordinate belong to neither
/// quadrant and are always kept. Row order is preserved.
pub fn bias_sample(data: &Dataset, reduction_factor: f64, seed: u64) -> Result<Dataset> {
    if data.dim() < 2 {
        return Err(Error::BiasNeedsTwoDims { dim: data.dim() });
    }
    if !(reduction_factor >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "reduction_factor must be >= 1, got {reduction_factor}"
        )));
    }
    let keep_prob = 1.0 / reduction_factor;
    let mut rng = rng_from(seed);
    let x = data.features();
    let mut kept = Vec::with_capacity(data.n_samples());
    for i in 0..data.n_samples() {
        let (a, b) = (x[(i, 0)], x[(i, 1)]);
        let in_q13 = (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0);
        if !in_q13 || rng.gen::<f64>() < keep_prob {
            kept.push(i);
        }
    }
    if kept.is_empty() {
        return Err(Error::BiasRemovedAllRows);
    }
    let out = data.select_rows(&kept);
    if let Some(ls) = out.labels() {
        let mut seen = vec![false; out.n_classes()];
        for &l in ls {
            seen[l] = true;
        }
        if let Some(class) = seen.iter().position(|s| !s) {
            return Err(Error::BiasEmptiedClass { class });
        }
    }
    Ok(out)
}

/// Training-set construction mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrainMode {
    /// Stratified random half of the source (the paper's large training set).
    Half,
    /// Exactly d+1 instances per class, the smallest set on which
    /// unregularized QDA is defined.
    Minimal,
}

impl TrainMode {
    pub fn name(self) -> &'static str {
        match self {
            TrainMode::Half => "half",
            TrainMode::Minimal => "minimal",
        }
    }
}

impl std::str::FromStr for TrainMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(TrainMode::Half),
            "minimal" => Ok(TrainMode::Minimal),
            other => Err(Error::InvalidArgument(format!(
                "unknown train mode `{other}` (expected half|minimal)"
            ))),
        }
    }
}

/// Deterministic split request: the same seed and repetition always yield
/// identical splits.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_mode: TrainMode,
    pub repetition: u32,
}

/// A materialized split plus the target-side bookkeeping the benchmark
/// harness needs: which target rows are test rows, and the held-in rows
/// weight estimators are allowed to see.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub train: Dataset,
    pub test: Dataset,
    /// Target rows not in the test set (weight-estimation sample).
    pub held_in_target: Dataset,
}

/// Draws a training set from `source` and a test set from `target`.
///
/// `Half` mode takes a stratified random half of the source per class
/// (rounding down, but never below one instance). `Minimal` mode takes
/// exactly d+1 random instances per class. The test set is a random half
/// of the target with any row identical (as a feature vector) to a training
/// row excluded.
pub fn make_splits(source: &Dataset, target: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let outcome = make_splits_full(source, target, spec)?;
    Ok((outcome.train, outcome.test))
}

/// As [`make_splits`], additionally returning the held-in target sample.
pub fn make_splits_full(
    source: &Dataset,
    target: &Dataset,
    spec: SplitSpec,
) -> Result<SplitOutcome> {
    let source_labels = source.labels().ok_or_else(|| Error::MissingLabels {
        name: source.name().to_owned(),
    })?;
    if target.labels().is_none() {
        return Err(Error::MissingLabels {
            name: target.name().to_owned(),
        });
    }
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            got: target.dim(),
        });
    }

    let mut rng = rng_from(mix_seed(spec.seed, spec.repetition as u64));

    let mut train_idx: Vec<usize> = Vec::new();
    for class in 0..source.n_classes() {
        let mut members: Vec<usize> = (0..source.n_samples())
            .filter(|&i| source_labels[i] == class)
            .collect();
        let take = match spec.train_mode {
            TrainMode::Half => (members.len() / 2).max(1),
            TrainMode::Minimal => {
                let need = source.dim() + 1;
                if members.len() < need {
                    return Err(Error::ClassTooSmall {
                        class,
                        have: members.len(),
                        need,
                    });
                }
                need
            }
        };
        members.shuffle(&mut rng);
        train_idx.extend_from_slice(&members[..take]);
    }
    train_idx.sort_unstable();
    let train = source.select_rows(&train_idx);

    let mut half: Vec<usize> = (0..target.n_samples()).collect();
    half.shuffle(&mut rng);
    half.truncate(target.n_samples() / 2);
    half.sort_unstable();

    let train_rows: HashSet<Vec<u64>> = train_idx.iter().map(|&i| source.row_bits(i)).collect();
    let test_idx: Vec<usize> = half
        .into_iter()
        .filter(|&i| !train_rows.contains(&target.row_bits(i)))
        .collect();
    if test_idx.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let test = target.select_rows(&test_idx);

    let in_test: HashSet<usize> = test_idx.iter().copied().collect();
    let held_idx: Vec<usize> = (0..target.n_samples())
        .filter(|i| !in_test.contains(i))
        .collect();
    let held_in_target = target.select_rows(&held_idx);

    Ok(SplitOutcome {
        train,
        test,
        held_in_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn fixture(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../data")
            .join(name)
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write as _;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_csv_toy() {
        let f = write_temp("f1,f2,class\n1.0,2.0,a\n3.0,4.0,b\n5.0,6.0,a\n");
        let ds = load_csv(f.path(), Some("class")).unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.n_classes(), 2);
        // first-appearance encoding: a=0, b=1
        assert_eq!(ds.labels().unwrap(), &[0, 1, 0]);
    }

    #[test]
    fn load_csv_blank_cell_names_location() {
        let f = write_temp("f1,f2\n1.0,2.0\n3.0,\n");
        let err = load_csv(f.path(), None).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "f2");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn load_csv_empty_file() {
        let f = write_temp("f1,f2\n");
        assert!(matches!(
            load_csv(f.path(), None).unwrap_err(),
            Error::EmptyFile { .. }
        ));
    }

    #[test]
    fn load_csv_missing_label_column() {
        let f = write_temp("f1,f2\n1.0,2.0\n");
        assert!(matches!(
            load_csv(f.path(), Some("target")).unwrap_err(),
            Error::MissingColumn { .. }
        ));
    }

    #[test]
    fn load_iris_fixture() {
        let ds = load_csv(fixture("iris.csv"), Some("class")).unwrap();
        assert_eq!(ds.n_samples(), 150);
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.n_classes(), 3);
        assert_eq!(ds.class_counts(), vec![50, 50, 50]);
    }

    #[test]
    fn dataset_rejects_non_finite() {
        let err = Dataset::from_rows("bad", &[vec![1.0, f64::NAN]], None).unwrap_err();
        assert!(matches!(err, Error::InvalidDataset { .. }));
    }

    #[test]
    fn dataset_rejects_gap_in_labels() {
        let err =
            Dataset::from_rows("bad", &[vec![1.0], vec![2.0]], Some(vec![0, 2])).unwrap_err();
        assert!(matches!(err, Error::InvalidDataset { .. }));
    }

    #[test]
    fn pca_equal_variances_keeps_both_axes() {
        // unit variance on each axis, uncorrelated
        let ds = Dataset::from_rows(
            "sq",
            &[
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            None,
        )
        .unwrap();
        let model = fit_pca(&ds, 0.999).unwrap();
        assert_eq!(model.output_dim(), 2);
    }

    #[test]
    fn pca_planar_data_drops_to_two() {
        // 3-D points on the plane z = x + y
        let mut rows = Vec::new();
        let mut rng = rng_from(9);
        for _ in 0..40 {
            let (x, y) = (rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0);
            rows.push(vec![x, y, x + y]);
        }
        let ds = Dataset::from_rows("plane", &rows, None).unwrap();
        let model = fit_pca(&ds, 0.999).unwrap();
        assert_eq!(model.output_dim(), 2);
    }

    #[test]
    fn pca_zero_variance_is_an_error() {
        let ds = Dataset::from_rows("const", &[vec![3.0, 1.0], vec![3.0, 1.0]], None).unwrap();
        assert!(matches!(fit_pca(&ds, 0.999), Err(Error::ZeroVariance)));
    }

    #[test]
    fn pca_wine_fixture_reduces_to_two() {
        let ds = load_csv(fixture("wine.csv"), Some("class")).unwrap();
        let model = fit_pca(&ds, 0.999).unwrap();
        assert_eq!(model.output_dim(), 2);
    }

    #[test]
    fn pca_model_invariants_hold_on_iris() {
        let ds = load_csv(fixture("iris.csv"), Some("class")).unwrap();
        let model = fit_pca(&ds, 0.999).unwrap();
        let k = model.output_dim();
        let gram = model.components().transpose() * model.components();
        assert!((gram - DMatrix::identity(k, k)).abs().max() < 1e-8);
        for w in model.eigenvalues().as_slice().windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(model.eigenvalues().sum() / model.total_variance() >= model.retained_fraction());
    }

    #[test]
    fn project_identity_model_is_identity() {
        let ds = Dataset::from_rows("id", &[vec![1.5, -2.0], vec![0.25, 4.0]], None).unwrap();
        let model = PcaModel::new(
            DVector::zeros(2),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 1.0]),
            1.0,
            2.0,
        )
        .unwrap();
        let out = project(&model, &ds).unwrap();
        assert_eq!(out.features(), ds.features());
    }

    #[test]
    fn project_mean_point_goes_to_origin() {
        let ds = Dataset::from_rows("m", &[vec![1.0, 2.0], vec![3.0, 6.0]], None).unwrap();
        let model = fit_pca(&ds, 1.0).unwrap();
        let mean_row = Dataset::from_rows("q", &[vec![2.0, 4.0]], None).unwrap();
        let out = project(&model, &mean_row).unwrap();
        assert!(out.features().abs().max() < 1e-12);
    }

    #[test]
    fn project_dimension_mismatch() {
        let ds = Dataset::from_rows("m", &[vec![1.0, 2.0], vec![3.0, 6.0]], None).unwrap();
        let model = fit_pca(&ds, 1.0).unwrap();
        let bad = Dataset::from_rows("q", &[vec![1.0, 2.0, 3.0]], None).unwrap();
        assert!(matches!(
            project(&model, &bad),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_reconstruction_error_bounded_by_discarded_variance() {
        let mut rng = rng_from(4);
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|_| {
                let x: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                let y: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                vec![x, y, 0.5 * x + 0.01 * (rng.gen::<f64>() - 0.5)]
            })
            .collect();
        let ds = Dataset::from_rows("g", &rows, None).unwrap();
        let model = fit_pca(&ds, 0.99).unwrap();
        assert!(model.output_dim() < 3);
        let proj = project(&model, &ds).unwrap();
        // mean squared reconstruction error over rows equals the discarded
        // variance up to the N vs N-1 divisor
        let n = ds.n_samples();
        let mut sq = 0.0;
        for i in 0..n {
            let rec = model.mean() + model.components() * proj.row(i);
            sq += (rec - ds.row(i)).norm_squared();
        }
        let msq = sq / (n as f64 - 1.0);
        assert!(
            msq <= model.discarded_variance() * (1.0 + 1e-9),
            "msq={msq} discarded={}",
            model.discarded_variance()
        );
    }

    #[test]
    fn bias_factor_one_keeps_everything() {
        let ds = Dataset::from_rows(
            "t",
            &[vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]],
            None,
        )
        .unwrap();
        let out = bias_sample(&ds, 1.0, 7).unwrap();
        assert_eq!(out.features(), ds.features());
    }

    #[test]
    fn bias_leaves_quadrant_two_alone() {
        let rows: Vec<Vec<f64>> = (1..=30).map(|i| vec![-(i as f64), i as f64]).collect();
        let ds = Dataset::from_rows("q2", &rows, None).unwrap();
        let out = bias_sample(&ds, 100.0, 3).unwrap();
        assert_eq!(out.n_samples(), 30);
    }

    #[test]
    fn bias_needs_two_dims() {
        let ds = Dataset::from_rows("one", &[vec![1.0], vec![2.0]], None).unwrap();
        assert!(matches!(
            bias_sample(&ds, 5.0, 1),
            Err(Error::BiasNeedsTwoDims { dim: 1 })
        ));
    }

    #[test]
    fn bias_rows_are_a_subsequence() {
        let mut rng = rng_from(11);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0])
            .collect();
        let ds = Dataset::from_rows("r", &rows, None).unwrap();
        let out = bias_sample(&ds, 3.0, 5).unwrap();
        // every output row appears in the input in the same relative order
        let mut cursor = 0usize;
        for i in 0..out.n_samples() {
            let target = out.row(i);
            while cursor < ds.n_samples() && ds.row(cursor) != target {
                cursor += 1;
            }
            assert!(cursor < ds.n_samples(), "row {i} not found in order");
            cursor += 1;
        }
    }

    #[test]
    fn bias_retention_frequency_converges() {
        // one point per quadrant; retention freq over many seeds must be
        // ~1/factor in QI/QIII and exactly 1 elsewhere
        let ds = Dataset::from_rows(
            "quads",
            &[
                vec![1.0, 1.0],
                vec![-1.0, 1.0],
                vec![-1.0, -1.0],
                vec![1.0, -1.0],
                vec![0.0, 1.0],
            ],
            None,
        )
        .unwrap();
        let factor = 5.0;
        let trials = 30_000u32;
        let mut kept = [0u32; 5];
        for seed in 0..trials {
            let out = bias_sample(&ds, factor, seed as u64).unwrap();
            for i in 0..out.n_samples() {
                let row = out.row(i);
                for (j, k) in kept.iter_mut().enumerate() {
                    if ds.row(j) == row {
                        *k += 1;
                    }
                }
            }
        }
        let freq: Vec<f64> = kept.iter().map(|&k| k as f64 / trials as f64).collect();
        assert!((freq[0] - 0.2).abs() < 0.01, "QI freq {}", freq[0]);
        assert!((freq[2] - 0.2).abs() < 0.01, "QIII freq {}", freq[2]);
        assert_eq!(freq[1], 1.0);
        assert_eq!(freq[3], 1.0);
        assert_eq!(freq[4], 1.0, "zero coordinate is neither quadrant");
    }

    #[test]
    fn bias_iris_matches_binomial_expectation() {
        let iris = load_csv(fixture("iris.csv"), Some("class")).unwrap();
        let model = fit_pca(&iris, 0.999).unwrap();
        let projected = project(&model, &iris).unwrap();
        // brute-force quadrant membership of the projected points
        let x = projected.features();
        let q13 = (0..x.nrows())
            .filter(|&i| {
                let (a, b) = (x[(i, 0)], x[(i, 1)]);
                (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0)
            })
            .count();
        let outside = x.nrows() - q13;
        let factor = 5.0;
        let expectation = outside as f64 + q13 as f64 / factor;

        let trials = 1000u32;
        let mut total = 0usize;
        for seed in 0..trials {
            total += bias_sample(&projected, factor, seed as u64)
                .map(|d| d.n_samples())
                .unwrap_or(0);
        }
        let mean = total as f64 / trials as f64;
        let p = 1.0 / factor;
        let sigma_mean = (q13 as f64 * p * (1.0 - p)).sqrt() / (trials as f64).sqrt();
        assert!(
            (mean - expectation).abs() <= 3.0 * sigma_mean,
            "mean {mean} expectation {expectation} sigma {sigma_mean}"
        );
        // the paper's single illustrative draw kept 95 of 150; ours must at
        // least be in the same regime
        assert!(mean > 90.0 && mean < 120.0, "mean retained {mean}");
    }

    fn balanced_source(n: usize) -> Dataset {
        let mut rng = rng_from(2);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::from_rows("src", &rows, Some(labels)).unwrap()
    }

    #[test]
    fn half_split_is_stratified() {
        let source = balanced_source(100);
        let target = balanced_source(80);
        let spec = SplitSpec {
            seed: 5,
            train_mode: TrainMode::Half,
            repetition: 0,
        };
        let (train, _test) = make_splits(&source, &target, spec).unwrap();
        assert_eq!(train.n_samples(), 50);
        assert_eq!(train.class_counts(), vec![25, 25]);
    }

    #[test]
    fn minimal_split_takes_d_plus_one_per_class() {
        let mut rng = rng_from(3);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let labels = (0..60).map(|i| i % 3).collect();
        let source = Dataset::from_rows("s", &rows, Some(labels)).unwrap();
        let target = source.clone();
        let spec = SplitSpec {
            seed: 1,
            train_mode: TrainMode::Minimal,
            repetition: 0,
        };
        let (train, _test) = make_splits(&source, &target, spec).unwrap();
        assert_eq!(train.n_samples(), 15); // 3 classes x (4+1)
        assert_eq!(train.class_counts(), vec![5, 5, 5]);
    }

    #[test]
    fn minimal_split_names_small_class() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.5]).collect();
        let mut labels = vec![0usize; 10];
        labels[9] = 1; // class 1 has a single instance, needs 3
        let source = Dataset::from_rows("s", &rows, Some(labels)).unwrap();
        let spec = SplitSpec {
            seed: 1,
            train_mode: TrainMode::Minimal,
            repetition: 0,
        };
        match make_splits(&source, &source.clone(), spec) {
            Err(Error::ClassTooSmall { class: 1, have: 1, need: 3 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn splits_are_deterministic_and_disjoint() {
        let source = balanced_source(120);
        let target = balanced_source(90);
        let spec = SplitSpec {
            seed: 42,
            train_mode: TrainMode::Half,
            repetition: 3,
        };
        let (tr1, te1) = make_splits(&source, &target, spec).unwrap();
        let (tr2, te2) = make_splits(&source, &target, spec).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);

        let train_rows: HashSet<Vec<u64>> =
            (0..tr1.n_samples()).map(|i| tr1.row_bits(i)).collect();
        for i in 0..te1.n_samples() {
            assert!(!train_rows.contains(&te1.row_bits(i)));
        }
    }

    #[test]
    fn split_excludes_shared_rows_from_test() {
        // source rows are literally target rows: every train row must be
        // banned from the test set
        let target = balanced_source(60);
        let spec = SplitSpec {
            seed: 9,
            train_mode: TrainMode::Half,
            repetition: 0,
        };
        let outcome = make_splits_full(&target, &target, spec).unwrap();
        let train_rows: HashSet<Vec<u64>> = (0..outcome.train.n_samples())
            .map(|i| outcome.train.row_bits(i))
            .collect();
        for i in 0..outcome.test.n_samples() {
            assert!(!train_rows.contains(&outcome.test.row_bits(i)));
        }
        assert_eq!(
            outcome.test.n_samples() + outcome.held_in_target.n_samples(),
            target.n_samples()
        );
    }

    #[test]
    fn standardize_zeroes_means_and_units_variance() {
        let ds = Dataset::from_rows(
            "s",
            &[vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0]],
            None,
        )
        .unwrap();
        let out = standardize(&ds);
        for j in 0..2 {
            let col = out.features().column(j);
            let mean = col.sum() / 3.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let ds = Dataset::from_rows(
            "rt",
            &[vec![1.25, -3.5], vec![0.0, 2.0]],
            Some(vec![0, 1]),
        )
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let f = write_temp(std::str::from_utf8(&buf).unwrap());
        let back = load_csv(f.path(), Some("class")).unwrap();
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.labels(), ds.labels());
    }
}
