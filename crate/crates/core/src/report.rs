//! Benchmark result aggregation and emission: significance marking, the
//! aligned text table, and the machine-readable CSV/JSON forms.

use serde::Serialize;

use crate::classify::DiscriminantKind;
use crate::data::TrainMode;
use crate::error::{Error, Result};

/// Aggregate of one (dataset, train mode, estimator, classifier) cell over
/// all repetitions. The mean is over successful repetitions only; a cell
/// with no successes renders as a dash.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub mean_error: Option<f64>,
    pub stderr_of_mean: Option<f64>,
    pub n_successes: u32,
    pub n_failures: u32,
}

impl CellResult {
    pub fn from_errors(errors: &[f64], n_failures: u32) -> Self {
        if errors.is_empty() {
            return Self {
                mean_error: None,
                stderr_of_mean: None,
                n_successes: 0,
                n_failures,
            };
        }
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let stderr = if errors.len() > 1 {
            let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            mean_error: Some(mean),
            stderr_of_mean: Some(stderr),
            n_successes: errors.len() as u32,
            n_failures,
        }
    }

    pub fn is_dash(&self) -> bool {
        self.n_successes == 0
    }
}

/// Per-cell significance flag within a report row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    Best,
    Tied,
    Plain,
    Dash,
}

impl Flag {
    pub fn name(self) -> &'static str {
        match self {
            Flag::Best => "best",
            Flag::Tied => "tied",
            Flag::Plain => "plain",
            Flag::Dash => "dash",
        }
    }

    fn table_suffix(self) -> &'static str {
        match self {
            Flag::Best => "*",
            Flag::Tied => "~",
            Flag::Plain => "",
            Flag::Dash => "",
        }
    }
}

impl std::str::FromStr for Flag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best" => Ok(Flag::Best),
            "tied" => Ok(Flag::Tied),
            "plain" => Ok(Flag::Plain),
            "dash" => Ok(Flag::Dash),
            other => Err(Error::InvalidArgument(format!("unknown flag `{other}`"))),
        }
    }
}

/// Marks the lowest mean in the row as best and every cell within
/// `2·(stderr_best + stderr_cell)` of it as tied. Cells with no successes
/// are dashes.
pub fn mark_significance(row: &[CellResult]) -> Vec<Flag> {
    let best = row
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_dash())
        .min_by(|a, b| {
            a.1.mean_error
                .partial_cmp(&b.1.mean_error)
                .unwrap()
                .then(a.0.cmp(&b.0))
        })
        .map(|(i, _)| i);
    let Some(best_idx) = best else {
        return vec![Flag::Dash; row.len()];
    };
    let best_mean = row[best_idx].mean_error.unwrap();
    let best_se = row[best_idx].stderr_of_mean.unwrap();
    row.iter()
        .enumerate()
        .map(|(i, cell)| {
            if cell.is_dash() {
                Flag::Dash
            } else if i == best_idx {
                Flag::Best
            } else if cell.mean_error.unwrap()
                <= best_mean + 2.0 * (best_se + cell.stderr_of_mean.unwrap())
            {
                Flag::Tied
            } else {
                Flag::Plain
            }
        })
        .collect()
}

/// One table row: a (dataset, train mode, classifier) triple with one cell
/// per estimator column.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub dataset: String,
    pub train_mode: TrainMode,
    pub classifier: DiscriminantKind,
    pub cells: Vec<CellResult>,
    pub flags: Vec<Flag>,
}

/// The full benchmark report. Column order is the estimator order of the
/// run configuration.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub estimator_names: Vec<String>,
    pub rows: Vec<ReportRow>,
}

#[derive(Serialize)]
struct JsonCell<'a> {
    estimator: &'a str,
    mean: Option<f64>,
    stderr: Option<f64>,
    n_success: u32,
    n_fail: u32,
    flag: &'a str,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    dataset: &'a str,
    train_mode: &'a str,
    classifier: &'a str,
    cells: Vec<JsonCell<'a>>,
}

impl ExperimentReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Paper-style cell text: three decimals without the leading zero,
    /// `*` for best, `~` for tied-with-best, `-` for a failed cell.
    pub fn cell_text(cell: &CellResult, flag: Flag) -> String {
        match cell.mean_error {
            None => "-".to_owned(),
            Some(mean) => {
                let digits = format!("{mean:.3}");
                let trimmed = digits.strip_prefix('0').unwrap_or(&digits);
                format!("{}{}", trimmed, flag.table_suffix())
            }
        }
    }

    /// Human-readable aligned table.
    pub fn render_table(&self) -> String {
        let mut header: Vec<String> = vec!["dataset".into(), "mode".into(), "classifier".into()];
        header.extend(self.estimator_names.iter().cloned());
        let mut grid: Vec<Vec<String>> = vec![header];
        for row in &self.rows {
            let mut line = vec![
                row.dataset.clone(),
                row.train_mode.name().to_owned(),
                row.classifier.name().to_owned(),
            ];
            for (cell, &flag) in row.cells.iter().zip(&row.flags) {
                line.push(Self::cell_text(cell, flag));
            }
            grid.push(line);
        }
        let cols = grid[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| grid.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &grid {
            let mut line = String::new();
            for (c, field) in row.iter().enumerate() {
                if c > 0 {
                    line.push_str("  ");
                }
                line.push_str(&format!("{:<width$}", field, width = widths[c]));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    /// Machine-readable CSV, one line per cell. Means and standard errors
    /// use shortest round-trip float formatting, so re-parsing is lossless.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,train_mode,classifier,estimator,mean,stderr,n_success,n_fail,flag\n");
        for row in &self.rows {
            for ((cell, &flag), name) in row
                .cells
                .iter()
                .zip(&row.flags)
                .zip(&self.estimator_names)
            {
                let mean = cell.mean_error.map(|v| v.to_string()).unwrap_or_default();
                let stderr = cell
                    .stderr_of_mean
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    row.dataset,
                    row.train_mode.name(),
                    row.classifier.name(),
                    name,
                    mean,
                    stderr,
                    cell.n_successes,
                    cell.n_failures,
                    flag.name()
                ));
            }
        }
        out
    }

    /// Parses the CSV emitted by [`ExperimentReport::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| {
            Error::InvalidArgument("empty report csv".into())
        })?;
        if header != "dataset,train_mode,classifier,estimator,mean,stderr,n_success,n_fail,flag" {
            return Err(Error::InvalidArgument(format!(
                "unexpected report header `{header}`"
            )));
        }
        let mut estimator_names: Vec<String> = Vec::new();
        let mut rows: Vec<ReportRow> = Vec::new();
        for (no, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(Error::InvalidArgument(format!(
                    "report csv line {} has {} fields",
                    no + 2,
                    fields.len()
                )));
            }
            let bad = |what: &str| Error::InvalidArgument(format!(
                "report csv line {}: bad {what}",
                no + 2
            ));
            let dataset = fields[0].to_owned();
            let train_mode: TrainMode = fields[1].parse()?;
            let classifier: DiscriminantKind = fields[2].parse()?;
            let estimator = fields[3].to_owned();
            let mean = if fields[4].is_empty() {
                None
            } else {
                Some(fields[4].parse::<f64>().map_err(|_| bad("mean"))?)
            };
            let stderr = if fields[5].is_empty() {
                None
            } else {
                Some(fields[5].parse::<f64>().map_err(|_| bad("stderr"))?)
            };
            let cell = CellResult {
                mean_error: mean,
                stderr_of_mean: stderr,
                n_successes: fields[6].parse().map_err(|_| bad("n_success"))?,
                n_failures: fields[7].parse().map_err(|_| bad("n_fail"))?,
            };
            let flag: Flag = fields[8].parse()?;

            if !estimator_names.contains(&estimator) {
                estimator_names.push(estimator.clone());
            }
            let start_new_row = match rows.last() {
                None => true,
                Some(last) => {
                    last.dataset != dataset
                        || last.train_mode != train_mode
                        || last.classifier != classifier
                        || last.cells.len() >= estimator_names.len()
                }
            };
            if start_new_row {
                rows.push(ReportRow {
                    dataset,
                    train_mode,
                    classifier,
                    cells: Vec::new(),
                    flags: Vec::new(),
                });
            }
            let row = rows.last_mut().unwrap();
            row.cells.push(cell);
            row.flags.push(flag);
        }
        Ok(Self {
            estimator_names,
            rows,
        })
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<JsonRow> = self
            .rows
            .iter()
            .map(|row| JsonRow {
                dataset: &row.dataset,
                train_mode: row.train_mode.name(),
                classifier: row.classifier.name(),
                cells: row
                    .cells
                    .iter()
                    .zip(&row.flags)
                    .zip(&self.estimator_names)
                    .map(|((cell, &flag), name)| JsonCell {
                        estimator: name,
                        mean: cell.mean_error,
                        stderr: cell.stderr_of_mean,
                        n_success: cell.n_successes,
                        n_fail: cell.n_failures,
                        flag: flag.name(),
                    })
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("report serialization cannot fail")
    }
}
