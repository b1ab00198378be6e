//! Time-series container, CSV ingestion, and evaluation metrics.

use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{DybmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Binary,
    Real,
}

impl std::fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeriesKind::Binary => write!(f, "binary"),
            SeriesKind::Real => write!(f, "real"),
        }
    }
}

/// Ordered multivariate observations, one row per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Array2<f64>,
    pub kind: SeriesKind,
    pub names: Vec<String>,
}

impl TimeSeries {
    pub fn new(values: Array2<f64>, kind: SeriesKind, names: Vec<String>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(DybmError::Input("series must have T >= 1 and N >= 1".into()));
        }
        if names.len() != values.ncols() {
            return Err(DybmError::Input(format!(
                "{} column names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        let series = TimeSeries { values, kind, names };
        series.check_domain()?;
        Ok(series)
    }

    fn check_domain(&self) -> Result<()> {
        for ((t, j), &v) in self.values.indexed_iter() {
            if !v.is_finite() {
                return Err(DybmError::Input(format!(
                    "non-finite value at row {}, column {}",
                    t + 2,
                    self.names[j]
                )));
            }
            if self.kind == SeriesKind::Binary && v != 0.0 && v != 1.0 {
                return Err(DybmError::Input(format!(
                    "value {} at row {}, column {} is not 0 or 1",
                    v,
                    t + 2,
                    self.names[j]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f64> {
        self.values.row(t)
    }
}

/// Reads a header-plus-rows CSV. Row numbers in errors are 1-based file lines
/// (header is line 1) so they match what an editor shows.
pub fn load_csv(path: &Path, kind: SeriesKind) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| DybmError::Input(format!("{}: {}", path.display(), e)))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| DybmError::Input(format!("{}: bad header: {}", path.display(), e)))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    if names.is_empty() {
        return Err(DybmError::Input(format!("{}: empty file", path.display())));
    }
    let n = names.len();
    let mut rows: Vec<f64> = Vec::new();
    let mut t = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| DybmError::Input(format!("{}: {}", path.display(), e)))?;
        if record.len() != n {
            return Err(DybmError::Input(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                t + 2,
                record.len(),
                n
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                DybmError::Input(format!(
                    "{}: row {}, column {}: '{}' is not a number",
                    path.display(),
                    t + 2,
                    names[j],
                    field
                ))
            })?;
            rows.push(v);
        }
        t += 1;
    }
    if t == 0 {
        return Err(DybmError::Input(format!("{}: no data rows", path.display())));
    }
    let values = Array2::from_shape_vec((t, n), rows)
        .map_err(|e| DybmError::Input(format!("{}: {}", path.display(), e)))?;
    TimeSeries::new(values, kind, names)
}

/// f64 Display prints the shortest decimal that round-trips, so
/// load_csv(write_csv(s)) reproduces s exactly.
pub fn write_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| DybmError::Input(e.to_string()))?;
    writer
        .write_record(&series.names)
        .map_err(|e| DybmError::Input(e.to_string()))?;
    for row in series.values.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writer
            .write_record(&fields)
            .map_err(|e| DybmError::Input(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub nll_per_step: f64,
    pub rmse: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Negated mean of per-step log-likelihoods.
pub fn nll_score(log_likelihoods: &[f64]) -> Result<f64> {
    if log_likelihoods.is_empty() {
        return Err(DybmError::Input("nll_score needs at least one step".into()));
    }
    let sum: f64 = log_likelihoods.iter().sum();
    Ok(-sum / log_likelihoods.len() as f64)
}

pub fn rmse(predicted: &Array2<f64>, actual: &Array2<f64>) -> Result<f64> {
    if predicted.dim() != actual.dim() {
        return Err(DybmError::Input(format!(
            "rmse shape mismatch: {:?} vs {:?}",
            predicted.dim(),
            actual.dim()
        )));
    }
    if predicted.is_empty() {
        return Err(DybmError::Input("rmse needs at least one entry".into()));
    }
    let mse = predicted
        .iter()
        .zip(actual.iter())
        .map(|(p, a)| (p - a) * (p - a))
        .sum::<f64>()
        / predicted.len() as f64;
    Ok(mse.sqrt())
}

/// Fraction of entries where thresholding the predicted probability at 0.5
/// (ties toward 0) matches the observed bit.
pub fn binary_accuracy(predicted_probs: &Array2<f64>, actual: &Array2<f64>) -> Result<f64> {
    if predicted_probs.dim() != actual.dim() {
        return Err(DybmError::Input(format!(
            "accuracy shape mismatch: {:?} vs {:?}",
            predicted_probs.dim(),
            actual.dim()
        )));
    }
    if predicted_probs.is_empty() {
        return Err(DybmError::Input("accuracy needs at least one entry".into()));
    }
    let hits = predicted_probs
        .iter()
        .zip(actual.iter())
        .filter(|(p, a)| {
            let bit = if **p > 0.5 { 1.0 } else { 0.0 };
            bit == **a
        })
        .count();
    Ok(hits as f64 / predicted_probs.len() as f64)
}
