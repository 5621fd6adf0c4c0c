//! Feature-table ingestion, validation, standardization, partitioning, and
//! distance computations.
//!
//! A [`Dataset`] is an n×m matrix of finite reals with named columns and an
//! optional per-row categorical ground-truth label. All operations here are
//! pure; datasets are immutable after construction.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("duplicate column name `{0}` in header")]
    DuplicateColumn(String),
    #[error("label column `{0}` not found in header")]
    LabelColumnNotFound(String),
    #[error("no feature columns")]
    NoColumns,
    #[error("no data rows")]
    NoRows,
    #[error("row {row}, column `{column}`: `{value}` is not a finite number")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row} has {found} fields, expected {expected}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("ground truth has {found} entries, expected {expected}")]
    GroundTruthLength { expected: usize, found: usize },
    #[error("value at row {row}, column {column} is not finite")]
    NonFinite { row: usize, column: usize },
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("invalid fold count k={k} for n={n}: need 2 <= k <= n")]
    BadFoldCount { k: usize, n: usize },
    #[error("quality value {0} is negative or not finite")]
    BadQuality(f64),
}

/// An n×m feature table with named columns and optional ground-truth labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<String>,
    values: Vec<Vec<f64>>,
    ground_truth: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset, enforcing the structural invariants: at least one
    /// row and one column, unique non-empty column names, rectangular rows,
    /// every value finite, and a ground-truth vector (when present) with
    /// exactly one entry per row.
    pub fn new(
        columns: Vec<String>,
        values: Vec<Vec<f64>>,
        ground_truth: Option<Vec<String>>,
    ) -> Result<Self, DatasetError> {
        if columns.is_empty() || columns.iter().any(|c| c.is_empty()) {
            return Err(DatasetError::NoColumns);
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(DatasetError::DuplicateColumn(c.clone()));
            }
        }
        if values.is_empty() {
            return Err(DatasetError::NoRows);
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(DatasetError::RaggedRow {
                    row: i,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DatasetError::NonFinite { row: i, column: j });
                }
            }
        }
        if let Some(gt) = &ground_truth {
            if gt.len() != values.len() {
                return Err(DatasetError::GroundTruthLength {
                    expected: values.len(),
                    found: gt.len(),
                });
            }
        }
        Ok(Self {
            columns,
            values,
            ground_truth,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row][col]
    }

    /// Values of one column in row order.
    pub fn column_values(&self, col: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[col]).collect()
    }

    pub fn ground_truth(&self) -> Option<&[String]> {
        self.ground_truth.as_deref()
    }

    /// Ground-truth labels mapped to dense ids in first-occurrence order,
    /// together with the distinct label strings.
    pub fn ground_truth_ids(&self) -> Option<(Vec<usize>, Vec<String>)> {
        self.ground_truth.as_ref().map(|gt| {
            let mut names: Vec<String> = Vec::new();
            let ids = gt
                .iter()
                .map(|label| {
                    match names.iter().position(|n| n == label) {
                        Some(id) => id,
                        None => {
                            names.push(label.clone());
                            names.len() - 1
                        }
                    }
                })
                .collect();
            (ids, names)
        })
    }
}

/// Per-column mean and standard deviation recorded by [`standardize`],
/// serializable as a JSON sidecar for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Columns with zero variance; they standardize to all-zero and are
    /// kept so column indices stay stable for explanation naming.
    pub degenerate: Vec<bool>,
}

impl ScalerParams {
    /// z-scores a single row (degenerate columns map to 0).
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| {
                if self.degenerate[j] {
                    0.0
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect()
    }

    /// Maps one standardized value back to original units.
    pub fn invert_value(&self, col: usize, z: f64) -> f64 {
        if self.degenerate[col] {
            self.mean[col]
        } else {
            z * self.std[col] + self.mean[col]
        }
    }

    /// Inverse-transforms a standardized dataset back to original units.
    pub fn inverse_transform(&self, d: &Dataset) -> Result<Dataset, DatasetError> {
        let values = d
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &z)| self.invert_value(j, z))
                    .collect()
            })
            .collect();
        Dataset::new(
            d.columns().to_vec(),
            values,
            d.ground_truth().map(|g| g.to_vec()),
        )
    }
}

/// Loads a feature table from a CSV file with a header row. When
/// `label_column` names a header, that column is removed from the features
/// and becomes the ground truth.
pub fn load_csv(path: &Path, label_column: Option<&str>) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DatasetError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => DatasetError::Csv(e),
        })?;

    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(DatasetError::DuplicateColumn(h.clone()));
        }
    }
    let label_idx = match label_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DatasetError::LabelColumnNotFound(name.to_string()))?,
        ),
        None => None,
    };
    let columns: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if columns.is_empty() {
        return Err(DatasetError::NoColumns);
    }

    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(DatasetError::RowLength {
                row: row_idx + 1,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(columns.len());
        for (col_idx, field) in record.iter().enumerate() {
            if Some(col_idx) == label_idx {
                labels.push(field.trim().to_string());
                continue;
            }
            let parsed: Result<f64, _> = field.trim().parse();
            match parsed {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(DatasetError::BadCell {
                        row: row_idx + 1,
                        column: header[col_idx].clone(),
                        value: field.to_string(),
                    })
                }
            }
        }
        values.push(row);
    }
    if values.is_empty() {
        return Err(DatasetError::NoRows);
    }
    Dataset::new(columns, values, label_idx.map(|_| labels))
}

/// z-scores every column to mean 0 and population variance 1. Constant
/// columns come out as all-zero and are flagged degenerate.
pub fn standardize(d: &Dataset) -> Result<(Dataset, ScalerParams), DatasetError> {
    let n = d.n_rows();
    if n < 2 {
        return Err(DatasetError::TooFewRows { needed: 2, got: n });
    }
    let m = d.n_cols();
    let mut mean = vec![0.0; m];
    for row in d.rows() {
        for (j, v) in row.iter().enumerate() {
            mean[j] += v;
        }
    }
    for mj in &mut mean {
        *mj /= n as f64;
    }
    let mut var = vec![0.0; m];
    for row in d.rows() {
        for (j, v) in row.iter().enumerate() {
            let dev = v - mean[j];
            var[j] += dev * dev;
        }
    }
    let mut std = vec![0.0; m];
    let mut degenerate = vec![false; m];
    for j in 0..m {
        var[j] /= n as f64;
        std[j] = var[j].sqrt();
        degenerate[j] = std[j] == 0.0;
    }
    let params = ScalerParams {
        mean,
        std,
        degenerate,
    };
    let values = d.rows().iter().map(|row| params.transform_row(row)).collect();
    let scaled = Dataset::new(
        d.columns().to_vec(),
        values,
        d.ground_truth().map(|g| g.to_vec()),
    )?;
    Ok((scaled, params))
}

/// Splits `{0..n-1}` into `k` disjoint folds whose sizes differ by at most
/// one, shuffled deterministically by `seed`.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, DatasetError> {
    if k < 2 || k > n {
        return Err(DatasetError::BadFoldCount { k, n });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        folds.push(indices[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Symmetric n×n matrix of non-negative distances with a zero diagonal.
/// Only the strict upper triangle is stored, so symmetry is exact by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    condensed: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        if i == j {
            return 0.0;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.condensed[lo * self.n - lo * (lo + 1) / 2 + (hi - lo - 1)]
    }

    /// Builds a matrix from a distance function evaluated once per pair.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                condensed.push(f(i, j));
            }
        }
        Self { n, condensed }
    }
}

/// Euclidean distances between all dataset rows.
pub fn pairwise_distances(d: &Dataset) -> DistanceMatrix {
    DistanceMatrix::from_fn(d.n_rows(), |i, j| stats::dist(d.row(i), d.row(j)))
}

/// Video-quality class binned from a session's average resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QualityClass {
    /// Low definition: average quality below 480.
    Ld,
    /// Standard definition: 480 inclusive up to 720 exclusive.
    Sd,
    /// High definition: 720 and above.
    Hd,
}

impl std::fmt::Display for QualityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QualityClass::Ld => write!(f, "LD"),
            QualityClass::Sd => write!(f, "SD"),
            QualityClass::Hd => write!(f, "HD"),
        }
    }
}

/// Bins a non-negative average-quality value into LD/SD/HD. The class
/// definitions overlap at exactly 720; the HD lower bound wins, so 720
/// maps to HD.
pub fn bin_quality(avgq: f64) -> Result<QualityClass, DatasetError> {
    if !avgq.is_finite() || avgq < 0.0 {
        return Err(DatasetError::BadQuality(avgq));
    }
    Ok(if avgq < 480.0 {
        QualityClass::Ld
    } else if avgq < 720.0 {
        QualityClass::Sd
    } else {
        QualityClass::Hd
    })
}
