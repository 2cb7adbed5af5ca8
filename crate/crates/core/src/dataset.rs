//! Regression datasets: CSV ingestion, one-hot encoding, z-score
//! standardization, pool/test splitting and synthetic generators.
//!
//! Categorical columns are stored in the feature matrix as integer codes
//! into a lexicographically sorted vocabulary until [`one_hot_encode`] expands
//! them into indicator columns.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{row, take_rows};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: line {line}, column '{column}': cannot parse '{value}' as a finite number")]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("{path}: line {line}, column '{column}': missing value")]
    MissingValue {
        path: PathBuf,
        line: u64,
        column: String,
    },
    #[error("label column '{0}' not found in header")]
    MissingLabel(String),
    #[error("categorical column '{0}' not found in header")]
    UnknownColumn(String),
    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),
    #[error("{0}: no data rows")]
    Empty(PathBuf),
    #[error("column '{column}' has no category with code {code}")]
    UnknownCategory { column: String, code: f64 },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("pool fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("a split of {n} samples at fraction {fraction} leaves an empty side")]
    EmptySplit { n: usize, fraction: f64 },
    #[error("unknown synthetic generator '{0}' (expected 'linear' or 'clustered[:blobs]')")]
    UnknownGenerator(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dataset '{0}' still has categorical columns; one-hot encode it first")]
    NotEncoded(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnKind {
    Numeric,
    /// Cell values are codes into `vocabulary`, which is sorted.
    Categorical { vocabulary: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ColumnKind::Categorical { .. })
    }
}

/// A feature matrix (one row per sample) with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Array2<f64>,
    labels: Option<Vec<f64>>,
    columns: Vec<Column>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Array2<f64>,
        labels: Option<Vec<f64>>,
        columns: Vec<Column>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(DatasetError::Invalid(format!(
                "need at least one sample and one feature, got {n}x{d}"
            )));
        }
        if columns.len() != d {
            return Err(DatasetError::DimensionMismatch {
                expected: d,
                actual: columns.len(),
            });
        }
        if let Some(y) = &labels {
            if y.len() != n {
                return Err(DatasetError::Invalid(format!(
                    "{} labels for {n} samples",
                    y.len()
                )));
            }
            if let Some(i) = y.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::Invalid(format!("label {i} is not finite")));
            }
        }
        let features = features.as_standard_layout().into_owned();
        if let Some((pos, _)) = features.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                row: pos / d,
                column: pos % d,
            });
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
            columns,
        })
    }

    /// All-numeric dataset with generated column names `x1..xd`.
    pub fn from_features(
        name: impl Into<String>,
        features: Array2<f64>,
        labels: Option<Vec<f64>>,
    ) -> Result<Self> {
        let columns = (1..=features.ncols())
            .map(|j| Column::numeric(format!("x{j}")))
            .collect();
        Self::new(name, features, labels, columns)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        row(&self.features, i)
    }

    pub fn has_categorical(&self) -> bool {
        self.columns.iter().any(Column::is_categorical)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rows `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: take_rows(&self.features, idx),
            labels: self
                .labels
                .as_ref()
                .map(|y| idx.iter().map(|&i| y[i]).collect()),
            columns: self.columns.clone(),
        }
    }
}

/// Reads a headered CSV file. Every column other than `label_column` becomes
/// a feature; columns listed in `categorical_columns` keep their raw strings
/// as categories.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: Option<&str>,
    categorical_columns: &[String],
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |source| DatasetError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();

    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(DatasetError::DuplicateColumn(h.clone()));
        }
    }
    let label_idx = match label_column {
        Some(label) => Some(
            header
                .iter()
                .position(|h| h == label)
                .ok_or_else(|| DatasetError::MissingLabel(label.to_owned()))?,
        ),
        None => None,
    };
    for c in categorical_columns {
        if !header.contains(c) || Some(c.as_str()) == label_column {
            return Err(DatasetError::UnknownColumn(c.clone()));
        }
    }
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| Some(j) != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(DatasetError::Invalid("no feature columns".into()));
    }
    let is_cat: Vec<bool> = feature_cols
        .iter()
        .map(|&j| categorical_columns.contains(&header[j]))
        .collect();

    let parse = |cell: &str, line: u64, j: usize| -> Result<f64> {
        if cell.is_empty() {
            return Err(DatasetError::MissingValue {
                path: path.to_path_buf(),
                line,
                column: header[j].clone(),
            });
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(DatasetError::Parse {
                path: path.to_path_buf(),
                line,
                column: header[j].clone(),
                value: cell.to_owned(),
            }),
        }
    };

    // Numeric cells are parsed immediately; categorical ones are kept as text
    // until the vocabulary is known.
    let mut numeric: Vec<f64> = Vec::new();
    let mut raw_categories: Vec<Vec<String>> = vec![Vec::new(); feature_cols.len()];
    let mut labels = Vec::new();
    let mut n = 0usize;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        for (k, &j) in feature_cols.iter().enumerate() {
            let cell = &record[j];
            if is_cat[k] {
                if cell.is_empty() {
                    return Err(DatasetError::MissingValue {
                        path: path.to_path_buf(),
                        line,
                        column: header[j].clone(),
                    });
                }
                raw_categories[k].push(cell.to_owned());
                numeric.push(0.0);
            } else {
                numeric.push(parse(cell, line, j)?);
            }
        }
        if let Some(l) = label_idx {
            labels.push(parse(&record[l], line, l)?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(DatasetError::Empty(path.to_path_buf()));
    }

    let d = feature_cols.len();
    let mut columns = Vec::with_capacity(d);
    for (k, &j) in feature_cols.iter().enumerate() {
        if is_cat[k] {
            let vocabulary: Vec<String> = raw_categories[k]
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            for (i, value) in raw_categories[k].iter().enumerate() {
                let code = vocabulary.binary_search(value).expect("value is in vocabulary");
                numeric[i * d + k] = code as f64;
            }
            columns.push(Column {
                name: header[j].clone(),
                kind: ColumnKind::Categorical { vocabulary },
            });
        } else {
            columns.push(Column::numeric(header[j].clone()));
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let features = Array2::from_shape_vec((n, d), numeric).expect("row-major buffer");
    Dataset::new(name, features, label_idx.map(|_| labels), columns)
}

/// Expands every categorical column into one indicator column per category.
/// Numeric columns pass through in place.
pub fn one_hot_encode(data: &Dataset) -> Result<Dataset> {
    if !data.has_categorical() {
        return Ok(data.clone());
    }
    let n = data.n_samples();
    let mut columns = Vec::new();
    for c in &data.columns {
        match &c.kind {
            ColumnKind::Numeric => columns.push(c.clone()),
            ColumnKind::Categorical { vocabulary } => {
                columns.extend(
                    vocabulary
                        .iter()
                        .map(|v| Column::numeric(format!("{}={}", c.name, v))),
                );
            }
        }
    }
    let width = columns.len();
    let mut out = Vec::with_capacity(n * width);
    for i in 0..n {
        for (c, &v) in data.columns.iter().zip(data.sample(i)) {
            match &c.kind {
                ColumnKind::Numeric => out.push(v),
                ColumnKind::Categorical { vocabulary } => {
                    let code = v as usize;
                    if v < 0.0 || v.fract() != 0.0 || code >= vocabulary.len() {
                        return Err(DatasetError::UnknownCategory {
                            column: c.name.clone(),
                            code: v,
                        });
                    }
                    out.extend((0..vocabulary.len()).map(|k| if k == code { 1.0 } else { 0.0 }));
                }
            }
        }
    }
    let features = Array2::from_shape_vec((n, width), out).expect("row-major buffer");
    Dataset::new(data.name.clone(), features, data.labels.clone(), columns)
}

/// Per-column z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    /// Strictly positive; constant columns store 1.
    pub stds: Vec<f64>,
}

impl StandardizationParams {
    pub fn fit(features: &Array2<f64>) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 {
            return Err(DatasetError::Invalid("cannot standardize zero rows".into()));
        }
        if let Some((pos, _)) = features.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                row: pos / d,
                column: pos % d,
            });
        }
        let mut means = Vec::with_capacity(d);
        let mut stds = Vec::with_capacity(d);
        for col in features.columns() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let std = var.sqrt();
            // Rounding noise on a constant column must not blow up into a
            // unit-variance column.
            let constant = std <= 1e-12 * mean.abs().max(1.0);
            means.push(mean);
            stds.push(if constant { 1.0 } else { std });
        }
        Ok(Self { means, stds })
    }

    pub fn apply(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.means.len() {
            return Err(DatasetError::DimensionMismatch {
                expected: self.means.len(),
                actual: features.ncols(),
            });
        }
        let mut out = features.as_standard_layout().into_owned();
        for mut r in out.rows_mut() {
            for ((v, m), s) in r.iter_mut().zip(&self.means).zip(&self.stds) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    fn apply_to(&self, data: &Dataset) -> Result<Dataset> {
        Ok(Dataset {
            features: self.apply(&data.features)?,
            ..data.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub pool_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(pool_fraction: f64, seed: u64) -> Self {
        Self {
            pool_fraction,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoolTestSplit {
    /// Standardized with `params`.
    pub pool: Dataset,
    /// Standardized with the pool's `params`.
    pub test: Dataset,
    pub pool_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub params: StandardizationParams,
}

/// Seeded shuffle, then the first `ceil(pool_fraction * N)` rows form the pool.
/// Standardization is fitted on the pool only; labels are left untouched.
pub fn split_pool_test(data: &Dataset, spec: SplitSpec) -> Result<PoolTestSplit> {
    let f = spec.pool_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(DatasetError::InvalidFraction(f));
    }
    if data.has_categorical() {
        return Err(DatasetError::NotEncoded(data.name.clone()));
    }
    let n = data.n_samples();
    let pool_size = (f * n as f64).ceil() as usize;
    if n < 2 || pool_size >= n {
        return Err(DatasetError::EmptySplit { n, fraction: f });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let test_indices = order.split_off(pool_size);
    let pool_indices = order;

    let raw_pool = data.subset(&pool_indices);
    let params = StandardizationParams::fit(&raw_pool.features)?;
    let pool = params.apply_to(&raw_pool)?;
    let test = params.apply_to(&data.subset(&test_indices))?;
    Ok(PoolTestSplit {
        pool,
        test,
        pool_indices,
        test_indices,
        params,
    })
}

/// Fits standardization on the whole dataset and applies it.
pub fn standardize(data: &Dataset) -> Result<(Dataset, StandardizationParams)> {
    let params = StandardizationParams::fit(&data.features)?;
    Ok((params.apply_to(data)?, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// `y = w·x + noise`, with `x ~ N(0, I)`.
    Linear,
    /// Well-separated Gaussian blobs, each with its own affine label map.
    Clustered { blobs: usize },
}

impl std::str::FromStr for SynthKind {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.split_once(':') {
            None if lower == "linear" => Ok(SynthKind::Linear),
            None if lower == "clustered" => Ok(SynthKind::Clustered { blobs: 3 }),
            Some(("clustered", k)) => match k.parse::<usize>() {
                Ok(blobs) if blobs >= 1 => Ok(SynthKind::Clustered { blobs }),
                _ => Err(DatasetError::UnknownGenerator(s.to_owned())),
            },
            _ => Err(DatasetError::UnknownGenerator(s.to_owned())),
        }
    }
}

/// A generated dataset together with the ground truth used to build it.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Blob of every sample (all zeros for the linear generator).
    pub blob_of: Vec<usize>,
    /// Per-blob weight vectors.
    pub weights: Vec<Vec<f64>>,
    /// Per-blob intercepts.
    pub intercepts: Vec<f64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

const BLOB_SPREAD: f64 = 0.5;
const MIN_CENTER_GAP: f64 = 8.0;

pub fn synth_generate(kind: &str, n: usize, d: usize, noise: f64, seed: u64) -> Result<Dataset> {
    Ok(synthesize(kind.parse()?, n, d, noise, seed)?.dataset)
}

pub fn synthesize(kind: SynthKind, n: usize, d: usize, noise: f64, seed: u64) -> Result<Synthetic> {
    if n < 2 {
        return Err(DatasetError::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    if d < 1 {
        return Err(DatasetError::InvalidParameter("d must be at least 1".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(DatasetError::InvalidParameter(format!("noise must be >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (blobs, name) = match kind {
        SynthKind::Linear => (1, format!("linear-n{n}-d{d}")),
        SynthKind::Clustered { blobs } => (blobs, format!("clustered{blobs}-n{n}-d{d}")),
    };
    let weights: Vec<Vec<f64>> = (0..blobs)
        .map(|_| (0..d).map(|_| normal(&mut rng)).collect())
        .collect();
    let intercepts: Vec<f64> = match kind {
        SynthKind::Linear => vec![0.0],
        SynthKind::Clustered { .. } => (0..blobs).map(|_| 2.0 * normal(&mut rng)).collect(),
    };
    let centers: Vec<Vec<f64>> = match kind {
        SynthKind::Linear => vec![vec![0.0; d]],
        SynthKind::Clustered { .. } => separated_centers(&mut rng, blobs, d),
    };
    let spread = match kind {
        SynthKind::Linear => 1.0,
        SynthKind::Clustered { .. } => BLOB_SPREAD,
    };

    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    let mut blob_of = Vec::with_capacity(n);
    for i in 0..n {
        let b = i % blobs;
        let start = x.len();
        for c in &centers[b] {
            x.push(c + spread * normal(&mut rng));
        }
        let xi = &x[start..];
        let clean: f64 = xi.iter().zip(&weights[b]).map(|(a, w)| a * w).sum::<f64>() + intercepts[b];
        y.push(clean + noise * normal(&mut rng));
        blob_of.push(b);
    }
    let features = Array2::from_shape_vec((n, d), x).expect("row-major buffer");
    Ok(Synthetic {
        dataset: Dataset::from_features(name, features, Some(y))?,
        blob_of,
        weights,
        intercepts,
    })
}

fn separated_centers(rng: &mut ChaCha8Rng, blobs: usize, d: usize) -> Vec<Vec<f64>> {
    // Box side grows with the blob count so rejection sampling terminates
    // quickly even in one dimension.
    let half_width = MIN_CENTER_GAP * blobs as f64;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(blobs);
    let mut attempts = 0;
    while centers.len() < blobs {
        let c: Vec<f64> = (0..d).map(|_| rng.random_range(-half_width..half_width)).collect();
        attempts += 1;
        let far_enough = centers
            .iter()
            .all(|o| crate::geometry::euclidean(o, &c) >= MIN_CENTER_GAP);
        if far_enough || attempts > 10_000 {
            centers.push(c);
        }
    }
    centers
}
