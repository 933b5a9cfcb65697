//! Datasets and the data-side statistics consumed by the temperature formulas.
//!
//! A dataset stores `n` rows of `K - 1` real features plus a scalar label.
//! The `K`-th feature component is an implicit constant 1 (the intercept
//! column); it is never stored, so every formula that iterates over the `K`
//! parameter dimensions treats the last one as the bias. All variances and
//! covariances use the population convention (divide by `n`).

use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::RngExt;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::batch_rng;

/// Immutable labeled dataset with an implicit trailing bias feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>, // row-major, n × stored_dim
    labels: Vec<f64>,
    n: usize,
    stored_dim: usize,
}

impl Dataset {
    /// Build a dataset from feature rows and labels.
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if features.is_empty() || labels.is_empty() {
            return Err(Error::InvalidDataset {
                reason: "dataset needs at least one row".into(),
            });
        }
        if features.len() != labels.len() {
            return Err(Error::InvalidDataset {
                reason: format!(
                    "{} feature rows but {} labels",
                    features.len(),
                    labels.len()
                ),
            });
        }
        let stored_dim = features[0].len();
        let mut flat = Vec::with_capacity(features.len() * stored_dim);
        for (i, row) in features.iter().enumerate() {
            if row.len() != stored_dim {
                return Err(Error::InvalidDataset {
                    reason: format!(
                        "row {} has {} features, expected {}",
                        i,
                        row.len(),
                        stored_dim
                    ),
                });
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::InvalidDataset {
                        reason: format!("non-finite feature {v} at row {i}"),
                    });
                }
                flat.push(v);
            }
        }
        for (i, &y) in labels.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::InvalidDataset {
                    reason: format!("non-finite label {y} at row {i}"),
                });
            }
        }
        Ok(Dataset {
            n: labels.len(),
            stored_dim,
            features: flat,
            labels,
        })
    }

    /// Load a dataset from a headered CSV file, taking `label_column` as the
    /// label and every remaining column, in header order, as a feature.
    pub fn load_csv<P: AsRef<Path>>(path: P, label_column: &str) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile {
                path: path.display().to_string(),
            });
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let label_idx = headers
            .iter()
            .position(|h| h == label_column)
            .ok_or_else(|| Error::MissingColumn {
                column: label_column.to_string(),
            })?;

        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (row_idx, record) in reader.records().enumerate() {
            let record = record?;
            let mut row = Vec::with_capacity(headers.len().saturating_sub(1));
            for (col_idx, cell) in record.iter().enumerate() {
                let value: f64 = cell.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                    Error::NonNumericCell {
                        row: row_idx + 1,
                        column: headers
                            .get(col_idx)
                            .cloned()
                            .unwrap_or_else(|| format!("#{col_idx}")),
                        value: cell.to_string(),
                    }
                })?;
                if col_idx == label_idx {
                    labels.push(value);
                } else {
                    row.push(value);
                }
            }
            features.push(row);
        }
        if features.is_empty() {
            return Err(Error::EmptyBody);
        }
        Dataset::new(features, labels)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Never true: construction requires at least one row.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of stored feature components (`K - 1`).
    pub fn stored_dim(&self) -> usize {
        self.stored_dim
    }

    /// Parameter dimension `K`: stored features plus the implicit bias.
    pub fn param_dim(&self) -> usize {
        self.stored_dim + 1
    }

    pub fn feature(&self, row: usize, col: usize) -> f64 {
        self.features[row * self.stored_dim + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.features[row * self.stored_dim..(row + 1) * self.stored_dim]
    }

    pub fn label(&self, row: usize) -> f64 {
        self.labels[row]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Design matrix with the explicit bias column appended (n × K).
    pub fn design_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.param_dim(), |i, j| {
            if j < self.stored_dim {
                self.feature(i, j)
            } else {
                1.0
            }
        })
    }

    pub fn label_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.labels)
    }

    /// Concatenate two datasets with the same feature dimension.
    pub fn concat(a: &Dataset, b: &Dataset) -> Result<Dataset> {
        if a.stored_dim != b.stored_dim {
            return Err(Error::InvalidDataset {
                reason: format!(
                    "cannot concatenate datasets with {} and {} features",
                    a.stored_dim, b.stored_dim
                ),
            });
        }
        let mut features = a.features.clone();
        features.extend_from_slice(&b.features);
        let mut labels = a.labels.clone();
        labels.extend_from_slice(&b.labels);
        Ok(Dataset {
            n: a.n + b.n,
            stored_dim: a.stored_dim,
            features,
            labels,
        })
    }

    /// True when every label is exactly 0 or 1.
    pub fn labels_are_binary(&self) -> bool {
        self.labels.iter().all(|&y| y == 0.0 || y == 1.0)
    }

    /// First row whose label is not in {0, 1}, if any.
    pub fn first_non_binary_label(&self) -> Option<(usize, f64)> {
        self.labels
            .iter()
            .enumerate()
            .find(|(_, &y)| y != 0.0 && y != 1.0)
            .map(|(i, &y)| (i, y))
    }
}

/// Summary statistics of a dataset, bias-augmented where the formulas are.
///
/// `mean_sq[j]` is the mean of the squared `j`-th feature component with the
/// final entry pinned to 1 for the bias; `mean_abs` is the same for absolute
/// values. Covariance blocks cover the stored features only.
#[derive(Debug, Clone)]
pub struct DataStats {
    pub mean_sq: Vec<f64>,
    pub mean_abs: Vec<f64>,
    pub label_mean_sq: f64,
    pub label_var: f64,
    /// Pearson correlation; populated only for K = 2 with non-degenerate x, y.
    pub corr_2d: Option<f64>,
    pub cov_xx: DMatrix<f64>,
    pub cov_xy: DVector<f64>,
    pub cov_yx: RowDVector<f64>,
    pub cov_yy: f64,
}

impl DataStats {
    /// Mean of `mean_sq` over all K components, bias included.
    pub fn component_mean_sq_avg(&self) -> f64 {
        self.mean_sq.iter().sum::<f64>() / self.mean_sq.len() as f64
    }

    /// Mean of `mean_abs` over all K components, bias included.
    pub fn component_mean_abs_avg(&self) -> f64 {
        self.mean_abs.iter().sum::<f64>() / self.mean_abs.len() as f64
    }

    /// Mean of the squared augmented row norm, `(1/n) Σ_i (‖x_i‖² + 1)`.
    pub fn augmented_norm_sq_mean(&self) -> f64 {
        self.mean_sq.iter().sum::<f64>()
    }
}

/// Compute [`DataStats`] for a dataset.
pub fn stats(d: &Dataset) -> DataStats {
    let n = d.len() as f64;
    let dim = d.stored_dim();

    let mut mean_sq = vec![0.0; dim + 1];
    let mut mean_abs = vec![0.0; dim + 1];
    let mut x_mean = vec![0.0; dim];
    for i in 0..d.len() {
        for j in 0..dim {
            let x = d.feature(i, j);
            mean_sq[j] += x * x;
            mean_abs[j] += x.abs();
            x_mean[j] += x;
        }
    }
    for j in 0..dim {
        mean_sq[j] /= n;
        mean_abs[j] /= n;
        x_mean[j] /= n;
    }
    mean_sq[dim] = 1.0;
    mean_abs[dim] = 1.0;

    let y_mean = d.labels().iter().sum::<f64>() / n;
    let label_mean_sq = d.labels().iter().map(|y| y * y).sum::<f64>() / n;
    let label_var = d.labels().iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n;

    let mut cov_xx = DMatrix::zeros(dim, dim);
    let mut cov_xy = DVector::zeros(dim);
    for i in 0..d.len() {
        let dy = d.label(i) - y_mean;
        for j in 0..dim {
            let dj = d.feature(i, j) - x_mean[j];
            cov_xy[j] += dj * dy;
            for k in 0..dim {
                cov_xx[(j, k)] += dj * (d.feature(i, k) - x_mean[k]);
            }
        }
    }
    cov_xx /= n;
    cov_xy /= n;
    let cov_yx = cov_xy.transpose();

    let corr_2d = if dim == 1 && cov_xx[(0, 0)] > 0.0 && label_var > 0.0 {
        Some((cov_xy[0] / (cov_xx[(0, 0)] * label_var).sqrt()).clamp(-1.0, 1.0))
    } else {
        None
    };

    DataStats {
        mean_sq,
        mean_abs,
        label_mean_sq,
        label_var,
        corr_2d,
        cov_xx,
        cov_xy,
        cov_yx,
        cov_yy: label_var,
    }
}

/// Synthetic dataset generators.
#[derive(Debug, Clone)]
pub enum SynthKind {
    /// `x ~ N(0, 1)`, `y = slope · x + intercept + noise · ε`.
    LinearNoise {
        slope: f64,
        intercept: f64,
        noise: f64,
    },
    /// `x ~ N(0, 1)^dim`, `y ~ Bernoulli(sigmoid(w · x̃))` for augmented `x̃`.
    Logistic { weights: Vec<f64> },
    /// `x ~ N(0, scale²)^dim`, `y ~ N(0, 1)`.
    GaussianCloud { scale: f64, dim: usize },
}

/// Generate a synthetic dataset, deterministic for a fixed seed.
pub fn synth(kind: &SynthKind, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParams {
            reason: "n must be at least 1".into(),
        });
    }
    let mut rng = batch_rng(seed, 0);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    match kind {
        SynthKind::LinearNoise {
            slope,
            intercept,
            noise,
        } => {
            if *noise < 0.0 || !slope.is_finite() || !intercept.is_finite() {
                return Err(Error::InvalidParams {
                    reason: "linear-noise needs finite slope/intercept and noise >= 0".into(),
                });
            }
            for _ in 0..n {
                let x: f64 = rng.sample(StandardNormal);
                let eps: f64 = rng.sample(StandardNormal);
                features.push(vec![x]);
                labels.push(slope * x + intercept + noise * eps);
            }
        }
        SynthKind::Logistic { weights } => {
            if weights.len() < 2 {
                return Err(Error::InvalidParams {
                    reason: "logistic needs at least a slope and an intercept weight".into(),
                });
            }
            let dim = weights.len() - 1;
            for _ in 0..n {
                let row: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let z: f64 = row
                    .iter()
                    .zip(&weights[..dim])
                    .map(|(x, w)| x * w)
                    .sum::<f64>()
                    + weights[dim];
                let p = 1.0 / (1.0 + (-z).exp());
                let y = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                features.push(row);
                labels.push(y);
            }
        }
        SynthKind::GaussianCloud { scale, dim } => {
            if *scale <= 0.0 || *dim == 0 {
                return Err(Error::InvalidParams {
                    reason: "gaussian-cloud needs scale > 0 and dim >= 1".into(),
                });
            }
            for _ in 0..n {
                let row: Vec<f64> = (0..*dim)
                    .map(|_| {
                        let z: f64 = rng.sample(StandardNormal);
                        scale * z
                    })
                    .collect();
                features.push(row);
                labels.push(rng.sample(StandardNormal));
            }
        }
    }
    Dataset::new(features, labels)
}
