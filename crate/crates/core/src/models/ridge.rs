use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

use super::{check_training, ModelError, Result};
use crate::geometry::{column_means, row};

/// Ridge regression with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    weights: Vec<f64>,
    intercept: f64,
    r: f64,
}

impl RidgeModel {
    pub fn new(weights: Vec<f64>, intercept: f64, r: f64) -> Self {
        Self { weights, intercept, r }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn regularization(&self) -> f64 {
        self.r
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.weights.len(),
                actual: x.ncols(),
            });
        }
        let x = x.as_standard_layout();
        Ok((0..x.nrows()).map(|i| self.predict_one(row(&x, i))).collect())
    }
}

/// Minimizes `‖y − Xw − b‖² + r‖w‖²`.
///
/// The data are centered first so the intercept drops out of the penalized
/// system `(XcᵀXc + rI) w = Xcᵀyc`, which is solved by Cholesky. With `r = 0`
/// (or a numerically singular system) the minimum-norm solution is taken from
/// an SVD.
pub fn ridge_fit(x: &Array2<f64>, y: &[f64], r: f64) -> Result<RidgeModel> {
    check_training(x, y)?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(ModelError::InvalidParameter(format!("r must be >= 0, got {r}")));
    }
    let x = x.as_standard_layout();
    let (n, d) = x.dim();
    let x_mean = column_means(&x);
    let y_mean = y.iter().sum::<f64>() / n as f64;

    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut centered = vec![0.0; d];
    for i in 0..n {
        for (c, (v, m)) in centered.iter_mut().zip(row(&x, i).iter().zip(&x_mean)) {
            *c = v - m;
        }
        let yc = y[i] - y_mean;
        for a in 0..d {
            rhs[a] += centered[a] * yc;
            for b in a..d {
                gram[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
        gram[(a, a)] += r;
    }

    let cholesky = if r > 0.0 { gram.clone().cholesky() } else { None };
    let w = match cholesky {
        Some(ch) => ch.solve(&rhs),
        None => {
            let svd = gram.svd(true, true);
            let max_sv = svd.singular_values.max();
            let eps = max_sv * 1e-12 * d as f64;
            svd.solve(&rhs, eps).map_err(|_| ModelError::Singular)?
        }
    };
    let weights: Vec<f64> = w.iter().copied().collect();
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    if !intercept.is_finite() || weights.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Singular);
    }
    Ok(RidgeModel { weights, intercept, r })
}
