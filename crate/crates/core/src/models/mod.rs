//! Evaluation models: ridge regression and RBF ε-SVR, plus RMSE/CC metrics.

mod metrics;
mod ridge;
mod svr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metrics::{evaluate, pearson, Metrics};
pub use ridge::{ridge_fit, RidgeModel};
pub use svr::{svr_fit, svr_fit_with, SvrModel, SvrParams};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("need at least one training sample")]
    NoSamples,
    #[error("{x} feature rows but {y} labels")]
    LengthMismatch { x: usize, y: usize },
    #[error("model expects {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite training input")]
    NonFinite,
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("SVR solver did not converge after {iterations} pair updates (worst KKT violation {worst_violation:.3e})")]
    NonConvergence { iterations: usize, worst_violation: f64 },
    #[error("linear system is singular")]
    Singular,
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Model family and hyperparameters as they appear in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Ridge {
        #[serde(default = "default_ridge_r")]
        r: f64,
    },
    Svr {
        #[serde(default = "default_svr_c")]
        c: f64,
        /// ε is this factor times the population std of the training labels.
        #[serde(default = "default_epsilon_factor")]
        epsilon_factor: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
}

fn default_ridge_r() -> f64 {
    0.1
}
fn default_svr_c() -> f64 {
    50.0
}
fn default_epsilon_factor() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    0.01
}

impl ModelSpec {
    pub fn ridge() -> Self {
        ModelSpec::Ridge { r: default_ridge_r() }
    }

    pub fn svr() -> Self {
        ModelSpec::Svr {
            c: default_svr_c(),
            epsilon_factor: default_epsilon_factor(),
            gamma: default_gamma(),
        }
    }

    pub fn is_ridge(&self) -> bool {
        matches!(self, ModelSpec::Ridge { .. })
    }

    /// Short stable name used in reports ("ridge", "svr").
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Ridge { .. } => "ridge",
            ModelSpec::Svr { .. } => "svr",
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ModelSpec::Ridge { r } => {
                if r == default_ridge_r() {
                    "ridge".into()
                } else {
                    format!("ridge(r={r})")
                }
            }
            ModelSpec::Svr {
                c,
                epsilon_factor,
                gamma,
            } => {
                if (c, epsilon_factor, gamma) == (default_svr_c(), default_epsilon_factor(), default_gamma()) {
                    "svr".into()
                } else {
                    format!("svr(C={c},eps={epsilon_factor},gamma={gamma})")
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Ridge { r } if !(r >= 0.0 && r.is_finite()) => {
                Err(ModelError::InvalidParameter(format!("ridge r must be >= 0, got {r}")))
            }
            ModelSpec::Svr { c, .. } if !(c > 0.0 && c.is_finite()) => {
                Err(ModelError::InvalidParameter(format!("SVR C must be > 0, got {c}")))
            }
            ModelSpec::Svr { epsilon_factor, .. } if !(epsilon_factor >= 0.0) => Err(
                ModelError::InvalidParameter(format!("epsilon factor must be >= 0, got {epsilon_factor}")),
            ),
            ModelSpec::Svr { gamma, .. } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(ModelError::InvalidParameter(format!("SVR gamma must be > 0, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn fit(&self, x: &Array2<f64>, y: &[f64]) -> Result<TrainedModel> {
        self.validate()?;
        match *self {
            ModelSpec::Ridge { r } => ridge_fit(x, y, r).map(TrainedModel::Ridge),
            ModelSpec::Svr {
                c,
                epsilon_factor,
                gamma,
            } => {
                let epsilon = epsilon_factor * population_std(y);
                svr_fit(x, y, c, epsilon, gamma).map(TrainedModel::Svr)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Ridge(RidgeModel),
    Svr(SvrModel),
}

impl TrainedModel {
    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Ridge(m) => m.predict(x),
            TrainedModel::Svr(m) => m.predict(x),
        }
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        match self {
            TrainedModel::Ridge(m) => m.predict_one(x),
            TrainedModel::Svr(m) => m.predict_one(x),
        }
    }
}

/// Standard deviation with the divide-by-n convention; 0 for empty input.
pub fn population_std(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

fn check_training(x: &Array2<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() == 0 {
        return Err(ModelError::NoSamples);
    }
    if x.nrows() != y.len() {
        return Err(ModelError::LengthMismatch {
            x: x.nrows(),
            y: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    Ok(())
}
