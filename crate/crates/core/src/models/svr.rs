//! ε-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved in its 2n-variable form
//!
//! ```text
//! min ½ aᵀQa + pᵀa   s.t. 0 ≤ a ≤ C,  sᵀa = 0
//! a = (α, α*),  s = (+1…, −1…),  Q = [[K, −K], [−K, K]],  p = (ε − y, ε + y)
//! ```
//!
//! by sequential minimal optimization: each step picks the maximal violating
//! pair and solves the two-variable subproblem analytically.

use ndarray::Array2;

use super::{check_training, ModelError, Result};
use crate::geometry::{row, sq_euclidean, take_rows};

/// Smallest curvature used for a two-variable step.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Stop when the maximal KKT violation `m(a) − M(a)` falls to this value.
    /// Defaults to `1e-5·C`; at `1e-3·C` small problems can stop with the
    /// dual objective off by more than 1e-4 relative.
    pub tol: f64,
    /// Cap on pair updates.
    pub max_iter: usize,
}

impl SvrParams {
    pub fn new(c: f64, epsilon: f64, gamma: f64) -> Self {
        Self {
            c,
            epsilon,
            gamma,
            tol: 1e-5 * c,
            max_iter: 100_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.tol > 0.0) {
            return Err(ModelError::InvalidParameter("tol must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    support_vectors: Array2<f64>,
    support_coefficients: Vec<f64>,
    /// α − α* for every training sample.
    coefficients: Vec<f64>,
    bias: f64,
    params: SvrParams,
    objective: f64,
    iterations: usize,
    violation: f64,
}

impl SvrModel {
    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// `α_i − α*_i` for every training sample, in training order.
    pub fn dual_coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn support_vectors(&self) -> &Array2<f64> {
        &self.support_vectors
    }

    pub fn params(&self) -> &SvrParams {
        &self.params
    }

    /// Value of the 2n-variable dual objective at the returned solution.
    pub fn dual_objective(&self) -> f64 {
        self.objective
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Maximal KKT violation at termination.
    pub fn kkt_violation(&self) -> f64 {
        self.violation
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let mut f = self.bias;
        for (i, b) in self.support_coefficients.iter().enumerate() {
            f += b * rbf(row(&self.support_vectors, i), x, self.params.gamma);
        }
        f
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.support_vectors.ncols() {
            return Err(ModelError::DimensionMismatch {
                expected: self.support_vectors.ncols(),
                actual: x.ncols(),
            });
        }
        let x = x.as_standard_layout();
        Ok((0..x.nrows()).map(|i| self.predict_one(row(&x, i))).collect())
    }
}

#[inline]
pub(crate) fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_euclidean(a, b)).exp()
}

pub fn svr_fit(x: &Array2<f64>, y: &[f64], c: f64, epsilon: f64, gamma: f64) -> Result<SvrModel> {
    svr_fit_with(x, y, SvrParams::new(c, epsilon, gamma))
}

pub fn svr_fit_with(x: &Array2<f64>, y: &[f64], params: SvrParams) -> Result<SvrModel> {
    check_training(x, y)?;
    params.validate()?;
    let x = x.as_standard_layout().into_owned();
    let n = x.nrows();
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(row(&x, i), row(&x, j), params.gamma);
            kernel[i * n + j] = v;
            kernel[j * n + i] = v;
        }
    }
    let sol = Smo::new(&kernel, n, y, &params).solve()?;

    let coefficients: Vec<f64> = (0..n).map(|i| sol.alpha[i] - sol.alpha[i + n]).collect();
    let support: Vec<usize> = (0..n).filter(|&i| coefficients[i] != 0.0).collect();
    Ok(SvrModel {
        support_vectors: take_rows(&x, &support),
        support_coefficients: support.iter().map(|&i| coefficients[i]).collect(),
        coefficients,
        bias: -sol.rho,
        params,
        objective: sol.objective,
        iterations: sol.iterations,
        violation: sol.violation,
    })
}

struct Solution {
    alpha: Vec<f64>,
    rho: f64,
    objective: f64,
    iterations: usize,
    violation: f64,
}

struct Smo<'a> {
    kernel: &'a [f64],
    n: usize,
    c: f64,
    tol: f64,
    max_iter: usize,
    p: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
}

impl<'a> Smo<'a> {
    fn new(kernel: &'a [f64], n: usize, y: &[f64], params: &SvrParams) -> Self {
        let mut p = Vec::with_capacity(2 * n);
        p.extend(y.iter().map(|v| params.epsilon - v));
        p.extend(y.iter().map(|v| params.epsilon + v));
        Self {
            kernel,
            n,
            c: params.c,
            tol: params.tol,
            max_iter: params.max_iter,
            grad: p.clone(),
            p,
            alpha: vec![0.0; 2 * n],
        }
    }

    #[inline]
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn q(&self, t: usize, u: usize) -> f64 {
        self.sign(t) * self.sign(u) * self.kernel[(t % self.n) * self.n + u % self.n]
    }

    fn in_up(&self, t: usize) -> bool {
        if t < self.n {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if t < self.n {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }

    /// Maximal violating pair and its violation `m − M`.
    fn select_pair(&self) -> Option<(usize, usize, f64)> {
        let mut up: Option<(usize, f64)> = None;
        let mut low: Option<(usize, f64)> = None;
        for t in 0..2 * self.n {
            let v = -self.sign(t) * self.grad[t];
            if self.in_up(t) && up.is_none_or(|(_, b)| v > b) {
                up = Some((t, v));
            }
            if self.in_low(t) && low.is_none_or(|(_, b)| v < b) {
                low = Some((t, v));
            }
        }
        match (up, low) {
            (Some((i, m)), Some((j, mm))) => Some((i, j, m - mm)),
            _ => None,
        }
    }

    fn solve(mut self) -> Result<Solution> {
        let mut iterations = 0;
        let violation = loop {
            let Some((i, j, gap)) = self.select_pair() else {
                break 0.0;
            };
            if gap <= self.tol {
                break gap.max(0.0);
            }
            if iterations >= self.max_iter {
                return Err(ModelError::NonConvergence {
                    iterations,
                    worst_violation: gap,
                });
            }
            self.update_pair(i, j);
            iterations += 1;
        };
        let objective = 0.5
            * self
                .alpha
                .iter()
                .zip(self.grad.iter().zip(&self.p))
                .map(|(a, (g, p))| a * (g + p))
                .sum::<f64>();
        Ok(Solution {
            rho: self.rho(),
            alpha: self.alpha,
            objective,
            iterations,
            violation,
        })
    }

    fn update_pair(&mut self, i: usize, j: usize) {
        let c = self.c;
        let qii = self.q(i, i);
        let qjj = self.q(j, j);
        let qij = self.q(i, j);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.sign(i) != self.sign(j) {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..2 * self.n {
            self.grad[t] += self.q(t, i) * di + self.q(t, j) * dj;
        }
    }

    /// Offset from free variables, or the midpoint of the feasible interval
    /// when every variable sits at a bound.
    fn rho(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum_free, mut n_free) = (0.0, 0usize);
        for t in 0..2 * self.n {
            let s = self.sign(t);
            let yg = s * self.grad[t];
            if self.alpha[t] >= self.c {
                if s < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if s > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        if n_free > 0 {
            sum_free / n_free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}
