//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// RBF Gram matrix.
pub fn gram(x: &[Vec<f64>], gamma: f64) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        (-gamma * d2).exp()
    })
}

/// ε-SVR dual objective in the 2n-variable form for `a = (α, α*)`.
pub fn svr_dual_objective(k: &DMatrix<f64>, y: &[f64], eps: f64, a: &[f64]) -> f64 {
    let n = y.len();
    let beta: Vec<f64> = (0..n).map(|i| a[i] - a[n + i]).collect();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += beta[i] * beta[j] * k[(i, j)];
        }
    }
    let lin: f64 = (0..n).map(|i| eps * (a[i] + a[n + i]) - y[i] * beta[i]).sum();
    0.5 * quad + lin
}

/// Log-barrier interior-point solve of
/// `min ½aᵀQa + pᵀa  s.t. 0 ≤ a ≤ C, sᵀa = 0`
/// for the 2n-variable ε-SVR dual. Returns the minimizer.
pub fn svr_dual_qp(k: &DMatrix<f64>, y: &[f64], eps: f64, c: f64) -> Vec<f64> {
    let n = y.len();
    let m = 2 * n;
    let s: Vec<f64> = (0..m).map(|t| if t < n { 1.0 } else { -1.0 }).collect();
    let q = DMatrix::from_fn(m, m, |a, b| s[a] * s[b] * k[(a % n, b % n)]);
    let p = DVector::from_fn(m, |t, _| if t < n { eps - y[t] } else { eps + y[t - n] });
    let mut a = DVector::from_element(m, c / 2.0);

    let barrier = |a: &DVector<f64>, mu: f64| -> f64 {
        let f = 0.5 * a.dot(&(&q * a)) + p.dot(a);
        f - mu * a.iter().map(|v| v.ln() + (c - v).ln()).sum::<f64>()
    };
    let mut mu = c;
    while mu > 1e-13 * c {
        for _ in 0..200 {
            let grad = &q * &a + &p
                - DVector::from_fn(m, |t, _| mu / a[t] - mu / (c - a[t]));
            let h = &q + DMatrix::from_diagonal(&DVector::from_fn(m, |t, _| mu / (a[t] * a[t]) + mu / ((c - a[t]) * (c - a[t]))));
            // KKT system [[H, s], [sᵀ, 0]] (da, λ) = (−g, 0)
            let mut kkt = DMatrix::zeros(m + 1, m + 1);
            kkt.view_mut((0, 0), (m, m)).copy_from(&h);
            for t in 0..m {
                kkt[(t, m)] = s[t];
                kkt[(m, t)] = s[t];
            }
            let mut rhs = DVector::zeros(m + 1);
            rhs.rows_mut(0, m).copy_from(&(-&grad));
            let sol = kkt.lu().solve(&rhs).expect("barrier KKT system is nonsingular");
            let da = sol.rows(0, m).into_owned();
            let decrement = -grad.dot(&da);
            if decrement < 1e-20 * (1.0 + c * c) {
                break;
            }
            // stay strictly inside the box, then backtrack on the barrier
            let mut step: f64 = 1.0;
            for t in 0..m {
                if da[t] < 0.0 {
                    step = step.min(-0.99 * a[t] / da[t]);
                } else if da[t] > 0.0 {
                    step = step.min(0.99 * (c - a[t]) / da[t]);
                }
            }
            let f0 = barrier(&a, mu);
            while step > 1e-16 {
                let cand = &a + &da * step;
                if barrier(&cand, mu) <= f0 - 0.25 * step * decrement {
                    a = cand;
                    break;
                }
                step *= 0.5;
            }
            if step <= 1e-16 {
                break;
            }
        }
        mu *= 0.2;
    }
    a.iter().copied().collect()
}

/// Ridge solution via the raw (uncentered, augmented) normal equations with
/// an unpenalized intercept column. Returns (weights, intercept).
pub fn ridge_closed_form(x: &[Vec<f64>], y: &[f64], r: f64) -> (Vec<f64>, f64) {
    let n = x.len();
    let d = x[0].len();
    let xa = DMatrix::from_fn(n, d + 1, |i, j| if j < d { x[i][j] } else { 1.0 });
    let mut lhs = xa.transpose() * &xa;
    for j in 0..d {
        lhs[(j, j)] += r;
    }
    let rhs = xa.transpose() * DVector::from_column_slice(y);
    let sol = lhs.lu().solve(&rhs).expect("well-conditioned instance");
    (sol.rows(0, d).iter().copied().collect(), sol[d])
}

/// Average ranks (1-based) with ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            ranks[t] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Trapezoid sum over consecutive grid points.
pub fn trapezoid(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum()
}
