//! Dunn's rank-based multiple comparison with Benjamini–Hochberg adjustment.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least two groups, got {0}")]
    TooFewGroups(usize),
    #[error("group '{0}' is empty")]
    EmptyGroup(String),
    #[error("group '{group}' has {len} values, expected {expected}")]
    UnequalGroups { group: String, len: usize, expected: usize },
    #[error("reference group '{0}' not present")]
    MissingReference(String),
    #[error("all values are identical; the rank statistic is undefined")]
    AllTied,
    #[error("non-finite value in group '{0}'")]
    NonFinite(String),
}

/// Reference-vs-other comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DunnComparison {
    pub other: String,
    /// Positive when the reference ranks higher than `other`.
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    /// `p_adjusted < α/2`.
    pub reject: bool,
}

/// Mean ranks of the pooled sample, ties sharing the average rank, plus the
/// tie-correction term `Σ (t³ − t)`.
fn pooled_ranks(groups: &[(String, Vec<f64>)]) -> (Vec<f64>, f64, usize) {
    let mut all: Vec<(f64, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, (_, v))| v.iter().map(move |&x| (x, g)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = all.len();
    let mut rank_sum = vec![0.0; groups.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &(_, g) in &all[i..=j] {
            rank_sum[g] += rank;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    let mean_ranks = rank_sum
        .iter()
        .zip(groups)
        .map(|(s, (_, v))| s / v.len() as f64)
        .collect();
    (mean_ranks, ties, n)
}

/// Dunn's z-statistics of `reference` against every other group, with
/// two-sided normal p-values adjusted by Benjamini–Hochberg over the
/// comparisons made. The groups must have equal sizes (one value per dataset).
pub fn dunn_fdr(groups: &[(String, Vec<f64>)], reference: &str, alpha: f64) -> Result<Vec<DunnComparison>, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    let expected = groups[0].1.len();
    for (name, v) in groups {
        if v.is_empty() {
            return Err(StatsError::EmptyGroup(name.clone()));
        }
        if v.len() != expected {
            return Err(StatsError::UnequalGroups {
                group: name.clone(),
                len: v.len(),
                expected,
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(StatsError::NonFinite(name.clone()));
        }
    }
    let r = groups
        .iter()
        .position(|(name, _)| name == reference)
        .ok_or_else(|| StatsError::MissingReference(reference.to_owned()))?;

    let (mean_ranks, ties, n) = pooled_ranks(groups);
    let nf = n as f64;
    let base = nf * (nf + 1.0) / 12.0 - ties / (12.0 * (nf - 1.0));
    if base <= 0.0 {
        return Err(StatsError::AllTied);
    }
    let normal = Normal::standard();
    let mut out: Vec<DunnComparison> = groups
        .iter()
        .enumerate()
        .filter(|&(g, _)| g != r)
        .map(|(g, (name, v))| {
            let se = (base * (1.0 / groups[r].1.len() as f64 + 1.0 / v.len() as f64)).sqrt();
            let z = (mean_ranks[r] - mean_ranks[g]) / se;
            let p = (2.0 * normal.sf(z.abs())).min(1.0);
            DunnComparison {
                other: name.clone(),
                z,
                p_raw: p,
                p_adjusted: p,
                reject: false,
            }
        })
        .collect();
    let raw: Vec<f64> = out.iter().map(|c| c.p_raw).collect();
    for (c, adj) in out.iter_mut().zip(benjamini_hochberg(&raw)) {
        c.p_adjusted = adj;
        c.reject = adj < alpha / 2.0;
    }
    Ok(out)
}

/// Step-up FDR adjustment: `p̃_(i) = min_{k ≥ i} (m/k)·p_(k)`, capped at 1,
/// returned in input order.
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = f64::INFINITY;
    for (rank, &i) in order.iter().enumerate().rev() {
        // m/k ≥ 1 taken first, so no adjusted value rounds below its raw one
        running = running.min(p[i] * (m as f64 / (rank + 1) as f64));
        adjusted[i] = running.min(1.0);
    }
    adjusted
}
