//! Lloyd's k-means with k-means++ seeding.
//!
//! Clusters are never empty on return: when an assignment step leaves a
//! cluster without members, the sample farthest from its own centroid (taken
//! from a cluster that can spare it) is moved into the empty cluster as a
//! singleton.

use ndarray::{Array2, ArrayRef2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{euclidean, row, sq_euclidean};

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("cannot form {k} clusters from {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),
    #[error("invalid k-means parameter: {0}")]
    InvalidParameter(String),
    #[error("cluster {0} does not exist")]
    NoSuchCluster(usize),
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
}

pub type Result<T> = std::result::Result<T, ClusterError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    k: usize,
    assignments: Vec<usize>,
    centroids: Array2<f64>,
    inertia: f64,
    members: Vec<Vec<usize>>,
    iterations: usize,
    inertia_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Cluster id (0-based) of every point.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn cluster_of(&self, point: usize) -> usize {
        self.assignments[point]
    }

    pub fn centroids(&self) -> &Array2<f64> {
        &self.centroids
    }

    pub fn centroid(&self, cluster: usize) -> &[f64] {
        row(&self.centroids, cluster)
    }

    /// Sum of squared distances from each point to its assigned centroid.
    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    /// Ascending point indices of each cluster.
    pub fn members(&self, cluster: usize) -> &[usize] {
        &self.members[cluster]
    }

    pub fn member_lists(&self) -> &[Vec<usize>] {
        &self.members
    }

    /// Number of Lloyd iterations performed.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Inertia after every Lloyd iteration.
    pub fn inertia_trace(&self) -> &[f64] {
        &self.inertia_trace
    }

    /// Member of `cluster` closest to its centroid; ties go to the smallest index.
    pub fn nearest_to_centroid(&self, points: &Array2<f64>, cluster: usize) -> Result<usize> {
        if cluster >= self.k {
            return Err(ClusterError::NoSuchCluster(cluster));
        }
        let c = self.centroid(cluster);
        let mut best: Option<(usize, f64)> = None;
        for &i in &self.members[cluster] {
            let dist = sq_euclidean(row(points, i), c);
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some((i, dist));
            }
        }
        best.map(|(i, _)| i).ok_or(ClusterError::EmptyCluster(cluster))
    }
}

/// k-means++ seeding followed by Lloyd iterations, fully determined by `seed`.
pub fn kmeans(points: &Array2<f64>, k: usize, seed: u64, params: KMeansParams) -> Result<ClusterModel> {
    validate(points, k, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = kmeans_plus_plus(points, k, &mut rng);
    let mut centroids = Array2::zeros((k, points.ncols()));
    for (c, &i) in seeds.iter().enumerate() {
        centroids.row_mut(c).assign(&points.row(i));
    }
    lloyd(points, centroids, params)
}

/// Lloyd iterations from caller-provided initial centroids.
pub fn kmeans_from_centroids(
    points: &Array2<f64>,
    initial: Array2<f64>,
    params: KMeansParams,
) -> Result<ClusterModel> {
    let k = initial.nrows();
    validate(points, k, params)?;
    if initial.ncols() != points.ncols() {
        return Err(ClusterError::InvalidParameter(format!(
            "centroids have {} columns, points have {}",
            initial.ncols(),
            points.ncols()
        )));
    }
    lloyd(points, initial.as_standard_layout().into_owned(), params)
}

/// Indices of the greedy k-means++ seed points: each step draws
/// `2 + ⌊ln k⌋` D²-weighted candidates and keeps the one that lowers the
/// total squared distance most (ties to the earlier draw).
pub fn kmeans_plus_plus<R: Rng>(points: &Array2<f64>, k: usize, rng: &mut R) -> Vec<usize> {
    let n = points.nrows();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_euclidean(row(points, i), row(points, chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut best: Option<(usize, f64)> = None;
            for _ in 0..trials {
                let cand = d2_draw(&d2, total, rng);
                let potential: f64 = (0..n)
                    .map(|i| d2[i].min(sq_euclidean(row(points, i), row(points, cand))))
                    .sum();
                if best.is_none_or(|(_, p)| potential < p) {
                    best = Some((cand, potential));
                }
            }
            best.expect("at least two trials").0
        } else {
            // Every remaining point coincides with a chosen seed.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(sq_euclidean(row(points, i), row(points, next)));
        }
    }
    chosen
}

/// One index drawn with probability proportional to `d2`.
fn d2_draw<R: Rng>(d2: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in d2.iter().enumerate() {
        acc += w;
        if acc > target && w > 0.0 {
            return i;
        }
    }
    // Rounding can leave `target` just above the final partial sum.
    d2.iter().rposition(|&w| w > 0.0).expect("total > 0")
}

fn validate(points: &Array2<f64>, k: usize, params: KMeansParams) -> Result<()> {
    let n = points.nrows();
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    if k > n {
        return Err(ClusterError::TooManyClusters { k, n });
    }
    if params.max_iter == 0 {
        return Err(ClusterError::InvalidParameter("max_iter must be at least 1".into()));
    }
    if !(params.tol >= 0.0) {
        return Err(ClusterError::InvalidParameter("tol must be >= 0".into()));
    }
    if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
        return Err(ClusterError::NonFinite(pos / points.ncols().max(1)));
    }
    Ok(())
}

fn lloyd(points: &Array2<f64>, mut centroids: Array2<f64>, params: KMeansParams) -> Result<ClusterModel> {
    let points = points.as_standard_layout();
    let points = &*points;
    let (n, d) = points.dim();
    let k = centroids.nrows();
    let mut assignments = vec![0usize; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..params.max_iter {
        iterations += 1;
        for (i, a) in assignments.iter_mut().enumerate() {
            *a = nearest_centroid(row(points, i), &centroids);
        }
        repair_empty_clusters(points, &mut assignments, &mut centroids);

        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            counts[a] += 1;
            for (s, v) in sums.row_mut(a).iter_mut().zip(row(points, i)) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let mut r = sums.row_mut(c);
            r /= counts[c] as f64;
            let moved = euclidean(r.as_slice().expect("row of owned matrix"), row(&centroids, c));
            shift = shift.max(moved);
        }
        centroids = sums;
        trace.push(inertia_of(points, &assignments, &centroids));
        if shift <= params.tol {
            break;
        }
    }

    let mut members = vec![Vec::new(); k];
    for (i, &a) in assignments.iter().enumerate() {
        members[a].push(i);
    }
    Ok(ClusterModel {
        k,
        inertia: *trace.last().expect("at least one iteration"),
        assignments,
        centroids,
        members,
        iterations,
        inertia_trace: trace,
    })
}

fn nearest_centroid(x: &[f64], centroids: &Array2<f64>) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for c in 0..centroids.nrows() {
        let dist = sq_euclidean(x, row(centroids, c));
        if dist < best_d {
            best_d = dist;
            best = c;
        }
    }
    best
}

fn repair_empty_clusters(points: &ArrayRef2<f64>, assignments: &mut [usize], centroids: &mut Array2<f64>) {
    let k = centroids.nrows();
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let mut donor: Option<(usize, f64)> = None;
        for (i, &a) in assignments.iter().enumerate() {
            if counts[a] < 2 {
                continue;
            }
            let dist = sq_euclidean(row(points, i), row(centroids, a));
            if donor.is_none_or(|(_, b)| dist > b) {
                donor = Some((i, dist));
            }
        }
        let (i, _) = donor.expect("k <= n guarantees a cluster with two members");
        counts[assignments[i]] -= 1;
        assignments[i] = empty;
        counts[empty] = 1;
        centroids.row_mut(empty).assign(&points.row(i));
    }
}

fn inertia_of(points: &ArrayRef2<f64>, assignments: &[usize], centroids: &Array2<f64>) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_euclidean(row(points, i), row(centroids, a)))
        .sum()
}
