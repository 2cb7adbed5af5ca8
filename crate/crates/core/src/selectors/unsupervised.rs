use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_m, CandidateSet, IterationHistory, Result, SelectError};
use crate::clustering::{kmeans, ClusterModel, KMeansParams};
use crate::geometry::{argmax_first, column_means, euclidean, row, sq_euclidean};

/// First `m` entries of a seeded uniform permutation of the pool.
pub fn select_rs(points: &Array2<f64>, m: usize, seed: u64) -> Result<CandidateSet> {
    let n = points.nrows();
    check_m(m, n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.truncate(m);
    CandidateSet::new(order, n)
}

/// Greedy input-space sampling: start from the sample nearest the pool
/// centroid, then repeatedly add the sample farthest (in min-distance) from
/// everything selected so far.
pub fn select_gsx(points: &Array2<f64>, m: usize) -> Result<CandidateSet> {
    let n = points.nrows();
    check_m(m, n)?;
    let centroid = column_means(points);
    let first = argmax_first((0..n).map(|i| (i, -sq_euclidean(row(points, i), &centroid))))
        .expect("pool is not empty");
    let mut picks = vec![first];
    let mut selected = vec![false; n];
    selected[first] = true;
    let mut min_dist: Vec<f64> = (0..n).map(|i| euclidean(row(points, i), row(points, first))).collect();
    while picks.len() < m {
        let next = argmax_first((0..n).filter(|&i| !selected[i]).map(|i| (i, min_dist[i])))
            .expect("m <= n leaves an unselected sample");
        selected[next] = true;
        picks.push(next);
        for (i, d) in min_dist.iter_mut().enumerate() {
            *d = d.min(euclidean(row(points, i), row(points, next)));
        }
    }
    CandidateSet::new(picks, n)
}

/// k-means with `k = m`, then the centroid-nearest member of every cluster,
/// ordered by cluster id.
pub fn select_rd(points: &Array2<f64>, m: usize, seed: u64, params: KMeansParams) -> Result<CandidateSet> {
    check_m(m, points.nrows())?;
    let model = kmeans(points, m, seed, params)?;
    rd_from_model(points, &model)
}

pub fn rd_from_model(points: &Array2<f64>, model: &ClusterModel) -> Result<CandidateSet> {
    let picks = (0..model.k())
        .map(|c| model.nearest_to_centroid(points, c))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    CandidateSet::new(picks, points.nrows())
}

/// Average distance from sample `n` to the other members of its cluster:
/// `R(x_n) = Σ_{i ∈ C} ‖x_n − x_i‖ / (|C| − 1)`, and 0 for a singleton.
pub fn representativeness(points: &Array2<f64>, members: &[usize], n: usize) -> Result<f64> {
    if !members.contains(&n) {
        return Err(SelectError::NotInCluster { sample: n });
    }
    if members.len() == 1 {
        return Ok(0.0);
    }
    let x = row(points, n);
    let total: f64 = members.iter().map(|&i| euclidean(x, row(points, i))).sum();
    Ok(total / (members.len() - 1) as f64)
}

/// Representativeness of every pool sample within its own cluster.
pub fn cluster_representativeness(points: &Array2<f64>, model: &ClusterModel) -> Vec<f64> {
    let mut r = vec![0.0; points.nrows()];
    for members in model.member_lists() {
        if members.len() < 2 {
            continue;
        }
        let denom = (members.len() - 1) as f64;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let dist = euclidean(row(points, i), row(points, j));
                r[i] += dist;
                r[j] += dist;
            }
        }
        for &i in members {
            r[i] /= denom;
        }
    }
    r
}

/// Distance from sample `n` to the nearest of the fixed candidates;
/// `+∞` when there are none.
pub fn diversity(points: &Array2<f64>, fixed: &[usize], n: usize) -> f64 {
    let x = row(points, n);
    fixed
        .iter()
        .map(|&i| euclidean(x, row(points, i)))
        .fold(f64::INFINITY, f64::min)
}

/// `D − R` for sample `n`. With no fixed candidates (M = 1) diversity is
/// constant and the objective reduces to `−R`.
pub fn irdm_objective(points: &Array2<f64>, fixed: &[usize], n: usize, r_n: f64) -> f64 {
    if fixed.is_empty() {
        -r_n
    } else {
        diversity(points, fixed, n) - r_n
    }
}

/// Best replacement for candidate `position` within its cluster, holding the
/// other candidates fixed. Ties go to the smallest pool index.
///
/// Candidate `position` is assumed to belong to cluster `position`, as the
/// RD initialization guarantees.
pub fn irdm_update_one(
    points: &Array2<f64>,
    model: &ClusterModel,
    candidates: &[usize],
    position: usize,
    cached_r: &[f64],
) -> Result<usize> {
    let m = candidates.len();
    if position >= m || position >= model.k() {
        return Err(SelectError::InvalidPosition { position, m });
    }
    let fixed: Vec<usize> = candidates
        .iter()
        .enumerate()
        .filter(|&(p, _)| p != position)
        .map(|(_, &i)| i)
        .collect();
    let members = model.members(position);
    argmax_first(
        members
            .iter()
            .map(|&n| (n, irdm_objective(points, &fixed, n, cached_r[n]))),
    )
    .ok_or(SelectError::Cluster(crate::clustering::ClusterError::EmptyCluster(position)))
}

/// One replacement made during an iRDM sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionUpdate {
    /// 1-based sweep number.
    pub sweep: usize,
    pub position: usize,
    pub previous: usize,
    pub chosen: usize,
    /// Objectives of the incumbent and the replacement against the same fixed set.
    pub previous_objective: f64,
    pub chosen_objective: f64,
}

#[derive(Debug, Clone)]
pub struct IrdmOutcome {
    /// Position `m` holds the pick from cluster `m`.
    pub candidates: CandidateSet,
    pub history: IterationHistory,
    /// Sweeps executed, including one that ended on a repeated state.
    pub sweeps: usize,
    /// True when iteration stopped because a state repeated.
    pub converged: bool,
    pub updates: Vec<PositionUpdate>,
}

/// Iterative representativeness-diversity maximization.
pub fn select_irdm(
    points: &Array2<f64>,
    m: usize,
    c_max: usize,
    seed: u64,
    params: KMeansParams,
) -> Result<IrdmOutcome> {
    check_m(m, points.nrows())?;
    let model = kmeans(points, m, seed, params)?;
    irdm_from_model(points, &model, c_max)
}

/// iRDM from an existing clustering; clusters stay fixed for the whole run.
pub fn irdm_from_model(points: &Array2<f64>, model: &ClusterModel, c_max: usize) -> Result<IrdmOutcome> {
    let mut candidates = rd_from_model(points, model)?.into_inner();
    let m = candidates.len();
    let cached_r = cluster_representativeness(points, model);

    let mut history = IterationHistory::default();
    history.push(sorted(&candidates));
    let mut updates = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < c_max {
        sweeps += 1;
        for position in 0..m {
            let chosen = irdm_update_one(points, model, &candidates, position, &cached_r)?;
            let previous = candidates[position];
            let fixed: Vec<usize> = candidates
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != position)
                .map(|(_, &i)| i)
                .collect();
            updates.push(PositionUpdate {
                sweep: sweeps,
                position,
                previous,
                chosen,
                previous_objective: irdm_objective(points, &fixed, previous, cached_r[previous]),
                chosen_objective: irdm_objective(points, &fixed, chosen, cached_r[chosen]),
            });
            candidates[position] = chosen;
        }
        let state = sorted(&candidates);
        if history.contains(&state) {
            converged = true;
            break;
        }
        history.push(state);
    }
    Ok(IrdmOutcome {
        candidates: CandidateSet::new(candidates, points.nrows())?,
        history,
        sweeps,
        converged,
        updates,
    })
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn rs_determinism_and_saturation() {
        let x = line(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(select_rs(&x, 3, 8).unwrap(), select_rs(&x, 3, 8).unwrap());
        assert_eq!(select_rs(&x, 5, 8).unwrap().sorted(), vec![0, 1, 2, 3, 4]);
        assert_eq!(select_rs(&x, 2, 8).unwrap().indices(), &select_rs(&x, 4, 8).unwrap().indices()[..2]);
        assert!(select_rs(&x, 6, 0).is_err());
    }

    #[test]
    fn gsx_small_pool() {
        let x = line(&[0.0, 1.0, 9.0, 10.0]);
        assert_eq!(select_gsx(&x, 1).unwrap().indices(), &[1]);
        assert_eq!(select_gsx(&x, 2).unwrap().indices(), &[1, 3]);
    }

    #[test]
    fn rd_trivial_cases() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [5.0, 5.0], [9.0, 1.0]];
        assert_eq!(select_rd(&x, 4, 2, KMeansParams::default()).unwrap().sorted(), vec![0, 1, 2, 3]);
        let one = select_rd(&x, 1, 2, KMeansParams::default()).unwrap();
        let gsx_first = select_gsx(&x, 1).unwrap();
        assert_eq!(one, gsx_first);
    }

    #[test]
    fn representativeness_cases() {
        let x = line(&[0.0, 4.0, 3.0, 6.0]);
        assert_eq!(representativeness(&x, &[0, 1], 0).unwrap(), 4.0);
        assert_eq!(representativeness(&x, &[0, 1], 1).unwrap(), 4.0);
        assert_eq!(representativeness(&x, &[1], 1).unwrap(), 0.0);
        // cluster {0, 3, 6}, sample at 3
        assert_eq!(representativeness(&x, &[0, 2, 3], 2).unwrap(), 3.0);
        assert!(matches!(
            representativeness(&x, &[0, 1], 3),
            Err(SelectError::NotInCluster { sample: 3 })
        ));
    }

    #[test]
    fn diversity_cases() {
        let x = line(&[0.0, 7.0, 2.0, 5.0, 9.0]);
        assert_eq!(diversity(&x, &[1], 0), 7.0);
        assert_eq!(diversity(&x, &[2, 3, 4], 0), 2.0);
        let dup = line(&[3.0, 3.0]);
        assert_eq!(diversity(&dup, &[1], 0), 0.0);
        assert_eq!(diversity(&x, &[], 0), f64::INFINITY);
    }

    #[test]
    fn zero_sweeps_is_rd() {
        let x = array![[0.0, 0.1], [0.3, 2.0], [4.0, 4.0], [5.0, 3.5], [9.0, 0.0], [8.5, 1.0], [2.0, 7.0]];
        for seed in 0..5 {
            let rd = select_rd(&x, 3, seed, KMeansParams::default()).unwrap();
            let out = select_irdm(&x, 3, 0, seed, KMeansParams::default()).unwrap();
            assert_eq!(out.candidates, rd);
            assert_eq!(out.sweeps, 0);
            assert_eq!(out.history.rows().len(), 1);
        }
    }

    #[test]
    fn single_candidate_picks_most_representative() {
        let x = line(&[0.0, 1.0, 2.0, 7.0]);
        let out = select_irdm(&x, 1, 5, 0, KMeansParams::default()).unwrap();
        let r: Vec<f64> = (0..4).map(|i| representativeness(&x, &[0, 1, 2, 3], i).unwrap()).collect();
        let best = argmax_first(r.iter().enumerate().map(|(i, v)| (i, -v))).unwrap();
        assert_eq!(out.candidates.indices(), &[best]);
        assert!(out.converged);
    }

    #[test]
    fn position_out_of_range() {
        let x = line(&[0.0, 1.0, 5.0]);
        let model = kmeans(&x, 2, 0, KMeansParams::default()).unwrap();
        let r = cluster_representativeness(&x, &model);
        let cand = rd_from_model(&x, &model).unwrap();
        assert!(matches!(
            irdm_update_one(&x, &model, cand.indices(), 2, &r),
            Err(SelectError::InvalidPosition { position: 2, m: 2 })
        ));
    }

    #[test]
    fn cached_r_matches_direct() {
        let x = array![[0.0, 0.0], [1.0, 0.5], [0.2, 1.4], [6.0, 6.0], [7.0, 6.5], [9.0, 9.0]];
        let model = kmeans(&x, 2, 1, KMeansParams::default()).unwrap();
        let r = cluster_representativeness(&x, &model);
        for c in 0..2 {
            for &i in model.members(c) {
                let direct = representativeness(&x, model.members(c), i).unwrap();
                assert!((direct - r[i]).abs() < 1e-12);
            }
        }
    }
}
