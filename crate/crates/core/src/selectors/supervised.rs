//! Supervised baselines. Each one labels a warm-start set picked by an
//! unsupervised selector, then queries one sample at a time until `m`
//! labels have been revealed.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_m, select_unsupervised, CandidateSet, LabelOracle, Result, SelectError, SelectorSpec};
use crate::clustering::kmeans;
use crate::geometry::{argmax_first, euclidean, mix_seed, row, take_rows};
use crate::models::{ModelSpec, TrainedModel};

/// Labeled set grown in query order.
struct Labeled<'o> {
    picks: Vec<usize>,
    y: Vec<f64>,
    taken: Vec<bool>,
    oracle: &'o mut dyn LabelOracle,
}

impl<'o> Labeled<'o> {
    fn new(n: usize, oracle: &'o mut dyn LabelOracle) -> Self {
        Self {
            picks: Vec::new(),
            y: Vec::new(),
            taken: vec![false; n],
            oracle,
        }
    }

    fn query(&mut self, i: usize) -> Result<()> {
        let y = self.oracle.label(i)?;
        self.picks.push(i);
        self.y.push(y);
        self.taken[i] = true;
        Ok(())
    }

    fn len(&self) -> usize {
        self.picks.len()
    }

    fn x(&self, points: &Array2<f64>) -> Array2<f64> {
        take_rows(points, &self.picks)
    }

    /// Highest-scoring unlabeled sample, smallest index on ties.
    fn best_unlabeled(&self, scores: &[f64]) -> usize {
        argmax_first(
            scores
                .iter()
                .enumerate()
                .filter(|&(i, _)| !self.taken[i])
                .map(|(i, &s)| (i, s)),
        )
        // NaN scores only arise from a degenerate model; fall back to the first free index
        .unwrap_or_else(|| self.taken.iter().position(|t| !t).expect("m <= n"))
    }

    fn finish(self, n: usize) -> Result<CandidateSet> {
        CandidateSet::new(self.picks, n)
    }
}

/// Labels the warm-start picks. With `m` below the warm-start size the
/// first `m` of them are used.
fn warm_start<'o>(
    spec: &SelectorSpec,
    points: &Array2<f64>,
    m: usize,
    oracle: &'o mut dyn LabelOracle,
) -> Result<Labeled<'o>> {
    spec.validate()?;
    let n = points.nrows();
    check_m(m, n)?;
    let n_init = spec.n_init().min(n);
    let init = select_unsupervised(spec.init_kind(), spec, points, n_init)?;
    let mut labeled = Labeled::new(n, oracle);
    for &i in &init.indices()[..m.min(n_init)] {
        labeled.query(i)?;
    }
    Ok(labeled)
}

/// Bootstrap stream kept apart from the warm-start seed.
fn bootstrap_rng(spec: &SelectorSpec) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    rng
}

/// Fits `k` models on bootstrap resamples of the labeled set.
fn committee(
    model: &ModelSpec,
    x: &Array2<f64>,
    y: &[f64],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TrainedModel>> {
    let n = y.len();
    (0..k)
        .map(|_| {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let yb: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            Ok(model.fit(&take_rows(x, &idx), &yb)?)
        })
        .collect()
}

/// Ridge spec used by the linear-only selectors.
fn linear_model(spec: &SelectorSpec) -> ModelSpec {
    if spec.model.is_ridge() {
        spec.model.clone()
    } else {
        ModelSpec::ridge()
    }
}

fn predictions(models: &[TrainedModel], points: &Array2<f64>) -> Result<Vec<Vec<f64>>> {
    models.iter().map(|m| Ok(m.predict(points)?)).collect()
}

/// Population variance of the committee's predictions at every row of `points`.
pub fn qbc_variances(committee: &[TrainedModel], points: &Array2<f64>) -> Result<Vec<f64>> {
    let preds = predictions(committee, points)?;
    let k = committee.len() as f64;
    Ok((0..points.nrows())
        .map(|i| {
            let mean = preds.iter().map(|p| p[i]).sum::<f64>() / k;
            preds.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / k
        })
        .collect())
}

/// Expected model change: `(1/K) Σ_k |f_k(x) − f(x)| · ‖[x, 1]‖`, the mean
/// norm of the squared-loss gradient a label drawn from member `k` would
/// induce on the main model's parameters.
pub fn emcm_scores(main: &TrainedModel, committee: &[TrainedModel], points: &Array2<f64>) -> Result<Vec<f64>> {
    let base = main.predict(points)?;
    let preds = predictions(committee, points)?;
    let k = committee.len() as f64;
    Ok((0..points.nrows())
        .map(|i| {
            let norm = (row(points, i).iter().map(|v| v * v).sum::<f64>() + 1.0).sqrt();
            preds.iter().map(|p| (p[i] - base[i]).abs()).sum::<f64>() / k * norm
        })
        .collect())
}

/// Improved greedy sampling: `min_i ‖x − x_i‖ · |ŷ(x) − y_i|` over the
/// labeled set `(labeled_x, labeled_y)`.
pub fn igs_scores(
    model: &TrainedModel,
    labeled_x: &Array2<f64>,
    labeled_y: &[f64],
    points: &Array2<f64>,
) -> Result<Vec<f64>> {
    let yhat = model.predict(points)?;
    Ok((0..points.nrows())
        .map(|n| {
            let x = row(points, n);
            labeled_y
                .iter()
                .enumerate()
                .map(|(i, &yi)| euclidean(x, row(labeled_x, i)) * (yhat[n] - yi).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// Query-by-committee with bootstrap committees of `spec.model`.
pub fn select_qbc(
    spec: &SelectorSpec,
    points: &Array2<f64>,
    m: usize,
    oracle: &mut dyn LabelOracle,
) -> Result<CandidateSet> {
    let mut labeled = warm_start(spec, points, m, oracle)?;
    let mut rng = bootstrap_rng(spec);
    while labeled.len() < m {
        let members = committee(&spec.model, &labeled.x(points), &labeled.y, spec.committee_size, &mut rng)?;
        let scores = qbc_variances(&members, points)?;
        let next = labeled.best_unlabeled(&scores);
        labeled.query(next)?;
    }
    labeled.finish(points.nrows())
}

/// Expected model change maximization with a ridge main model.
pub fn select_emcm(
    spec: &SelectorSpec,
    points: &Array2<f64>,
    m: usize,
    oracle: &mut dyn LabelOracle,
) -> Result<CandidateSet> {
    let mut labeled = warm_start(spec, points, m, oracle)?;
    let mut rng = bootstrap_rng(spec);
    let model = linear_model(spec);
    while labeled.len() < m {
        let scores = emcm_step(&model, spec.committee_size, points, &labeled, &mut rng)?;
        let next = labeled.best_unlabeled(&scores);
        labeled.query(next)?;
    }
    labeled.finish(points.nrows())
}

fn emcm_step(
    model: &ModelSpec,
    k: usize,
    points: &Array2<f64>,
    labeled: &Labeled<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let x = labeled.x(points);
    let main = model.fit(&x, &labeled.y)?;
    let members = committee(model, &x, &labeled.y, k, rng)?;
    emcm_scores(&main, &members, points)
}

/// EMCM restricted to the largest k-means cluster (k = L + 1) that holds no
/// labeled sample; plain EMCM when every cluster is already covered.
pub fn select_rd_emcm(
    spec: &SelectorSpec,
    points: &Array2<f64>,
    m: usize,
    oracle: &mut dyn LabelOracle,
) -> Result<CandidateSet> {
    let mut labeled = warm_start(spec, points, m, oracle)?;
    let mut rng = bootstrap_rng(spec);
    let model = linear_model(spec);
    while labeled.len() < m {
        let l = labeled.len();
        let clusters = kmeans(points, l + 1, mix_seed(spec.seed, l as u64), spec.kmeans)?;
        let mut covered = vec![false; clusters.k()];
        for &i in &labeled.picks {
            covered[clusters.cluster_of(i)] = true;
        }
        let target = argmax_first(
            (0..clusters.k())
                .filter(|&c| !covered[c])
                .map(|c| (c, clusters.members(c).len() as f64)),
        );
        let mut scores = emcm_step(&model, spec.committee_size, points, &labeled, &mut rng)?;
        if let Some(c) = target {
            for (i, s) in scores.iter_mut().enumerate() {
                if clusters.cluster_of(i) != c {
                    *s = f64::NEG_INFINITY;
                }
            }
        }
        let next = labeled.best_unlabeled(&scores);
        labeled.query(next)?;
    }
    labeled.finish(points.nrows())
}

/// Improved greedy sampling with a ridge model standing in for unknown labels.
pub fn select_igs(
    spec: &SelectorSpec,
    points: &Array2<f64>,
    m: usize,
    oracle: &mut dyn LabelOracle,
) -> Result<CandidateSet> {
    let mut labeled = warm_start(spec, points, m, oracle)?;
    let model = linear_model(spec);
    while labeled.len() < m {
        let x = labeled.x(points);
        let fitted = model.fit(&x, &labeled.y)?;
        let scores = igs_scores(&fitted, &x, &labeled.y, points)?;
        let next = labeled.best_unlabeled(&scores);
        labeled.query(next)?;
    }
    labeled.finish(points.nrows())
}

/// Picks the sample whose absolute error a second model, trained on the
/// main model's absolute training residuals, predicts to be largest.
pub fn select_rsal(
    spec: &SelectorSpec,
    points: &Array2<f64>,
    m: usize,
    oracle: &mut dyn LabelOracle,
) -> Result<CandidateSet> {
    if spec.model.is_ridge() {
        return Err(SelectError::InvalidSpec("rsal requires an svr model".into()));
    }
    let mut labeled = warm_start(spec, points, m, oracle)?;
    while labeled.len() < m {
        let x = labeled.x(points);
        let main = spec.model.fit(&x, &labeled.y)?;
        let fitted = main.predict(&x)?;
        let residuals: Vec<f64> = labeled.y.iter().zip(&fitted).map(|(y, f)| (y - f).abs()).collect();
        let scores = spec.model.fit(&x, &residuals)?.predict(points)?;
        let next = labeled.best_unlabeled(&scores);
        labeled.query(next)?;
    }
    labeled.finish(points.nrows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::RidgeModel;
    use crate::selectors::{select_gsx, select_rd, select_rs, PoolOracle, SelectorKind};

    fn pool(n: usize) -> (Array2<f64>, Vec<f64>) {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| ((i * 5 + j * 3) % 13) as f64 * 0.3 + 0.05 * i as f64);
        let y = (0..n).map(|i| x[[i, 0]] * 1.5 - x[[i, 1]] + (i % 3) as f64 * 0.2).collect();
        (x, y)
    }

    fn ridge(w: f64, b: f64) -> TrainedModel {
        TrainedModel::Ridge(RidgeModel::new(vec![w], b, 0.1))
    }

    #[test]
    fn warm_start_boundaries() {
        let (x, y) = pool(25);
        let mut o = PoolOracle::new(&y);
        let spec = SelectorSpec::new(SelectorKind::Qbc, 4);
        assert_eq!(select_qbc(&spec, &x, 5, &mut o).unwrap(), select_rs(&x, 5, 4).unwrap());
        let mut o = PoolOracle::new(&y);
        let spec = SelectorSpec::new(SelectorKind::Emcm, 4);
        assert_eq!(select_emcm(&spec, &x, 3, &mut o).unwrap(), select_rs(&x, 3, 4).unwrap());
        let mut o = PoolOracle::new(&y);
        let spec = SelectorSpec::new(SelectorKind::RdEmcm, 4);
        let out = select_rd_emcm(&spec, &x, 5, &mut o).unwrap();
        assert_eq!(out, select_rd(&x, 5, 4, spec.kmeans).unwrap());

        let mut o = PoolOracle::new(&y);
        let spec = SelectorSpec::new(SelectorKind::Igs, 4);
        let out = select_igs(&spec, &x, 1, &mut o).unwrap();
        assert_eq!(out, select_gsx(&x, 1).unwrap());
        assert_eq!(o.queries(), 1);

        let mut o = PoolOracle::new(&y);
        let spec = SelectorSpec::new(SelectorKind::Rsal, 4).with_model(ModelSpec::svr());
        assert_eq!(select_rsal(&spec, &x, 5, &mut o).unwrap(), select_rs(&x, 5, 4).unwrap());
    }

    #[test]
    fn runs_nest() {
        let (x, y) = pool(30);
        for kind in [SelectorKind::Qbc, SelectorKind::Emcm, SelectorKind::RdEmcm, SelectorKind::Igs] {
            let spec = SelectorSpec::new(kind, 9);
            let run = |m| {
                let mut o = PoolOracle::new(&y);
                crate::selectors::select_detailed(
                    &spec,
                    &crate::Dataset::from_features("p", x.clone(), None).unwrap(),
                    m,
                    Some(&mut o),
                )
                .unwrap()
                .candidates
            };
            let long = run(12);
            assert_eq!(run(8), long.prefix(8), "{kind}");
        }
    }

    #[test]
    fn identical_committee_has_zero_variance() {
        let c = vec![ridge(1.0, 0.0); 4];
        let x = Array2::from_shape_vec((3, 1), vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(qbc_variances(&c, &x).unwrap(), vec![0.0; 3]);
        assert_eq!(emcm_scores(&ridge(1.0, 0.0), &c, &x).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn emcm_at_origin_is_mean_disagreement() {
        let c = vec![ridge(1.0, 1.0), ridge(2.0, -1.0), ridge(0.0, 0.5), ridge(1.0, 3.0)];
        let main = ridge(1.0, 0.0);
        let x = Array2::from_shape_vec((2, 1), vec![0.0, 2.0]).unwrap();
        let s = emcm_scores(&main, &c, &x).unwrap();
        assert!((s[0] - (1.0 + 1.0 + 0.5 + 3.0) / 4.0).abs() < 1e-12);
        // at x = 2: f = 2; members give 3, 3, 0.5, 5
        let expected = (1.0 + 1.0 + 1.5 + 3.0) / 4.0 * 5f64.sqrt();
        assert!((s[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn igs_score_matches_formula() {
        let lx = Array2::from_shape_vec((2, 1), vec![0.0, 4.0]).unwrap();
        let ly = [0.0, 8.0];
        let model = ridge(2.0, 0.0);
        let x = Array2::from_shape_vec((3, 1), vec![1.0, 4.0, 3.0]).unwrap();
        let s = igs_scores(&model, &lx, &ly, &x).unwrap();
        // x=1: min(1·2, 3·6) = 2; x=4 coincides with a labeled point
        // x=3: min(3·6, 1·2) = 2
        assert_eq!(s, vec![2.0, 0.0, 2.0]);
    }

    #[test]
    fn rd_emcm_fills_uncovered_blob() {
        // two tight blobs; warm start entirely inside the first
        let mut v = Vec::new();
        for i in 0..10 {
            v.push(i as f64 * 0.01);
        }
        for i in 0..6 {
            v.push(50.0 + i as f64 * 0.01);
        }
        let x = Array2::from_shape_vec((16, 1), v).unwrap();
        let y: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let mut spec = SelectorSpec::new(SelectorKind::RdEmcm, 3).with_init(SelectorKind::Rs);
        spec.n_init = Some(1);
        let mut o = PoolOracle::new(&y);
        let first = select_rs(&x, 1, 3).unwrap().indices()[0];
        let picks = select_rd_emcm(&spec, &x, 2, &mut o).unwrap();
        let blob = |i: usize| i >= 10;
        assert_ne!(blob(picks.indices()[1]), blob(first));
    }

    #[test]
    fn rsal_rejects_ridge() {
        let (x, y) = pool(10);
        let mut o = PoolOracle::new(&y);
        assert!(select_rsal(&SelectorSpec::new(SelectorKind::Rsal, 0), &x, 6, &mut o).is_err());
    }
}
