use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use super::config::{ExperimentConfig, SelectorConfig};
use super::{BenchError, Result};
use crate::dataset::{split_pool_test, Dataset, SplitSpec};
use crate::geometry::{mix_seed, take_rows};
use crate::models::{evaluate, ModelSpec};
use crate::selectors::{select, CandidateSet, PoolOracle};

/// Seed of run `run`; every selector of that run sees the same split.
pub fn run_seed(base_seed: u64, run: usize) -> u64 {
    mix_seed(base_seed, run as u64)
}

fn split_seed(run_seed: u64) -> u64 {
    mix_seed(run_seed, 0)
}

fn selector_seed(run_seed: u64) -> u64 {
    mix_seed(run_seed, 1)
}

/// RMSE and CC of one run at every M of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub rmse: Vec<f64>,
    pub cc: Vec<Option<f64>>,
}

/// Aggregate of one curve at one M.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub m: usize,
    pub runs: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub cc_mean: f64,
    pub cc_std: f64,
    /// Runs whose CC was undefined and left out of the CC statistics.
    pub cc_undefined: usize,
}

/// Learning curve of one (dataset, selector, model) triple, raw per run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationCurve {
    pub dataset: String,
    pub selector: String,
    pub model: String,
    pub m_values: Vec<usize>,
    pub records: Vec<RunRecord>,
}

impl EvaluationCurve {
    /// Mean and population std across runs at every M; NaN where no run
    /// produced a value.
    pub fn points(&self) -> Vec<CurvePoint> {
        self.m_values
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let rmse: Vec<f64> = self.records.iter().map(|r| r.rmse[k]).collect();
                let cc: Vec<f64> = self.records.iter().filter_map(|r| r.cc[k]).collect();
                let (rmse_mean, rmse_std) = mean_std(&rmse);
                let (cc_mean, cc_std) = mean_std(&cc);
                CurvePoint {
                    m,
                    runs: rmse.len(),
                    rmse_mean,
                    rmse_std,
                    cc_mean,
                    cc_std,
                    cc_undefined: rmse.len() - cc.len(),
                }
            })
            .collect()
    }
}

pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// A (dataset, run, selector, model) cell that produced no values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub dataset: String,
    /// `None` when the dataset itself failed to load.
    pub run: Option<usize>,
    pub selector: Option<String>,
    pub model: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub curves: Vec<EvaluationCurve>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions<'a> {
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// Directory relative CSV paths are resolved against.
    pub base_dir: Option<&'a Path>,
}

struct Cell {
    dataset: usize,
    run: usize,
}

/// Values for every (selector, model) pair of one cell, in config order.
type CellOutput = Vec<std::result::Result<RunRecord, String>>;

/// Runs the full protocol: for every dataset and run, split, select at every
/// M, fit every compatible model on the selected samples and score it on the
/// test half.
///
/// Cells run in parallel; their outputs are assembled in (dataset, run)
/// order, so the result does not depend on the thread count.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions<'_>) -> Result<ExperimentResult> {
    config.validate()?;
    let mut failures = Vec::new();
    let mut loaded: Vec<Option<Dataset>> = Vec::with_capacity(config.datasets.len());
    for source in &config.datasets {
        match load_checked(config, source, options.base_dir) {
            Ok(d) => loaded.push(Some(d)),
            Err(e) => {
                failures.push(Failure {
                    dataset: source.name().to_owned(),
                    run: None,
                    selector: None,
                    model: None,
                    message: e.to_string(),
                });
                loaded.push(None);
            }
        }
    }

    let pairs = evaluation_pairs(config);
    let cells: Vec<Cell> = loaded
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_some())
        .flat_map(|(dataset, _)| (0..config.runs).map(move |run| Cell { dataset, run }))
        .collect();

    let work = || -> Vec<CellOutput> {
        cells
            .par_iter()
            .map(|cell| {
                let data = loaded[cell.dataset].as_ref().expect("filtered above");
                run_cell(config, data, cell.run, &pairs)
            })
            .collect()
    };
    let outputs = match options.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| BenchError::Config(format!("cannot start {jobs} workers: {e}")))?
            .install(work),
        None => work(),
    };

    let m_values: Vec<usize> = config.m_values().collect();
    let mut curves = Vec::new();
    let mut outputs = outputs.into_iter();
    for (di, data) in loaded.iter().enumerate() {
        if data.is_none() {
            continue;
        }
        let name = config.datasets[di].name().to_owned();
        let mut dataset_curves: Vec<EvaluationCurve> = pairs
            .iter()
            .map(|&(s, model)| EvaluationCurve {
                dataset: name.clone(),
                selector: config.selectors[s].label(),
                model: model.label(),
                m_values: m_values.clone(),
                records: Vec::new(),
            })
            .collect();
        for run in 0..config.runs {
            let cell = outputs.next().expect("one output per cell");
            for (curve, value) in dataset_curves.iter_mut().zip(cell) {
                match value {
                    Ok(record) => curve.records.push(record),
                    Err(message) => failures.push(Failure {
                        dataset: name.clone(),
                        run: Some(run),
                        selector: Some(curve.selector.clone()),
                        model: Some(curve.model.clone()),
                        message,
                    }),
                }
            }
        }
        curves.extend(dataset_curves);
    }
    Ok(ExperimentResult { curves, failures })
}

fn load_checked(
    config: &ExperimentConfig,
    source: &super::config::DatasetSource,
    base_dir: Option<&Path>,
) -> Result<Dataset> {
    let data = source.load(base_dir)?;
    if data.labels().is_none() {
        return Err(BenchError::Config(format!("dataset '{}' has no labels", source.name())));
    }
    let pool = (config.pool_fraction * data.n_samples() as f64).ceil() as usize;
    if pool < config.m_range[1] {
        return Err(BenchError::DatasetTooSmall {
            dataset: source.name().to_owned(),
            pool,
            m: config.m_range[1],
        });
    }
    Ok(data)
}

/// (selector index, model) pairs in report order.
pub(crate) fn evaluation_pairs(config: &ExperimentConfig) -> Vec<(usize, ModelSpec)> {
    config
        .selectors
        .iter()
        .enumerate()
        .flat_map(|(s, sel)| {
            config
                .models
                .iter()
                .filter(|m| sel.evaluates_with(m))
                .map(move |&m| (s, m))
        })
        .collect()
}

fn run_cell(config: &ExperimentConfig, data: &Dataset, run: usize, pairs: &[(usize, ModelSpec)]) -> CellOutput {
    let seed = run_seed(config.base_seed, run);
    let split = match split_pool_test(data, SplitSpec::new(config.pool_fraction, split_seed(seed))) {
        Ok(s) => s,
        Err(e) => return pairs.iter().map(|_| Err(e.to_string())).collect(),
    };
    let ctx = CellContext {
        pool: &split.pool,
        pool_y: split.pool.labels().expect("checked at load"),
        test_x: split.test.features(),
        test_y: split.test.labels().expect("checked at load"),
        m_values: config.m_values().collect(),
        seed: selector_seed(seed),
        run,
    };

    // Unsupervised selections do not depend on the model; make them once.
    let mut unsupervised: Vec<Option<std::result::Result<Vec<CandidateSet>, String>>> =
        vec![None; config.selectors.len()];
    pairs
        .iter()
        .map(|&(s, model)| {
            let sel = &config.selectors[s];
            let selections = if sel.kind.is_supervised() {
                ctx.supervised_prefixes(sel, model)
            } else {
                unsupervised[s]
                    .get_or_insert_with(|| ctx.unsupervised_sweep(sel))
                    .clone()
            }?;
            ctx.score(&selections, model)
        })
        .collect()
}

struct CellContext<'a> {
    pool: &'a Dataset,
    pool_y: &'a [f64],
    test_x: &'a Array2<f64>,
    test_y: &'a [f64],
    m_values: Vec<usize>,
    seed: u64,
    run: usize,
}

impl CellContext<'_> {
    fn unsupervised_sweep(&self, sel: &SelectorConfig) -> std::result::Result<Vec<CandidateSet>, String> {
        let spec = sel.spec(self.seed, ModelSpec::ridge());
        self.m_values
            .iter()
            .map(|&m| select(&spec, self.pool, m, None).map_err(|e| format!("M={m}: {e}")))
            .collect()
    }

    /// One supervised run to the largest M, cut into nested prefixes.
    fn supervised_prefixes(
        &self,
        sel: &SelectorConfig,
        model: ModelSpec,
    ) -> std::result::Result<Vec<CandidateSet>, String> {
        let spec = sel.spec(self.seed, model);
        let m_max = *self.m_values.last().expect("m_range is non-empty");
        let mut oracle = PoolOracle::new(self.pool_y);
        let full = select(&spec, self.pool, m_max, Some(&mut oracle)).map_err(|e| e.to_string())?;
        Ok(self.m_values.iter().map(|&m| full.prefix(m)).collect())
    }

    fn score(&self, selections: &[CandidateSet], model: ModelSpec) -> std::result::Result<RunRecord, String> {
        let mut rmse = Vec::with_capacity(selections.len());
        let mut cc = Vec::with_capacity(selections.len());
        for (c, &m) in selections.iter().zip(&self.m_values) {
            let x = take_rows(self.pool.features(), c.indices());
            let y: Vec<f64> = c.indices().iter().map(|&i| self.pool_y[i]).collect();
            let fitted = model.fit(&x, &y).map_err(|e| format!("M={m}: {e}"))?;
            let pred = fitted.predict(self.test_x).map_err(|e| format!("M={m}: {e}"))?;
            let metrics = evaluate(self.test_y, &pred).map_err(|e| format!("M={m}: {e}"))?;
            rmse.push(metrics.rmse);
            cc.push(metrics.cc);
        }
        Ok(RunRecord { run: self.run, rmse, cc })
    }
}
