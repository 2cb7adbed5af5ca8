//! Evaluation protocol: repeated pool/test splits, selection at every M,
//! RMSE/CC learning curves, curve areas normalized by random sampling, and
//! rank-based significance tests.

mod analysis;
mod config;
pub mod io;
mod run;
mod stats;

use std::path::PathBuf;

use thiserror::Error;

pub use analysis::{
    analyze, auc, auc_table, improvement, improvement_table, pvalue_table, render_summary, variance_improvement,
    AnalysisSettings, AucRow, BenchmarkReport, CurveSummary, ImprovementRow, Metric, PValueRow,
};
pub use config::{DatasetSource, ExperimentConfig, SelectorConfig};
pub use run::{run_experiment, run_seed, CurvePoint, EvaluationCurve, ExperimentResult, Failure, RunOptions, RunRecord};
pub use stats::{benjamini_hochberg, dunn_fdr, DunnComparison, StatsError};

use crate::dataset::DatasetError;
use crate::models::ModelSpec;
use crate::selectors::SelectorKind;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("dataset '{dataset}' has a pool of {pool} samples, too small for M = {m}")]
    DatasetTooSmall { dataset: String, pool: usize, m: usize },
    #[error("curve has no value at M = {m}")]
    MissingCurvePoint { m: usize },
    #[error("baseline selector '{baseline}' missing for dataset '{dataset}', model '{model}'")]
    MissingBaseline { baseline: String, dataset: String, model: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{} already holds benchmark output ({files}); pass --force to overwrite", dir.display())]
    OutputExists { dir: PathBuf, files: String },
    #[error("{} is missing benchmark output; expected {files}", dir.display())]
    MissingInputs { dir: PathBuf, files: String },
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// Label of the selector every area is normalized by.
pub const BASELINE: &str = "rs";

impl ExperimentConfig {
    pub fn analysis_settings(&self) -> AnalysisSettings {
        AnalysisSettings {
            auc_range: self.auc_range,
            baseline: BASELINE.into(),
            reference: self.reference.clone(),
            alpha: self.alpha,
        }
    }
}

/// Runs the experiment and analyzes the curves that a baseline exists for.
pub fn benchmark(config: &ExperimentConfig, options: RunOptions<'_>) -> Result<(ExperimentResult, BenchmarkReport)> {
    if !config.selectors.iter().any(|s| s.label() == BASELINE) {
        return Err(BenchError::Config(format!("selector '{BASELINE}' is required as the baseline")));
    }
    let result = run_experiment(config, options)?;
    let summaries: Vec<CurveSummary> = result.curves.iter().map(CurveSummary::from).collect();
    let report = analyze(&summaries, &config.analysis_settings())?;
    Ok((result, report))
}

/// Mean normalized areas of one selector variant across datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: String,
    /// `c_max` for the sweep, the warm-start selector's name for the init study.
    pub setting: String,
    pub selector: String,
    pub rmse_ratio: f64,
    pub cc_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// The generated experiment that was actually run.
    pub config: ExperimentConfig,
    pub result: ExperimentResult,
    pub report: BenchmarkReport,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Whether RMSE ratios are non-increasing down the rows of `model`;
    /// an observation, never asserted.
    pub fn rmse_monotone(&self, model: &str) -> bool {
        let r: Vec<f64> = self.rows.iter().filter(|r| r.model == model).map(|r| r.rmse_ratio).collect();
        r.windows(2).all(|w| w[1] <= w[0])
    }
}

fn sweep(config: ExperimentConfig, settings: Vec<(String, String)>, options: RunOptions<'_>) -> Result<SweepReport> {
    let (result, report) = benchmark(&config, options)?;
    let mut rows = Vec::new();
    for model in config.models.iter().map(ModelSpec::label) {
        for (setting, selector) in &settings {
            let ratio = |metric| {
                report
                    .improvements
                    .iter()
                    .find(|r| r.model == model && r.metric == metric && &r.selector == selector)
                    .map_or(f64::NAN, |r| r.mean_normalized)
            };
            rows.push(SweepRow {
                model: model.clone(),
                setting: setting.clone(),
                selector: selector.clone(),
                rmse_ratio: ratio(Metric::Rmse),
                cc_ratio: ratio(Metric::Cc),
            });
        }
    }
    Ok(SweepReport {
        config,
        result,
        report,
        rows,
    })
}

/// iRDM at every `c_max` in `c_values` (selector labels `irdm-c{c}`), next
/// to RS and RD. The configured selector list is replaced.
pub fn cmax_sweep(config: &ExperimentConfig, c_values: &[usize], options: RunOptions<'_>) -> Result<SweepReport> {
    if c_values.is_empty() {
        return Err(BenchError::Config("no c_max values given".into()));
    }
    let mut cfg = config.clone();
    cfg.selectors = vec![SelectorConfig::new(SelectorKind::Rs), SelectorConfig::new(SelectorKind::Rd)];
    let mut settings = Vec::new();
    for &c in c_values {
        let label = format!("irdm-c{c}");
        let mut s = SelectorConfig::new(SelectorKind::Irdm).labeled(label.clone());
        s.c_max = c;
        cfg.selectors.push(s);
        settings.push((c.to_string(), label));
    }
    cfg.reference = format!("irdm-c{}", c_values[0]);
    cfg.validate()?;
    sweep(cfg, settings, options)
}

/// RD-EMCM warm-started by each selector in `inits` (labels
/// `rd-emcm-{init}`), evaluated with ridge only.
pub fn init_study(config: &ExperimentConfig, inits: &[SelectorKind], options: RunOptions<'_>) -> Result<SweepReport> {
    if inits.is_empty() {
        return Err(BenchError::Config("no warm-start selectors given".into()));
    }
    if let Some(bad) = inits.iter().find(|k| k.is_supervised()) {
        return Err(BenchError::Config(format!("warm-start selector must be unsupervised, got '{bad}'")));
    }
    let mut cfg = config.clone();
    cfg.models.retain(ModelSpec::is_ridge);
    if cfg.models.is_empty() {
        cfg.models.push(ModelSpec::ridge());
    }
    cfg.selectors = vec![SelectorConfig::new(SelectorKind::Rs)];
    let mut settings = Vec::new();
    for &init in inits {
        let label = format!("rd-emcm-{init}");
        let mut s = SelectorConfig::new(SelectorKind::RdEmcm).labeled(label.clone());
        s.init_kind = Some(init);
        cfg.selectors.push(s);
        settings.push((init.to_string(), label));
    }
    cfg.reference = format!("rd-emcm-{}", inits[0]);
    cfg.validate()?;
    sweep(cfg, settings, options)
}
