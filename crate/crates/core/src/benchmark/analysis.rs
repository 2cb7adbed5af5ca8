use std::fmt::{self, Write as _};

use super::run::{CurvePoint, EvaluationCurve};
use super::stats::dunn_fdr;
use super::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Rmse,
    Cc,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Rmse, Metric::Cc];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Cc => "cc",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// Per-M aggregates of one (dataset, selector, model) curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSummary {
    pub dataset: String,
    pub selector: String,
    pub model: String,
    pub points: Vec<CurvePoint>,
}

impl CurveSummary {
    fn series(&self, metric: Metric) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let ms = self.points.iter().map(|p| p.m).collect();
        let (mean, var) = self
            .points
            .iter()
            .map(|p| match metric {
                Metric::Rmse => (p.rmse_mean, p.rmse_std * p.rmse_std),
                Metric::Cc => (p.cc_mean, p.cc_std * p.cc_std),
            })
            .unzip();
        (ms, mean, var)
    }
}

impl From<&EvaluationCurve> for CurveSummary {
    fn from(c: &EvaluationCurve) -> Self {
        CurveSummary {
            dataset: c.dataset.clone(),
            selector: c.selector.clone(),
            model: c.model.clone(),
            points: c.points(),
        }
    }
}

/// Trapezoid area of `values` (given at the grid `ms`) over the integer
/// points of `range`. Every integer in the range must be present.
pub fn auc(ms: &[usize], values: &[f64], range: [usize; 2]) -> Result<f64> {
    let [lo, hi] = range;
    if lo > hi {
        return Err(BenchError::Config(format!("empty AUC range [{lo}, {hi}]")));
    }
    let mut grid = Vec::with_capacity(hi - lo + 1);
    for m in lo..=hi {
        let k = ms
            .iter()
            .position(|&x| x == m)
            .ok_or(BenchError::MissingCurvePoint { m })?;
        grid.push(values[k]);
    }
    Ok(grid.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum())
}

/// Percentage improvement over the baseline area: lower is better for RMSE,
/// higher is better for CC.
pub fn improvement(metric: Metric, auc: f64, baseline: f64) -> f64 {
    match metric {
        Metric::Rmse => 100.0 * (1.0 - auc / baseline),
        Metric::Cc => 100.0 * (auc / baseline - 1.0),
    }
}

/// Improvement of a variance-curve area; lower variance is better for both metrics.
pub fn variance_improvement(var_auc: f64, baseline: f64) -> f64 {
    100.0 * (1.0 - var_auc / baseline)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AucRow {
    pub dataset: String,
    pub selector: String,
    pub model: String,
    pub metric: Metric,
    /// Area under the mean curve.
    pub auc: f64,
    /// `auc / auc_baseline`.
    pub normalized: f64,
    pub improvement: f64,
    /// Area under the across-run variance curve.
    pub var_auc: f64,
    pub var_improvement: f64,
}

/// Cross-dataset aggregate of one (model, metric, selector).
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementRow {
    pub model: String,
    pub metric: Metric,
    pub selector: String,
    pub datasets: usize,
    pub mean_normalized: f64,
    /// Mean over datasets of the mean-curve improvement ("Mean" row).
    pub mean_improvement: f64,
    /// Population variance over datasets of that improvement.
    pub improvement_variance: f64,
    /// Mean over datasets of the variance-curve improvement ("Var" row).
    pub var_improvement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PValueRow {
    pub model: String,
    pub metric: Metric,
    pub reference: String,
    pub other: String,
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub auc_range: [usize; 2],
    /// Selector label every area is normalized by.
    pub baseline: String,
    /// Selector label compared against all others in the p-value table.
    pub reference: String,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkReport {
    pub aucs: Vec<AucRow>,
    pub improvements: Vec<ImprovementRow>,
    pub pvalues: Vec<PValueRow>,
    /// Comparisons that could not be made, with the reason.
    pub notes: Vec<String>,
}

/// Areas, normalized areas and improvements for every curve, in input order
/// and metric order.
pub fn auc_table(curves: &[CurveSummary], settings: &AnalysisSettings) -> Result<Vec<AucRow>> {
    let mut rows = Vec::with_capacity(2 * curves.len());
    for c in curves {
        let base = curves
            .iter()
            .find(|b| b.dataset == c.dataset && b.model == c.model && b.selector == settings.baseline)
            .ok_or_else(|| BenchError::MissingBaseline {
                baseline: settings.baseline.clone(),
                dataset: c.dataset.clone(),
                model: c.model.clone(),
            })?;
        for metric in Metric::ALL {
            let (ms, mean, var) = c.series(metric);
            let (bms, bmean, bvar) = base.series(metric);
            let a = auc(&ms, &mean, settings.auc_range)?;
            let va = auc(&ms, &var, settings.auc_range)?;
            let ba = auc(&bms, &bmean, settings.auc_range)?;
            let bva = auc(&bms, &bvar, settings.auc_range)?;
            let same = c.selector == settings.baseline;
            rows.push(AucRow {
                dataset: c.dataset.clone(),
                selector: c.selector.clone(),
                model: c.model.clone(),
                metric,
                auc: a,
                normalized: if same { 1.0 } else { a / ba },
                improvement: if same { 0.0 } else { improvement(metric, a, ba) },
                var_auc: va,
                var_improvement: if same { 0.0 } else { variance_improvement(va, bva) },
            });
        }
    }
    Ok(rows)
}

/// Keys in first-appearance order.
fn ordered<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in it {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_owned());
        }
    }
    out
}

/// Cross-dataset mean and variance of the improvements (the "Mean" rows),
/// and the mean variance-curve improvement (the "Var" rows).
pub fn improvement_table(aucs: &[AucRow]) -> Vec<ImprovementRow> {
    let mut out = Vec::new();
    for model in ordered(aucs.iter().map(|r| r.model.as_str())) {
        for metric in Metric::ALL {
            let rows: Vec<&AucRow> = aucs.iter().filter(|r| r.model == model && r.metric == metric).collect();
            for selector in ordered(rows.iter().map(|r| r.selector.as_str())) {
                let sel: Vec<&&AucRow> = rows.iter().filter(|r| r.selector == selector).collect();
                let n = sel.len() as f64;
                let mean = |f: &dyn Fn(&AucRow) -> f64| sel.iter().map(|r| f(r)).sum::<f64>() / n;
                let mean_improvement = mean(&|r| r.improvement);
                let improvement_variance = mean(&|r| (r.improvement - mean_improvement).powi(2));
                out.push(ImprovementRow {
                    model: model.clone(),
                    metric,
                    selector,
                    datasets: sel.len(),
                    mean_normalized: mean(&|r| r.normalized),
                    mean_improvement,
                    improvement_variance,
                    var_improvement: mean(&|r| r.var_improvement),
                });
            }
        }
    }
    out
}

/// Dunn/BH comparisons of the reference selector against every other
/// selector, over per-dataset normalized areas.
pub fn pvalue_table(aucs: &[AucRow], settings: &AnalysisSettings) -> (Vec<PValueRow>, Vec<String>) {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    if !aucs.iter().any(|r| r.selector == settings.reference) {
        return (rows, notes);
    }
    for model in ordered(aucs.iter().map(|r| r.model.as_str())) {
        for metric in Metric::ALL {
            let sub: Vec<&AucRow> = aucs.iter().filter(|r| r.model == model && r.metric == metric).collect();
            if !sub.iter().any(|r| r.selector == settings.reference) {
                continue;
            }
            let groups: Vec<(String, Vec<f64>)> = ordered(sub.iter().map(|r| r.selector.as_str()))
                .into_iter()
                .map(|s| {
                    let v = sub.iter().filter(|r| r.selector == s).map(|r| r.normalized).collect();
                    (s, v)
                })
                .collect();
            match dunn_fdr(&groups, &settings.reference, settings.alpha) {
                Ok(cmp) => rows.extend(cmp.into_iter().map(|c| PValueRow {
                    model: model.clone(),
                    metric,
                    reference: settings.reference.clone(),
                    other: c.other,
                    z: c.z,
                    p_raw: c.p_raw,
                    p_adjusted: c.p_adjusted,
                    reject: c.reject,
                })),
                Err(e) => notes.push(format!("p-values for {model}/{metric} not computed: {e}")),
            }
        }
    }
    (rows, notes)
}

pub fn analyze(curves: &[CurveSummary], settings: &AnalysisSettings) -> Result<BenchmarkReport> {
    let aucs = auc_table(curves, settings)?;
    let improvements = improvement_table(&aucs);
    let (pvalues, notes) = pvalue_table(&aucs, settings);
    Ok(BenchmarkReport {
        aucs,
        improvements,
        pvalues,
        notes,
    })
}

/// Plain-text tables: normalized areas per dataset, then improvements with
/// Mean / Var / DatasetVar rows, then p-values.
pub fn render_summary(report: &BenchmarkReport) -> String {
    let mut s = String::new();
    for model in ordered(report.aucs.iter().map(|r| r.model.as_str())) {
        for metric in Metric::ALL {
            let rows: Vec<&AucRow> = report.aucs.iter().filter(|r| r.model == model && r.metric == metric).collect();
            let selectors = ordered(rows.iter().map(|r| r.selector.as_str()));
            let datasets = ordered(rows.iter().map(|r| r.dataset.as_str()));
            let _ = writeln!(s, "Normalized AUC of mean {} ({model})", metric.name().to_uppercase());
            header(&mut s, "dataset", &selectors);
            for d in &datasets {
                let _ = write!(s, "{d:<16}");
                for sel in &selectors {
                    match rows.iter().find(|r| &r.dataset == d && &r.selector == sel) {
                        Some(r) => {
                            let _ = write!(s, " {:>10.3}", r.normalized);
                        }
                        None => {
                            let _ = write!(s, " {:>10}", "-");
                        }
                    }
                }
                s.push('\n');
            }
            let imp: Vec<&ImprovementRow> = report
                .improvements
                .iter()
                .filter(|r| r.model == model && r.metric == metric)
                .collect();
            let cell = |sel: &str, f: &dyn Fn(&ImprovementRow) -> f64| {
                imp.iter()
                    .find(|r| r.selector == sel)
                    .map_or_else(|| format!(" {:>10}", "-"), |r| format!(" {:>10.3}", f(r)))
            };
            let _ = write!(s, "{:<16}", "Mean(norm)");
            for sel in &selectors {
                s.push_str(&cell(sel, &|r| r.mean_normalized));
            }
            s.push_str("\n\n");

            let _ = writeln!(s, "Improvement over baseline, % ({} {model})", metric.name().to_uppercase());
            header(&mut s, "", &selectors);
            type Getter = fn(&ImprovementRow) -> f64;
            let lines: [(&str, Getter); 3] = [
                ("Mean", |r| r.mean_improvement),
                ("Var", |r| r.var_improvement),
                ("DatasetVar", |r| r.improvement_variance),
            ];
            for (label, f) in lines {
                let _ = write!(s, "{label:<16}");
                for sel in &selectors {
                    s.push_str(&cell(sel, &f));
                }
                s.push('\n');
            }
            s.push('\n');
        }
    }
    if !report.pvalues.is_empty() {
        let _ = writeln!(s, "Dunn test with BH adjustment (reject if p_adj < alpha/2)");
        let _ = writeln!(
            s,
            "{:<10} {:<6} {:<10} {:<10} {:>9} {:>10} {:>10} {:>7}",
            "model", "metric", "reference", "other", "z", "p_raw", "p_adj", "reject"
        );
        for r in &report.pvalues {
            let _ = writeln!(
                s,
                "{:<10} {:<6} {:<10} {:<10} {:>9.4} {:>10.4} {:>10.4} {:>7}",
                r.model, r.metric, r.reference, r.other, r.z, r.p_raw, r.p_adjusted, r.reject
            );
        }
    }
    for n in &report.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

fn header(s: &mut String, first: &str, selectors: &[String]) {
    let _ = write!(s, "{first:<16}");
    for sel in selectors {
        let _ = write!(s, " {sel:>10}");
    }
    s.push('\n');
}
