//! Report files. Floats are written in shortest round-trip form, so reading
//! a file back reproduces the in-memory values exactly.

use std::fs;
use std::path::{Path, PathBuf};

use super::analysis::{render_summary, BenchmarkReport, CurveSummary};
use super::config::ExperimentConfig;
use super::run::{CurvePoint, ExperimentResult};
use super::{BenchError, Result};

pub const CONFIG_FILE: &str = "config.toml";
pub const CURVES_FILE: &str = "curves.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const AUC_FILE: &str = "auc.csv";
pub const IMPROVEMENT_FILE: &str = "improvement.csv";
pub const PVALUES_FILE: &str = "pvalues.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const ERRORS_FILE: &str = "errors.csv";
pub const CMAX_FILE: &str = "cmax.csv";
pub const INIT_FILE: &str = "init.csv";

/// Every file a benchmark or sweep may write.
pub const OUTPUT_FILES: [&str; 10] = [
    CONFIG_FILE,
    CURVES_FILE,
    RUNS_FILE,
    AUC_FILE,
    IMPROVEMENT_FILE,
    PVALUES_FILE,
    SUMMARY_FILE,
    ERRORS_FILE,
    CMAX_FILE,
    INIT_FILE,
];

pub const CURVES_HEADER: [&str; 10] = [
    "dataset",
    "selector",
    "model",
    "m",
    "runs",
    "rmse_mean",
    "rmse_std",
    "cc_mean",
    "cc_std",
    "cc_undefined",
];
pub const RUNS_HEADER: [&str; 7] = ["dataset", "selector", "model", "run", "m", "rmse", "cc"];
pub const AUC_HEADER: [&str; 9] = [
    "dataset",
    "selector",
    "model",
    "metric",
    "auc",
    "normalized",
    "improvement",
    "var_auc",
    "var_improvement",
];
pub const IMPROVEMENT_HEADER: [&str; 8] = [
    "model",
    "metric",
    "selector",
    "datasets",
    "mean_normalized",
    "mean_improvement",
    "improvement_variance",
    "var_improvement",
];
pub const PVALUES_HEADER: [&str; 8] = ["model", "metric", "reference", "other", "z", "p_raw", "p_adjusted", "reject"];
pub const ERRORS_HEADER: [&str; 5] = ["dataset", "run", "selector", "model", "message"];

/// Creates `dir` if needed. Refuses to overwrite earlier outputs unless
/// `force` is set.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if !force {
        let existing: Vec<&str> = OUTPUT_FILES.into_iter().filter(|f| dir.join(f).exists()).collect();
        if !existing.is_empty() {
            return Err(BenchError::OutputExists {
                dir: dir.to_path_buf(),
                files: existing.join(", "),
            });
        }
    }
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn io_err(path: &Path, e: std::io::Error) -> BenchError {
    BenchError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> BenchError {
    BenchError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_csv<const N: usize>(path: &Path, header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, T::to_string)
}

/// Writes all report files into `dir`.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    result: &ExperimentResult,
    report: &BenchmarkReport,
) -> Result<()> {
    let path = dir.join(CONFIG_FILE);
    fs::write(&path, config.to_toml()).map_err(|e| io_err(&path, e))?;

    write_csv(
        &dir.join(CURVES_FILE),
        CURVES_HEADER,
        result.curves.iter().flat_map(|c| {
            c.points().into_iter().map(move |p| {
                [
                    c.dataset.clone(),
                    c.selector.clone(),
                    c.model.clone(),
                    p.m.to_string(),
                    p.runs.to_string(),
                    p.rmse_mean.to_string(),
                    p.rmse_std.to_string(),
                    p.cc_mean.to_string(),
                    p.cc_std.to_string(),
                    p.cc_undefined.to_string(),
                ]
            })
        }),
    )?;

    write_csv(
        &dir.join(RUNS_FILE),
        RUNS_HEADER,
        result.curves.iter().flat_map(|c| {
            c.records.iter().flat_map(move |r| {
                c.m_values.iter().enumerate().map(move |(k, m)| {
                    [
                        c.dataset.clone(),
                        c.selector.clone(),
                        c.model.clone(),
                        r.run.to_string(),
                        m.to_string(),
                        r.rmse[k].to_string(),
                        opt(&r.cc[k]),
                    ]
                })
            })
        }),
    )?;

    write_report_tables(dir, report)?;

    write_csv(
        &dir.join(ERRORS_FILE),
        ERRORS_HEADER,
        result.failures.iter().map(|f| {
            [
                f.dataset.clone(),
                opt(&f.run),
                opt(&f.selector),
                opt(&f.model),
                f.message.clone(),
            ]
        }),
    )
}

/// Writes the AUC, improvement and p-value tables plus the text summary.
pub fn write_report_tables(dir: &Path, report: &BenchmarkReport) -> Result<()> {
    write_csv(
        &dir.join(AUC_FILE),
        AUC_HEADER,
        report.aucs.iter().map(|r| {
            [
                r.dataset.clone(),
                r.selector.clone(),
                r.model.clone(),
                r.metric.to_string(),
                r.auc.to_string(),
                r.normalized.to_string(),
                r.improvement.to_string(),
                r.var_auc.to_string(),
                r.var_improvement.to_string(),
            ]
        }),
    )?;
    write_csv(
        &dir.join(IMPROVEMENT_FILE),
        IMPROVEMENT_HEADER,
        report.improvements.iter().map(|r| {
            [
                r.model.clone(),
                r.metric.to_string(),
                r.selector.clone(),
                r.datasets.to_string(),
                r.mean_normalized.to_string(),
                r.mean_improvement.to_string(),
                r.improvement_variance.to_string(),
                r.var_improvement.to_string(),
            ]
        }),
    )?;
    write_csv(
        &dir.join(PVALUES_FILE),
        PVALUES_HEADER,
        report.pvalues.iter().map(|r| {
            [
                r.model.clone(),
                r.metric.to_string(),
                r.reference.clone(),
                r.other.clone(),
                r.z.to_string(),
                r.p_raw.to_string(),
                r.p_adjusted.to_string(),
                r.reject.to_string(),
            ]
        }),
    )?;
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, render_summary(report)).map_err(|e| io_err(&path, e))
}

/// Reads `curves.csv` back into per-curve summaries, in file order.
pub fn read_curves(path: &Path) -> Result<Vec<CurveSummary>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(CURVES_HEADER) {
        return Err(BenchError::Io {
            path: path.to_path_buf(),
            message: format!("unexpected header, expected {}", CURVES_HEADER.join(",")),
        });
    }
    let mut out: Vec<CurveSummary> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = |field: &str| BenchError::Io {
            path: path.to_path_buf(),
            message: format!("line {}: cannot parse {field}", line + 2),
        };
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(CURVES_HEADER[i]));
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(CURVES_HEADER[i]));
        let point = CurvePoint {
            m: int(3)?,
            runs: int(4)?,
            rmse_mean: num(5)?,
            rmse_std: num(6)?,
            cc_mean: num(7)?,
            cc_std: num(8)?,
            cc_undefined: int(9)?,
        };
        match out.last_mut() {
            Some(c) if c.dataset == rec[0] && c.selector == rec[1] && c.model == rec[2] => c.points.push(point),
            _ => out.push(CurveSummary {
                dataset: rec[0].to_owned(),
                selector: rec[1].to_owned(),
                model: rec[2].to_owned(),
                points: vec![point],
            }),
        }
    }
    Ok(out)
}

/// Loads the echoed config and curve summaries of a finished benchmark.
pub fn read_benchmark_dir(dir: &Path) -> Result<(ExperimentConfig, Vec<CurveSummary>)> {
    let needed = [CONFIG_FILE, CURVES_FILE];
    let missing: Vec<PathBuf> = needed.iter().map(|f| dir.join(f)).filter(|p| !p.is_file()).collect();
    if !missing.is_empty() {
        return Err(BenchError::MissingInputs {
            dir: dir.to_path_buf(),
            files: needed.join(", "),
        });
    }
    let path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let config = ExperimentConfig::from_toml(&text)?;
    Ok((config, read_curves(&dir.join(CURVES_FILE))?))
}
