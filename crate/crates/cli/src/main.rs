//! `irdm` command-line front end.
//!
//! Pool indices printed by this tool are 1-based; the library is 0-based.
//! Exit codes: 0 success, 1 validation error, 2 runtime or partial failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irdm::benchmark::{
    self, io, BenchError, DatasetSource, ExperimentConfig, ExperimentResult, RunOptions, SweepReport,
};
use irdm::dataset::{load_csv, one_hot_encode, standardize};
use irdm::selectors::{select_detailed, SelectorKind, SelectorSpec};

#[derive(Parser)]
#[command(name = "irdm", version, about = "Pool-based sample selection for regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select M samples from a CSV pool with an unsupervised selector.
    Select(SelectArgs),
    /// Run a benchmark described by a TOML config.
    Benchmark(BenchArgs),
    /// Print summary tables for a finished benchmark directory.
    Report {
        /// Directory written by `benchmark`.
        #[arg(long, env = "IRDM_OUTPUT_DIR")]
        input: PathBuf,
    },
    /// Benchmark iRDM at several iteration caps.
    CmaxSweep {
        #[command(flatten)]
        bench: BenchArgs,
        /// Comma-separated c_max values.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5")]
        c_values: Vec<usize>,
    },
    /// Benchmark RD-EMCM warm-started by different unsupervised selectors.
    InitStudy {
        #[command(flatten)]
        bench: BenchArgs,
        /// Comma-separated warm-start selectors.
        #[arg(long, value_delimiter = ',', default_value = "rs,gsx,rd,irdm")]
        inits: Vec<String>,
    },
}

#[derive(Args)]
struct SelectArgs {
    /// CSV file; every row is a pool sample.
    #[arg(long)]
    data: PathBuf,
    /// Column to leave out of the features.
    #[arg(long)]
    label: Option<String>,
    /// Comma-separated categorical columns to one-hot encode.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    #[arg(long)]
    selector: String,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    c_max: usize,
    /// Also write the indices, one per line, to this file.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "IRDM_OUTPUT_DIR", default_value = "irdm-output")]
    output: PathBuf,
    /// Overwrite earlier output in the directory.
    #[arg(long)]
    force: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    pool_fraction: Option<f64>,
    /// Inclusive range as LO,HI.
    #[arg(long, value_parser = parse_range)]
    m_range: Option<[usize; 2]>,
    /// Inclusive range as LO,HI.
    #[arg(long, value_parser = parse_range)]
    auc_range: Option<[usize; 2]>,
    #[arg(long)]
    alpha: Option<f64>,
}

fn parse_range(s: &str) -> Result<[usize; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got '{s}'"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    Ok([num(lo)?, num(hi)?])
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(_) | BenchError::OutputExists { .. } | BenchError::MissingInputs { .. } => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Select(args) => cmd_select(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Report { input } => cmd_report(&input),
        Command::CmaxSweep { bench, c_values } => cmd_cmax(bench, &c_values),
        Command::InitStudy { bench, inits } => cmd_init(bench, &inits),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_select(args: SelectArgs) -> CmdResult {
    if args.m == 0 {
        return Err(Failure::Validation("--m must be at least 1".into()));
    }
    let kind: SelectorKind = args
        .selector
        .parse()
        .map_err(|e: irdm::selectors::SelectError| Failure::Validation(format!("--selector: {e}")))?;
    if kind.is_supervised() {
        return Err(Failure::Validation(format!(
            "--selector {kind} needs labels revealed by an oracle; run it through `benchmark`"
        )));
    }
    let runtime = |e: &dyn std::fmt::Display| Failure::Runtime(e.to_string());
    let data = load_csv(&args.data, args.label.as_deref(), &args.categorical).map_err(|e| runtime(&e))?;
    let data = one_hot_encode(&data).map_err(|e| runtime(&e))?;
    let (pool, _) = standardize(&data).map_err(|e| runtime(&e))?;
    if args.m > pool.n_samples() {
        return Err(Failure::Validation(format!(
            "--m {} exceeds the pool size {}",
            args.m,
            pool.n_samples()
        )));
    }
    let spec = SelectorSpec::new(kind, args.seed).with_c_max(args.c_max);
    let selection = select_detailed(&spec, &pool, args.m, None).map_err(|e| runtime(&e))?;
    let indices: Vec<String> = selection.candidates.sorted().iter().map(|i| (i + 1).to_string()).collect();
    println!("{}", indices.join(" "));
    if let Some(out) = &selection.irdm {
        println!("# sweeps: {}", out.sweeps);
        println!("# converged: {}", out.converged);
        println!("# distinct states: {}", out.history.rows().len());
    }
    if let Some(path) = &args.output {
        let mut text = indices.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Loads the config, applies flag overrides and pins relative dataset paths
/// to the config's directory so the echoed config replays from anywhere.
fn effective_config(args: &BenchArgs) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Validation(format!("{}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::from_toml(&text)?;
    let dir = args.config.parent().unwrap_or(Path::new("."));
    for d in &mut config.datasets {
        if let DatasetSource::Csv { path, .. } = d {
            if path.is_relative() {
                let joined = dir.join(&*path);
                *path = joined.canonicalize().unwrap_or(joined);
            }
        }
    }
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    if let Some(seed) = args.base_seed {
        config.base_seed = seed;
    }
    if let Some(f) = args.pool_fraction {
        config.pool_fraction = f;
    }
    if let Some(r) = args.m_range {
        config.m_range = r;
    }
    if let Some(r) = args.auc_range {
        config.auc_range = r;
    }
    if let Some(a) = args.alpha {
        config.alpha = a;
    }
    if args.jobs == Some(0) {
        return Err(Failure::Validation("--jobs must be at least 1".into()));
    }
    config.validate()?;
    Ok(config)
}

fn options(args: &BenchArgs) -> RunOptions<'_> {
    RunOptions {
        jobs: args.jobs,
        base_dir: None,
    }
}

/// Partial failures still leave complete output behind, but exit nonzero.
fn finish(dir: &Path, result: &ExperimentResult) -> CmdResult {
    if result.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!(
            "{} cell(s) failed; see {}",
            result.failures.len(),
            dir.join(io::ERRORS_FILE).display()
        )))
    }
}

fn cmd_benchmark(args: BenchArgs) -> CmdResult {
    let config = effective_config(&args)?;
    io::prepare_output_dir(&args.output, args.force)?;
    let (result, report) = benchmark::benchmark(&config, options(&args))?;
    io::write_outputs(&args.output, &config, &result, &report)?;
    print!("{}", benchmark::render_summary(&report));
    finish(&args.output, &result)
}

fn cmd_report(input: &Path) -> CmdResult {
    let (config, curves) = io::read_benchmark_dir(input)?;
    let report = benchmark::analyze(&curves, &config.analysis_settings())?;
    print!("{}", benchmark::render_summary(&report));
    Ok(())
}

fn write_sweep(dir: &Path, file: &str, setting: &str, sweep: &SweepReport) -> CmdResult {
    let mut text = format!("model,{setting},selector,rmse_ratio,cc_ratio\n");
    for r in &sweep.rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.model, r.setting, r.selector, r.rmse_ratio, r.cc_ratio
        ));
    }
    let path = dir.join(file);
    fs::write(&path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn print_sweep(setting: &str, sweep: &SweepReport) {
    println!("{:<10} {:<10} {:>12} {:>12}", "model", setting, "rmse_ratio", "cc_ratio");
    for r in &sweep.rows {
        println!("{:<10} {:<10} {:>12.4} {:>12.4}", r.model, r.setting, r.rmse_ratio, r.cc_ratio);
    }
}

fn cmd_cmax(args: BenchArgs, c_values: &[usize]) -> CmdResult {
    let config = effective_config(&args)?;
    io::prepare_output_dir(&args.output, args.force)?;
    let sweep = benchmark::cmax_sweep(&config, c_values, options(&args))?;
    io::write_outputs(&args.output, &sweep.config, &sweep.result, &sweep.report)?;
    write_sweep(&args.output, io::CMAX_FILE, "c_max", &sweep)?;
    print_sweep("c_max", &sweep);
    finish(&args.output, &sweep.result)
}

fn cmd_init(args: BenchArgs, inits: &[String]) -> CmdResult {
    let kinds = inits
        .iter()
        .map(|s| s.parse::<SelectorKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Validation(format!("--inits: {e}")))?;
    let config = effective_config(&args)?;
    io::prepare_output_dir(&args.output, args.force)?;
    let sweep = benchmark::init_study(&config, &kinds, options(&args))?;
    io::write_outputs(&args.output, &sweep.config, &sweep.result, &sweep.report)?;
    write_sweep(&args.output, io::INIT_FILE, "init", &sweep)?;
    print_sweep("init", &sweep);
    finish(&args.output, &sweep.result)
}
