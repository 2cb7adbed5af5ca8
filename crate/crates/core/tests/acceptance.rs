//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod oracles;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irdm::benchmark::{self, io, benjamini_hochberg, dunn_fdr, ExperimentConfig, ExperimentResult, RunOptions};
use irdm::dataset::{split_pool_test, SplitSpec};
use irdm::models::{ridge_fit, svr_fit_with, SvrParams};
use irdm::selectors::{irdm_from_model, irdm_update_one, select_irdm, select_rd};
use irdm::{kmeans, ClusterModel, KMeansParams};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn acceptance_config() -> ExperimentConfig {
    let path = root().join("configs/acceptance.toml");
    let text = std::fs::read_to_string(&path).expect("configs/acceptance.toml");
    ExperimentConfig::from_toml(&text).expect("valid acceptance config")
}

fn config_options() -> RunOptions<'static> {
    static DIR: std::sync::OnceLock<PathBuf> = std::sync::OnceLock::new();
    RunOptions {
        jobs: None,
        base_dir: Some(DIR.get_or_init(|| root().join("configs"))),
    }
}

fn gaussian_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random_range(-3.0..3.0))
}

fn dist(x: &Array2<f64>, a: usize, b: usize) -> f64 {
    x.row(a).iter().zip(x.row(b)).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------

fn c1_rd_reduction() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    for _ in 0..50 {
        let n = rng.random_range(20..120);
        let d = rng.random_range(1..6);
        let m = rng.random_range(1..=n.min(15));
        let seed = rng.random::<u64>();
        let x = gaussian_points(&mut rng, n, d);
        let rd = select_rd(&x, m, seed, KMeansParams::default()).unwrap();
        let it = select_irdm(&x, m, 0, seed, KMeansParams::default()).unwrap();
        if it.candidates != rd || it.sweeps != 0 {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        mismatches == 0 && secs < 10.0,
        format!("{mismatches}/50 configurations differ, {secs:.2}s"),
    )
}

/// Exhaustive best member of `cluster` against the fixed set, with R and D
/// computed from scratch. Ties keep the smallest index.
fn brute_best(x: &Array2<f64>, model: &ClusterModel, fixed: &[usize], cluster: usize) -> (usize, f64) {
    let mut members = model.members(cluster).to_vec();
    members.sort_unstable();
    let objective = |n: usize| {
        let r = if members.len() > 1 {
            members.iter().map(|&j| dist(x, n, j)).sum::<f64>() / (members.len() - 1) as f64
        } else {
            0.0
        };
        let d = fixed.iter().map(|&j| dist(x, n, j)).fold(f64::INFINITY, f64::min);
        if fixed.is_empty() {
            -r
        } else {
            d - r
        }
    };
    let mut best = (members[0], objective(members[0]));
    for &n in &members[1..] {
        let v = objective(n);
        if v > best.1 {
            best = (n, v);
        }
    }
    best
}

fn objective_of(x: &Array2<f64>, model: &ClusterModel, fixed: &[usize], n: usize) -> f64 {
    let members = model.members(model.cluster_of(n));
    let r = if members.len() > 1 {
        members.iter().map(|&j| dist(x, n, j)).sum::<f64>() / (members.len() - 1) as f64
    } else {
        0.0
    };
    if fixed.is_empty() {
        -r
    } else {
        fixed.iter().map(|&j| dist(x, n, j)).fold(f64::INFINITY, f64::min) - r
    }
}

fn c2_irdm_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut instances = 0;
    let mut updates_checked = 0;
    let mut failures = Vec::new();
    while instances < 150 {
        let n = rng.random_range(3..=12);
        let d = rng.random_range(1..=2);
        let m = rng.random_range(1..=3.min(n));
        let x = gaussian_points(&mut rng, n, d);
        let model = kmeans(&x, m, rng.random(), KMeansParams::default()).unwrap();
        instances += 1;

        // Direct calls on a random state with one candidate per cluster.
        let state: Vec<usize> = (0..m)
            .map(|c| {
                let mem = model.members(c);
                mem[rng.random_range(0..mem.len())]
            })
            .collect();
        let r_oracle: Vec<f64> = (0..n)
            .map(|i| {
                let mem = model.members(model.cluster_of(i));
                if mem.len() > 1 {
                    mem.iter().map(|&j| dist(&x, i, j)).sum::<f64>() / (mem.len() - 1) as f64
                } else {
                    0.0
                }
            })
            .collect();
        for p in 0..m {
            let fixed: Vec<usize> = state.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, &i)| i).collect();
            let got = irdm_update_one(&x, &model, &state, p, &r_oracle).unwrap();
            let (want, _) = brute_best(&x, &model, &fixed, p);
            updates_checked += 1;
            if got != want {
                failures.push(format!("instance {instances} position {p}: {got} vs {want}"));
            }
        }

        // Replay of a full run: every update is the exhaustive argmax, and
        // no position's objective decreases.
        let out = irdm_from_model(&x, &model, 6).unwrap();
        let mut cur: Vec<usize> = (0..m).map(|c| model.nearest_to_centroid(&x, c).unwrap()).collect();
        for u in &out.updates {
            let fixed: Vec<usize> = cur.iter().enumerate().filter(|&(q, _)| q != u.position).map(|(_, &i)| i).collect();
            let (want, best) = brute_best(&x, &model, &fixed, u.position);
            let before = objective_of(&x, &model, &fixed, cur[u.position]);
            updates_checked += 1;
            if u.chosen != want || u.previous != cur[u.position] || best < before {
                failures.push(format!("instance {instances} sweep {} position {}", u.sweep, u.position));
            }
            cur[u.position] = u.chosen;
        }
        if cur != out.candidates.indices() {
            failures.push(format!("instance {instances}: replay ends elsewhere"));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{instances} instances, {updates_checked} updates, {} mismatches{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn c3_termination() -> Verdict {
    let start = Instant::now();
    let config = acceptance_config();
    let mut sweeps = Vec::new();
    let mut over_cap = 0;
    let mut unconverged = 0;
    for source in &config.datasets {
        let data = source.load(config_options().base_dir).unwrap();
        for run in 0..5 {
            let split = split_pool_test(&data, SplitSpec::new(config.pool_fraction, benchmark::run_seed(7, run))).unwrap();
            for m in [5, 10, 15, 20] {
                let out = select_irdm(split.pool.features(), m, 50, run as u64 * 31 + m as u64, KMeansParams::default()).unwrap();
                over_cap += usize::from(out.sweeps > 50);
                unconverged += usize::from(!out.converged);
                sweeps.push(out.sweeps);
            }
        }
    }
    sweeps.sort_unstable();
    let median = if sweeps.len() % 2 == 1 {
        sweeps[sweeps.len() / 2] as f64
    } else {
        (sweeps[sweeps.len() / 2 - 1] + sweeps[sweeps.len() / 2]) as f64 / 2.0
    };
    let secs = start.elapsed().as_secs_f64();
    verdict(
        over_cap == 0 && unconverged == 0 && median <= 5.0 && secs < 60.0,
        format!(
            "{} runs, median sweeps {median}, max {}, {unconverged} not converged, {secs:.1}s",
            sweeps.len(),
            sweeps.last().unwrap()
        ),
    )
}

/// Mean over datasets of AUC(selector)/AUC(rs) of the mean-RMSE curve,
/// recomputed from the raw per-run records.
fn mean_normalized_rmse(result: &ExperimentResult, model: &str, selector: &str, range: [usize; 2]) -> f64 {
    let area = |dataset: &str, sel: &str| {
        let c = result
            .curves
            .iter()
            .find(|c| c.dataset == dataset && c.model == model && c.selector == sel)
            .unwrap_or_else(|| panic!("missing curve {dataset}/{sel}/{model}"));
        let means: Vec<f64> = c
            .m_values
            .iter()
            .enumerate()
            .filter(|(_, m)| (range[0]..=range[1]).contains(*m))
            .map(|(k, _)| c.records.iter().map(|r| r.rmse[k]).sum::<f64>() / c.records.len() as f64)
            .collect();
        oracles::trapezoid(&means)
    };
    let mut datasets: Vec<&str> = result.curves.iter().map(|c| c.dataset.as_str()).collect();
    datasets.dedup();
    datasets.iter().map(|d| area(d, selector) / area(d, "rs")).sum::<f64>() / datasets.len() as f64
}

struct Directional {
    result: ExperimentResult,
    range: [usize; 2],
    elapsed: Duration,
}

fn directional_run() -> Result<Directional, String> {
    let config = acceptance_config();
    let start = Instant::now();
    let result = benchmark::run_experiment(&config, config_options()).map_err(|e| e.to_string())?;
    if !result.failures.is_empty() {
        return Err(format!("{} failed cells: {}", result.failures.len(), result.failures[0].message));
    }
    Ok(Directional {
        result,
        range: config.auc_range,
        elapsed: start.elapsed(),
    })
}

fn c4_ridge_direction(run: &Result<Directional, String>) -> Verdict {
    let Ok(run) = run else {
        return verdict(false, run.as_ref().err().unwrap().clone());
    };
    let n = |s| mean_normalized_rmse(&run.result, "ridge", s, run.range);
    let (irdm, rd, rs) = (n("irdm"), n("rd"), n("rs"));
    let improvement = 100.0 * (1.0 - irdm);
    verdict(
        irdm < rd && rd < rs && improvement >= 10.0,
        format!(
            "normalized RMSE-AUC irdm {irdm:.4} < rd {rd:.4} < rs {rs:.4}; improvement {improvement:.2}% (>= 10%); {:.0}s",
            run.elapsed.as_secs_f64()
        ),
    )
}

fn c5_svr_direction(run: &Result<Directional, String>) -> Verdict {
    let Ok(run) = run else {
        return verdict(false, run.as_ref().err().unwrap().clone());
    };
    let imp = |s| 100.0 * (1.0 - mean_normalized_rmse(&run.result, "svr", s, run.range));
    let (irdm, rd) = (imp("irdm"), imp("rd"));
    verdict(
        irdm > 0.0 && irdm >= rd - 1.0,
        format!("RMSE improvement over rs: irdm {irdm:.2}% > 0, rd {rd:.2}% (irdm >= rd - 1)"),
    )
}

fn c6_small_m(run: &Result<Directional, String>) -> Verdict {
    let Ok(run) = run else {
        return verdict(false, run.as_ref().err().unwrap().clone());
    };
    let n = |s| mean_normalized_rmse(&run.result, "ridge", s, run.range);
    let (irdm, qbc, emcm) = (n("irdm"), n("qbc"), n("emcm"));
    verdict(
        irdm <= qbc && irdm <= emcm,
        format!("normalized RMSE-AUC irdm {irdm:.4} <= qbc {qbc:.4}, emcm {emcm:.4}"),
    )
}

fn c7_svr_solver() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst_rel = 0.0f64;
    let mut failures = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=3);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let c = 10f64.powf(rng.random_range(-1.0..1.7));
        let eps = rng.random_range(0.0..0.5);
        let gamma = 10f64.powf(rng.random_range(-2.0..0.5));

        let xm = Array2::from_shape_fn((n, d), |(i, j)| x[i][j]);
        let model = svr_fit_with(&xm, &y, SvrParams::new(c, eps, gamma)).unwrap();
        let beta = model.dual_coefficients();
        let a: Vec<f64> = beta.iter().map(|b| b.max(0.0)).chain(beta.iter().map(|b| (-b).max(0.0))).collect();

        let k = oracles::gram(&x, gamma);
        let f = oracles::svr_dual_objective(&k, &y, eps, &a);
        let f_star = oracles::svr_dual_objective(&k, &y, eps, &oracles::svr_dual_qp(&k, &y, eps, c));
        let gap = (f - f_star).abs();
        let tolerance = 1e-4 * f_star.abs() + 1e-9 * c;
        worst_rel = worst_rel.max(gap / tolerance);
        let objective_ok = gap <= tolerance;
        let box_ok = beta.iter().all(|b| b.abs() <= c * (1.0 + 1e-12));
        let eq_ok = beta.iter().sum::<f64>().abs() <= 1e-9 * c * n as f64;
        let reported_ok = (model.dual_objective() - f).abs() <= 1e-9 * (1.0 + f.abs());
        if !(objective_ok && box_ok && eq_ok && reported_ok) {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        failures == 0 && secs < 60.0,
        format!("200 instances, {failures} failures, worst objective gap {worst_rel:.3} of tolerance, {secs:.2}s"),
    )
}

fn c8_ridge() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst_rel = 0.0f64;
    let mut worst_grad = 0.0f64;
    let mut failures = 0;
    for _ in 0..100 {
        let d = rng.random_range(1..=8);
        let n = rng.random_range(d + 5..60);
        let r = 10f64.powf(rng.random_range(-2.0..1.0));
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let xm = Array2::from_shape_fn((n, d), |(i, j)| x[i][j]);
        let model = ridge_fit(&xm, &y, r).unwrap();
        let (w_star, b_star) = oracles::ridge_closed_form(&x, &y, r);

        let theta: Vec<f64> = model.weights().iter().copied().chain([model.intercept()]).collect();
        let theta_star: Vec<f64> = w_star.iter().copied().chain([b_star]).collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = theta.iter().zip(&theta_star).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&theta_star).max(f64::MIN_POSITIVE);

        // ∇ of ½‖y − Xw − b‖² + ½r‖w‖²
        let resid: Vec<f64> = (0..n)
            .map(|i| x[i].iter().zip(model.weights()).map(|(a, w)| a * w).sum::<f64>() + model.intercept() - y[i])
            .collect();
        let mut grad: Vec<f64> = (0..d)
            .map(|j| (0..n).map(|i| x[i][j] * resid[i]).sum::<f64>() + r * model.weights()[j])
            .collect();
        grad.push(resid.iter().sum());
        let g = norm(&grad) / (1.0 + norm(&y));

        worst_rel = worst_rel.max(rel);
        worst_grad = worst_grad.max(g);
        if rel > 1e-8 || g > 1e-6 {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!("100 instances, {failures} failures, worst relative error {worst_rel:.2e}, worst scaled gradient {worst_grad:.2e}"),
    )
}

fn c9_statistics() -> Verdict {
    let groups = vec![
        ("a".to_owned(), vec![1.0, 2.0, 3.0, 4.0, 5.0]),
        ("b".to_owned(), vec![6.0, 7.0, 8.0, 9.0, 10.0]),
    ];
    let out = dunn_fdr(&groups, "a", 0.05).unwrap();
    // Mean ranks 3 and 8 of N = 10: z = −5 / √(10·11/12 · (1/5 + 1/5)).
    let z_hand = -5.0 / (110.0f64 / 12.0 * 0.4).sqrt();
    let p_hand = 0.009023438818080326;
    let dunn_ok = out.len() == 1
        && (out[0].z - z_hand).abs() <= 1e-12
        && (out[0].z - -2.6111648393354674).abs() <= 1e-12
        && (out[0].p_raw - p_hand).abs() <= 1e-12
        && out[0].p_adjusted == out[0].p_raw
        && out[0].reject;

    let bh = benjamini_hochberg(&[0.01, 0.02, 0.04]);
    let bh_ok = bh.iter().zip([0.03, 0.03, 0.04]).all(|(a, b)| (a - b).abs() <= 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut monotone = true;
    for _ in 0..500 {
        let k = rng.random_range(1..20);
        let p: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let adj = benjamini_hochberg(&p);
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        monotone &= idx.windows(2).all(|w| adj[w[0]] <= adj[w[1]]);
        monotone &= p.iter().zip(&adj).all(|(a, b)| b >= a && *b <= 1.0);
    }
    verdict(
        dunn_ok && bh_ok && monotone,
        format!(
            "dunn z {:.6} p {:.6e}; BH {:?}; monotone {monotone}",
            out[0].z, out[0].p_raw, bh
        ),
    )
}

fn c10_determinism() -> Verdict {
    let mut config = acceptance_config();
    config.runs = 3;
    config.m_range = [5, 12];
    config.auc_range = [5, 12];
    for kind in ["rd-emcm", "igs", "rsal", "gsx"] {
        config.selectors.push(irdm::benchmark::SelectorConfig::new(kind.parse().unwrap()));
    }
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).max(4);
    let write = |jobs: usize| -> Result<tempfile::TempDir, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let opts = RunOptions {
            jobs: Some(jobs),
            ..config_options()
        };
        let (result, report) = benchmark::benchmark(&config, opts).map_err(|e| e.to_string())?;
        io::write_outputs(dir.path(), &config, &result, &report).map_err(|e| e.to_string())?;
        Ok(dir)
    };
    let (serial, parallel, again) = match (write(1), write(threads), write(threads)) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (a, b, c) => {
            let e = [a.err(), b.err(), c.err()].into_iter().flatten().next().unwrap();
            return verdict(false, e);
        }
    };
    let mut differ = Vec::new();
    let mut compared = 0;
    for f in io::OUTPUT_FILES.iter().filter(|f| f.ends_with(".csv")) {
        let p = serial.path().join(f);
        if !p.exists() {
            continue;
        }
        let bytes = std::fs::read(&p).unwrap();
        compared += 1;
        for other in [&parallel, &again] {
            if std::fs::read(other.path().join(f)).ok().as_ref() != Some(&bytes) {
                differ.push(*f);
            }
        }
    }
    verdict(
        differ.is_empty() && compared >= 6,
        format!("{compared} CSV files compared across jobs=1 and jobs={threads} (twice); differing: {differ:?}"),
    )
}

fn main() {
    // `cargo test -- <filter>` style arguments are accepted and ignored.
    let directional = directional_run();
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        (1, "RD reduction", Box::new(c1_rd_reduction)),
        (2, "iRDM brute-force oracle", Box::new(c2_irdm_oracle)),
        (3, "termination", Box::new(c3_termination)),
        (4, "ridge directional", Box::new(|| c4_ridge_direction(&directional))),
        (5, "kernel directional", Box::new(|| c5_svr_direction(&directional))),
        (6, "small-M supremacy", Box::new(|| c6_small_m(&directional))),
        (7, "SVR solver", Box::new(c7_svr_solver)),
        (8, "ridge solver", Box::new(c8_ridge)),
        (9, "statistics", Box::new(c9_statistics)),
        (10, "determinism", Box::new(c10_determinism)),
    ];
    let mut failed = 0;
    for (id, name, check) in &criteria {
        let v = check();
        failed += usize::from(!v.pass);
        println!("{} criterion {id:>2} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
