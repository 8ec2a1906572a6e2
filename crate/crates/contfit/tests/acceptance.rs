//! End-to-end acceptance checks on the full rect experiment.
//!
//! Every check prints one `PASS`/`FAIL` line straight to stdout, bypassing
//! the test harness capture. A failed verdict only fails the test when
//! `ACCEPTANCE_STRICT=1` is set. The heavy pipelines run once
//! and are shared; a global lock keeps timed sections from overlapping with
//! them on small machines. The INR checks take hours on a single core.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use contfit::commands::{cmd_bspline_grid, cmd_gen, cmd_inr_fit, executor, BsplineResult, InrMode, InrResult};
use contfit::config::{ExperimentConfig, Ladder};
use contfit::io::read_json;
use tempfile::TempDir;

// B-spline oracle band
const C1_NRMSE: (f64, f64) = (0.14, 0.17);
const C1_M: [usize; 3] = [70, 75, 80];
const C1_LAMBDA: (f64, f64) = (1e-2, 1e-1);
const C1_SMOKE_LIMIT: Duration = Duration::from_secs(180);
const C1_SMOKE_M: usize = 75;

// regularization regimes
const C2_FLAT_M: usize = 25;
const C2_FLAT_TOL: f64 = 0.005;
const C2_GAIN_M: usize = 75;
const C2_MIN_GAIN: f64 = 0.05;
const C2_RISE_M: usize = 100;
const C2_SMALL_LAMBDA: f64 = 1e-5;

// regularized INR
const C3_MAX_NRMSE: f64 = 0.155;

// unregularized INR
const C4_MAX_TRAIN_MSE: f64 = 1e-4;
const C4_MIN_NRMSE: f64 = 0.25;
const C4_MIN_RATIO: f64 = 1.8;

// bilevel vs 7x7 grids
const C5_NRMSE_TOL: f64 = 0.01;
const C5_GRID_N: usize = 7;

// property suites
const C6_LIMIT: Duration = Duration::from_secs(60);
const C6_SUITES: [&str; 3] = ["spline_properties", "inr_properties", "hyperopt_properties"];

static HEAVY: Mutex<()> = Mutex::new(());

fn heavy() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(name: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" }).unwrap();
    out.flush().unwrap();
}

fn verdict(pass: bool) {
    if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        assert!(pass, "criterion failed");
    }
}

struct Run {
    _dir: TempDir,
    path: PathBuf,
    cfg: ExperimentConfig,
}

fn new_run(cfg: ExperimentConfig) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_path_buf();
    cmd_gen(&cfg, &path).unwrap();
    Run { _dir: dir, path, cfg }
}

struct Bspline {
    result: BsplineResult,
    /// Per knot count: `(lambda, nrmse)` in ladder order.
    curves: BTreeMap<usize, Vec<(f64, f64)>>,
}

fn read_curves(path: &Path) -> BTreeMap<usize, Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut curves: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let m: usize = f[0].parse().unwrap();
        let lambda: f64 = f[1].parse().unwrap();
        let e: f64 = f[2].parse().unwrap();
        curves.entry(m).or_default().push((lambda, e));
    }
    curves
}

fn bspline() -> &'static Bspline {
    static CELL: OnceLock<Bspline> = OnceLock::new();
    CELL.get_or_init(|| {
        let _g = heavy();
        let run = new_run(ExperimentConfig::default());
        let result = cmd_bspline_grid(&run.cfg, &run.path, &executor(&run.cfg)).unwrap();
        let curves = read_curves(&run.path.join("bspline-grid/nrmse_table.csv"));
        Bspline { result, curves }
    })
}

struct Inr {
    fixed: InrResult,
    unregularized: InrResult,
    bilevel: InrResult,
    oracle: InrResult,
    validation: InrResult,
}

fn inr() -> &'static Inr {
    static CELL: OnceLock<Inr> = OnceLock::new();
    CELL.get_or_init(|| {
        let _g = heavy();
        let mut cfg = ExperimentConfig::default();
        let g = &mut cfg.weight_decay_grid;
        g.log10_lambda_enc = Ladder { count: C5_GRID_N, ..g.log10_lambda_enc };
        g.log10_lambda_mlp = Ladder { count: C5_GRID_N, ..g.log10_lambda_mlp };
        let run = new_run(cfg);
        let exec = executor(&run.cfg);
        let fit = |mode| {
            let t = Instant::now();
            let r = cmd_inr_fit(&run.cfg, &run.path, mode, false, &exec).unwrap();
            println!("  {} finished in {:.0} s", mode.dir_name(), t.elapsed().as_secs_f64());
            r
        };
        let fixed = fit(InrMode::Fixed);
        let unregularized = fit(InrMode::Unregularized);
        // bilevel first so the grids pick up its learning rate and scale
        let bilevel = fit(InrMode::Bilevel);
        let oracle = fit(InrMode::GridOracle100);
        let validation = fit(InrMode::GridValidation);
        let src: InrResult = read_json(&run.path.join("inr-val-grid/result.json")).unwrap();
        assert_eq!(src.tau_b_source.as_deref(), Some("learning_rate: bilevel, scale: bilevel"));
        Inr { fixed, unregularized, bilevel, oracle, validation }
    })
}

#[test]
fn c1_bspline_oracle_reproduction() {
    let b = bspline();
    let r = &b.result;
    let nrmse_ok = r.nrmse >= C1_NRMSE.0 && r.nrmse <= C1_NRMSE.1;
    let m_ok = C1_M.contains(&r.m);
    let lambda_ok = r.lambda >= C1_LAMBDA.0 && r.lambda <= C1_LAMBDA.1;

    let (smoke_m, smoke_time) = {
        let _g = heavy();
        let mut cfg = ExperimentConfig::default();
        cfg.bspline.knots = vec![50, 75, 100];
        cfg.bspline.log10_lambda = Ladder { start: -5.0, stop: 5.0, count: 21 };
        let run = new_run(cfg);
        let t = Instant::now();
        let s = cmd_bspline_grid(&run.cfg, &run.path, &executor(&run.cfg)).unwrap();
        (s.m, t.elapsed())
    };
    let smoke_ok = smoke_m == C1_SMOKE_M && smoke_time < C1_SMOKE_LIMIT;

    let pass = nrmse_ok && m_ok && lambda_ok && smoke_ok;
    report(
        "C1 B-spline oracle reproduction",
        pass,
        &format!(
            "best NRMSE {:.4} in [{}, {}]: {nrmse_ok}; M* = {} in {:?}: {m_ok}; lambda* = {:.3e} in [{:e}, {:e}]: {lambda_ok}; \
             smoke grid M* = {smoke_m} (want {C1_SMOKE_M}) in {:.1} s (limit {} s): {smoke_ok}",
            r.nrmse,
            C1_NRMSE.0,
            C1_NRMSE.1,
            r.m,
            C1_M,
            r.lambda,
            C1_LAMBDA.0,
            C1_LAMBDA.1,
            smoke_time.as_secs_f64(),
            C1_SMOKE_LIMIT.as_secs()
        ),
    );
    verdict(pass);
}

fn best_of(curve: &[(f64, f64)]) -> f64 {
    curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min)
}

fn at_lambda(curve: &[(f64, f64)], lambda: f64) -> f64 {
    curve.iter().find(|c| (c.0 / lambda - 1.0).abs() < 1e-9).expect("lambda on the ladder").1
}

#[test]
fn c2_bspline_regularization_regimes() {
    let c = &bspline().curves;
    let flat = &c[&C2_FLAT_M];
    let flat_gain = at_lambda(flat, C2_SMALL_LAMBDA) - best_of(flat);
    let flat_ok = flat_gain <= C2_FLAT_TOL;
    let mid = &c[&C2_GAIN_M];
    let mid_best = best_of(mid);
    let mid_gain = at_lambda(mid, C2_SMALL_LAMBDA) - mid_best;
    let gain_ok = mid_gain >= C2_MIN_GAIN;
    let fine_best = best_of(&c[&C2_RISE_M]);
    let rise_ok = fine_best > mid_best;

    let pass = flat_ok && gain_ok && rise_ok;
    report(
        "C2 B-spline regularization regimes",
        pass,
        &format!(
            "M={C2_FLAT_M} gain over lambda=1e-5 {flat_gain:.4} <= {C2_FLAT_TOL}: {flat_ok}; \
             M={C2_GAIN_M} gain {mid_gain:.4} >= {C2_MIN_GAIN}: {gain_ok}; \
             M={C2_RISE_M} best {fine_best:.4} > M={C2_GAIN_M} best {mid_best:.4}: {rise_ok}"
        ),
    );
    verdict(pass);
}

#[test]
fn c3_regularized_inr_beats_bspline() {
    let bs = bspline().result.nrmse;
    let r = &inr().fixed;
    let below_bs = r.nrmse < bs;
    let abs_ok = r.nrmse <= C3_MAX_NRMSE;
    let pass = below_bs && abs_ok;
    report(
        "C3 regularized INR beats B-spline",
        pass,
        &format!(
            "INR NRMSE {:.4} (lambda_enc {:e}, lambda_mlp {:e}) < B-spline {bs:.4}: {below_bs}; <= {C3_MAX_NRMSE}: {abs_ok}",
            r.nrmse, r.lambda_enc, r.lambda_mlp
        ),
    );
    verdict(pass);
}

#[test]
fn c4_unregularized_inr_overfits() {
    let i = inr();
    let r = &i.unregularized;
    let fit_ok = r.train_mse < C4_MAX_TRAIN_MSE;
    let nrmse_ok = r.nrmse >= C4_MIN_NRMSE;
    let ratio = r.nrmse / i.fixed.nrmse;
    let ratio_ok = ratio >= C4_MIN_RATIO;
    let pass = fit_ok && nrmse_ok && ratio_ok;
    report(
        "C4 unregularized INR overfits",
        pass,
        &format!(
            "train MSE {:.3e} < {C4_MAX_TRAIN_MSE:e}: {fit_ok}; NRMSE {:.4} >= {C4_MIN_NRMSE}: {nrmse_ok}; \
             ratio to regularized {ratio:.2} >= {C4_MIN_RATIO}: {ratio_ok}",
            r.train_mse, r.nrmse
        ),
    );
    verdict(pass);
}

#[test]
fn c5_bilevel_matches_grid_search() {
    let i = inr();
    let oracle_best = i.oracle.selection_objective.expect("oracle grid objective");
    let gap = (i.bilevel.nrmse - oracle_best).abs();
    let nrmse_ok = gap <= C5_NRMSE_TOL;
    let bo_val = i.bilevel.selection_objective.expect("bilevel objective");
    let grid_val = i.validation.selection_objective.expect("validation grid objective");
    let val_ok = bo_val <= grid_val;
    let pass = nrmse_ok && val_ok;
    report(
        "C5 bilevel efficacy",
        pass,
        &format!(
            "bilevel NRMSE {:.4} vs {C5_GRID_N}x{C5_GRID_N} oracle best {oracle_best:.4}, gap {gap:.4} <= {C5_NRMSE_TOL}: {nrmse_ok}; \
             bilevel validation loss {bo_val:.4e} <= grid best {grid_val:.4e}: {val_ok} \
             (bilevel {} evaluations in {:.0} s; lr {:.3e}, scale {:.3})",
            i.bilevel.nrmse,
            i.bilevel.evaluations,
            i.bilevel.wall_time,
            i.bilevel.learning_rate,
            i.bilevel.scale
        ),
    );
    verdict(pass);
}

/// Newest test executable in `dir` whose name is `<suite>-<hash>`.
fn find_suite(dir: &Path, suite: &str) -> Option<PathBuf> {
    let prefix = format!("{suite}-");
    std::fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok())
        .filter(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            name.starts_with(&prefix) && !name.contains('.')
        })
        .max_by_key(|e| e.metadata().and_then(|m| m.modified()).ok())
        .map(|e| e.path())
}

#[test]
fn c6_property_suites() {
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap();
    let _g = heavy();
    let mut total = Duration::ZERO;
    let mut notes = Vec::new();
    let mut all_ok = true;
    for suite in C6_SUITES {
        let Some(bin) = find_suite(deps, suite) else {
            all_ok = false;
            notes.push(format!("{suite}: not built"));
            continue;
        };
        let t = Instant::now();
        let out = Command::new(&bin).arg("--test-threads=1").output().unwrap();
        let dt = t.elapsed();
        total += dt;
        all_ok &= out.status.success();
        notes.push(format!("{suite}: {} in {:.1} s", if out.status.success() { "ok" } else { "failed" }, dt.as_secs_f64()));
    }
    let time_ok = total < C6_LIMIT;
    let pass = all_ok && time_ok;
    report(
        "C6 property suites",
        pass,
        &format!(
            "{}; total {:.1} s < {} s: {time_ok}",
            notes.join(", "),
            total.as_secs_f64(),
            C6_LIMIT.as_secs()
        ),
    );
    verdict(pass);
}
