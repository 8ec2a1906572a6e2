//! Subcommands. Each reads its inputs from and writes its outputs to the run
//! directory, so they compose through files only.

use std::path::{Path, PathBuf};

use contfit_core::bspline::{eval_spline, oracle_grid_search, RidgeProblem};
use contfit_core::hyperopt::{
    apply_hyper, bilevel_optimize, cell_train_config, evaluate_cell, select_best, BoConfig, GridCellResult, GridSpec,
    GridTask, HyperVector,
};
use contfit_core::inr::{train, Architecture, InrModel, TrainConfig, Trained};
use contfit_core::{eval_grid_coords, gen_samples, nrmse, rect2d, split_samples, EvalGrid, Executor, RngSeed, SampleSet};
use serde::{Deserialize, Serialize};

use crate::config::{streams, AutoValue, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::exec::{PoolExecutor, WallClock};
use crate::io::{self, GridMeta};
use crate::render::{write_pgm, RenderMode};

/// File names inside a run directory.
pub mod paths {
    pub const SAMPLES: &str = "samples.csv";
    pub const SPLIT: &str = "split.json";
    pub const TRUTH: &str = "truth.bin";
    pub const CONFIG: &str = "config.json";
    pub const RESULT: &str = "result.json";
    pub const SUMMARY: &str = "summary.json";
    pub const BSPLINE: &str = "bspline-grid";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InrMode {
    /// Weight decays, learning rate and scale straight from the config.
    Fixed,
    /// Like `fixed` with both weight decays forced to zero.
    Unregularized,
    /// Bayesian optimization of validation loss, then refit on all samples.
    Bilevel,
    GridOracle100,
    GridOracle80,
    GridValidation,
}

impl InrMode {
    pub fn dir_name(self) -> &'static str {
        match self {
            InrMode::Fixed => "inr-fixed",
            InrMode::Unregularized => "inr-unregularized",
            InrMode::Bilevel => "inr-bilevel",
            InrMode::GridOracle100 => "inr-oracle100",
            InrMode::GridOracle80 => "inr-oracle80",
            InrMode::GridValidation => "inr-val-grid",
        }
    }
}

/// Metadata written by `gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenInfo {
    pub config: ExperimentConfig,
    pub sample_seed: RngSeed,
    pub split_seed: RngSeed,
    pub n_samples: usize,
    pub n_train: usize,
    pub n_validation: usize,
}

/// `result.json` of `bspline-grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsplineResult {
    pub nrmse: f64,
    pub m: usize,
    pub lambda: f64,
    pub failed_cells: usize,
    pub wall_time: f64,
}

/// `result.json` of `inr-fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InrResult {
    pub mode: InrMode,
    /// NRMSE of the all-samples model on the evaluation grid.
    pub nrmse: f64,
    /// Training MSE of the all-samples model.
    pub train_mse: f64,
    pub lambda_enc: f64,
    pub lambda_mlp: f64,
    pub learning_rate: f64,
    pub scale: f64,
    /// Seed of the all-samples model.
    pub seed: RngSeed,
    /// Selection objective of the chosen hyperparameters (grid and bilevel
    /// modes): NRMSE for oracle grids, validation MSE otherwise.
    pub selection_objective: Option<f64>,
    /// Where the learning rate and scale came from in grid modes.
    pub tau_b_source: Option<String>,
    pub evaluations: usize,
    pub wall_time: f64,
}

pub fn write_config(dir: &Path, cfg: &ExperimentConfig) -> CliResult<()> {
    io::write_json(&dir.join(paths::CONFIG), cfg)
}

/// Samples, split and truth grid.
pub fn cmd_gen(cfg: &ExperimentConfig, out: &Path) -> CliResult<GenInfo> {
    io::create_dir(out)?;
    let sample_seed = cfg.master_seed();
    let split_seed = cfg.stream(streams::SPLIT);
    let s = gen_samples(cfg.data.n_samples, sample_seed, rect2d)?;
    let s = split_samples(&s, cfg.data.train_fraction, split_seed)?;
    let grid = cfg.eval_grid.build()?.with_truth(rect2d);
    io::write_samples(&out.join(paths::SAMPLES), &s)?;
    let split = s.split().expect("split just assigned");
    io::write_json(&out.join(paths::SPLIT), split)?;
    io::write_grid(&out.join(paths::TRUTH), &GridMeta::of(&grid), grid.truth()?)?;
    let info = GenInfo {
        config: cfg.clone(),
        sample_seed,
        split_seed,
        n_samples: s.len(),
        n_train: split.train.len(),
        n_validation: split.validation.len(),
    };
    io::write_json(&out.join("gen.json"), &info)?;
    Ok(info)
}

fn require(paths: &[PathBuf]) -> CliResult<()> {
    let missing: Vec<String> = paths.iter().filter(|p| !p.exists()).map(|p| p.display().to_string()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Missing(missing))
    }
}

fn load_inputs(out: &Path) -> CliResult<(SampleSet, EvalGrid)> {
    let files = [out.join(paths::SAMPLES), out.join(paths::SPLIT), out.join(paths::TRUTH)];
    require(&files)?;
    let s = io::read_samples_with_split(&files[0], &files[1])?;
    let g = io::read_truth_grid(&files[2])?;
    Ok((s, g))
}

/// Reconstruction, absolute error, cross-section and their images.
fn emit_reconstruction(dir: &Path, grid: &EvalGrid, pred: &[f64], y_cut: f64) -> CliResult<()> {
    let truth = grid.truth()?;
    let meta = GridMeta::of(grid);
    let err: Vec<f64> = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).collect();
    io::write_grid(&dir.join("reconstruction.bin"), &meta, pred)?;
    io::write_grid(&dir.join("abs_error.bin"), &meta, &err)?;
    write_pgm(&dir.join("reconstruction.pgm"), pred, grid.n_x, grid.n_y, RenderMode::Linear)?;
    write_pgm(&dir.join("abs_error.pgm"), &err, grid.n_x, grid.n_y, RenderMode::Linear)?;
    let row = grid.nearest_row(y_cut);
    let xs: Vec<f64> = (0..grid.n_x).map(|j| grid.x_at(j)).collect();
    let r = row * grid.n_x..(row + 1) * grid.n_x;
    io::write_cross_section(&dir.join("cross_section.csv"), &xs, &truth[r.clone()], &pred[r])
}

/// Oracle `(lambda, m)` sweep for the B-spline model.
pub fn cmd_bspline_grid<E: Executor>(cfg: &ExperimentConfig, out: &Path, exec: &E) -> CliResult<BsplineResult> {
    let clock = WallClock::start();
    let (samples, grid) = load_inputs(out)?;
    let dir = out.join(paths::BSPLINE);
    io::create_dir(&dir)?;
    write_config(&dir, cfg)?;
    let log_l = cfg.bspline.log10_lambda.values();
    let lambdas: Vec<f64> = log_l.iter().map(|l| 10f64.powf(*l)).collect();
    let ms = &cfg.bspline.knots;
    let search = oracle_grid_search(&samples, &grid, &lambdas, ms, &cfg.bspline.space, exec)?;

    let rows: Vec<_> = search.table.iter().map(|c| (c.m, c.lambda, c.outcome.as_ref().ok().copied())).collect();
    io::write_nrmse_table(&dir.join("nrmse_table.csv"), &rows)?;
    let heat: Vec<f64> = rows.iter().map(|r| r.2.unwrap_or(f64::NAN)).collect();
    let heat_meta = GridMeta {
        x_min: log_l[0],
        x_max: *log_l.last().unwrap(),
        y_min: ms[0] as f64,
        y_max: *ms.last().unwrap() as f64,
        n_x: lambdas.len(),
        n_y: ms.len(),
    };
    io::write_grid(&dir.join("nrmse_heatmap.bin"), &heat_meta, &heat)?;
    write_pgm(&dir.join("nrmse_heatmap.pgm"), &heat, lambdas.len(), ms.len(), RenderMode::Linear)?;

    let best = search.best.ok_or_else(|| CliError::Failed("every B-spline cell failed".into()))?;
    let model = RidgeProblem::new(&samples, cfg.bspline.space.config(best.m)?).solve(best.lambda)?;
    let pred = eval_spline(&model, &eval_grid_coords(&grid));
    emit_reconstruction(&dir, &grid, &pred, cfg.cross_section_y)?;
    let result = BsplineResult {
        nrmse: nrmse(&pred, grid.truth()?)?,
        m: best.m,
        lambda: best.lambda,
        failed_cells: rows.iter().filter(|r| r.2.is_none()).count(),
        wall_time: clock_now(&clock),
    };
    io::write_json(&dir.join(paths::RESULT), &result)?;
    Ok(result)
}

fn clock_now(c: &WallClock) -> f64 {
    contfit_core::hyperopt::Clock::now(c)
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    architecture: Architecture,
    train: TrainConfig,
    iterations: usize,
}

/// Save, score and render an all-samples model.
fn finish_inr(
    dir: &Path,
    cfg: &ExperimentConfig,
    grid: &EvalGrid,
    arch: &Architecture,
    tc: &TrainConfig,
    trained: &Trained,
) -> CliResult<f64> {
    let header = CheckpointHeader { architecture: arch.clone(), train: tc.clone(), iterations: tc.iterations };
    io::write_checkpoint(&dir.join("model.ckpt"), &header, trained.model.params())?;
    io::write_trace(
        &dir.join("loss_trace.csv"),
        &["loss", "data_loss"],
        &[&trained.loss_trace, &trained.data_trace],
    )?;
    let pred = trained.model.forward(&eval_grid_coords(grid))?;
    emit_reconstruction(dir, grid, &pred, cfg.cross_section_y)?;
    Ok(nrmse(&pred, grid.truth()?)?)
}

/// Load a model written by `inr-fit`.
pub fn load_checkpoint(path: &Path) -> CliResult<InrModel> {
    let (h, params): (CheckpointHeader, Vec<f64>) = io::read_checkpoint(path)?;
    InrModel::from_params(h.architecture, params).map_err(|e| CliError::format(path, e))
}

/// Learning rate and scale for grid modes, with their provenance.
fn grid_tau_b(cfg: &ExperimentConfig, out: &Path) -> CliResult<(f64, f64, String)> {
    let g = &cfg.weight_decay_grid;
    let bilevel_path = out.join(InrMode::Bilevel.dir_name()).join(paths::RESULT);
    let bilevel: Option<InrResult> = match (g.learning_rate, g.scale) {
        (AutoValue::Value(_), AutoValue::Value(_)) => None,
        _ if bilevel_path.exists() => Some(io::read_json(&bilevel_path)?),
        _ => None,
    };
    let pick = |v: AutoValue, from_bilevel: Option<f64>, fallback: f64| match (v, from_bilevel) {
        (AutoValue::Value(x), _) => (x, "config"),
        (AutoValue::Auto(_), Some(x)) => (x, "bilevel"),
        (AutoValue::Auto(_), None) => (fallback, "defaults"),
    };
    let (tau, st) = pick(g.learning_rate, bilevel.as_ref().map(|r| r.learning_rate), cfg.inr.train.learning_rate);
    let (b, sb) = pick(g.scale, bilevel.as_ref().map(|r| r.scale), cfg.inr.architecture.encoder.scale);
    Ok((tau, b, format!("learning_rate: {st}, scale: {sb}")))
}

fn cell_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("cells").join(format!("cell-{index:05}.json"))
}

/// Weight-decay grid with per-cell result files; `resume` reuses cells
/// already on disk.
fn run_grid<E: Executor>(
    task: &GridTask<'_>,
    arch: &Architecture,
    template: &TrainConfig,
    spec: &GridSpec,
    dir: &Path,
    resume: bool,
    exec: &E,
) -> CliResult<Vec<GridCellResult>> {
    let mut table: Vec<Option<GridCellResult>> = vec![None; spec.len()];
    if resume {
        for (i, slot) in table.iter_mut().enumerate() {
            let p = cell_path(dir, i);
            if p.exists() {
                let c: GridCellResult = io::read_json(&p)?;
                let (e, m) = spec.cell(i);
                if c.index != i || c.log10_lambda_enc != e || c.log10_lambda_mlp != m {
                    return Err(CliError::format(&p, "cell does not match the configured grid"));
                }
                *slot = Some(c);
            }
        }
    }
    let todo: Vec<usize> = (0..spec.len()).filter(|&i| table[i].is_none()).collect();
    let done = exec.map(todo.len(), |k| -> CliResult<GridCellResult> {
        let c = evaluate_cell(task, arch, template, spec, todo[k])?;
        io::write_json(&cell_path(dir, c.index), &c)?;
        Ok(c)
    });
    for c in done {
        let c = c?;
        let i = c.index;
        table[i] = Some(c);
    }
    Ok(table.into_iter().map(|c| c.expect("every cell evaluated")).collect())
}

/// Train an INR under `mode` and evaluate its all-samples refit.
pub fn cmd_inr_fit<E: Executor>(
    cfg: &ExperimentConfig,
    out: &Path,
    mode: InrMode,
    resume: bool,
    exec: &E,
) -> CliResult<InrResult> {
    let clock = WallClock::start();
    let (samples, grid) = load_inputs(out)?;
    let dir = out.join(mode.dir_name());
    io::create_dir(&dir)?;
    write_config(&dir, cfg)?;
    let arch = &cfg.inr.architecture;
    let base = &cfg.inr.train;

    match mode {
        InrMode::Fixed | InrMode::Unregularized => {
            let mut tc = TrainConfig { seed: cfg.stream(streams::INR_FIXED), ..base.clone() };
            if mode == InrMode::Unregularized {
                tc.lambda_enc = 0.0;
                tc.lambda_mlp = 0.0;
            }
            let trained = train(&samples, arch, &tc)?;
            let e = finish_inr(&dir, cfg, &grid, arch, &tc, &trained)?;
            let r = InrResult {
                mode,
                nrmse: e,
                train_mse: trained.final_data_loss,
                lambda_enc: tc.lambda_enc,
                lambda_mlp: tc.lambda_mlp,
                learning_rate: tc.learning_rate,
                scale: arch.encoder.scale,
                seed: tc.seed,
                selection_objective: None,
                tau_b_source: None,
                evaluations: 1,
                wall_time: clock_now(&clock),
            };
            io::write_json(&dir.join(paths::RESULT), &r)?;
            Ok(r)
        }
        InrMode::Bilevel => {
            let hist_path = dir.join("history.jsonl");
            let prior = if resume && hist_path.exists() { io::read_history(&hist_path)? } else { Vec::new() };
            let bo = BoConfig { seed: cfg.stream(streams::BILEVEL), ..cfg.bilevel.optimizer.clone() };
            let mut log = io::History::open(&hist_path, !resume)?;
            let mut log_err = None;
            let res = bilevel_optimize(
                &samples,
                arch,
                base,
                &cfg.bilevel.bounds,
                &bo,
                &prior,
                exec,
                &clock,
                |rec| {
                    if let Err(e) = log.append(rec) {
                        log_err.get_or_insert(e);
                    }
                },
            )?;
            if let Some(e) = log_err {
                return Err(e);
            }
            let best: &HyperVector = &res.search.best.hyper;
            let (a, tc) = apply_hyper(arch, base, best, res.search.best.seed);
            let e = finish_inr(&dir, cfg, &grid, &a, &tc, &res.refit)?;
            io::write_trace(&dir.join("incumbent.csv"), &["incumbent"], &[&res.search.incumbent])?;
            let r = InrResult {
                mode,
                nrmse: e,
                train_mse: res.refit.final_data_loss,
                lambda_enc: tc.lambda_enc,
                lambda_mlp: tc.lambda_mlp,
                learning_rate: tc.learning_rate,
                scale: a.encoder.scale,
                seed: tc.seed,
                selection_objective: Some(res.search.best.objective),
                tau_b_source: None,
                evaluations: res.search.history.len(),
                wall_time: clock_now(&clock),
            };
            io::write_json(&dir.join(paths::RESULT), &r)?;
            Ok(r)
        }
        InrMode::GridOracle100 | InrMode::GridOracle80 | InrMode::GridValidation => {
            let (tau, b, source) = grid_tau_b(cfg, out)?;
            let mut a = arch.clone();
            a.encoder.scale = b;
            let template = TrainConfig { learning_rate: tau, seed: cfg.stream(streams::GRID), ..base.clone() };
            let spec = cfg.weight_decay_grid.spec();
            let train_set = samples.train_set()?;
            let val_set = samples.validation_set()?;
            let task = match mode {
                InrMode::GridOracle100 => GridTask::Oracle100 { samples: &samples, grid: &grid },
                InrMode::GridOracle80 => GridTask::Oracle80 { train: &train_set, grid: &grid },
                _ => GridTask::Validation { train: &train_set, validation: &val_set },
            };
            let table = run_grid(&task, &a, &template, &spec, &dir, resume, exec)?;
            io::write_inr_grid_table(&dir.join("grid_table.csv"), &table)?;
            let heat: Vec<f64> = table.iter().map(|c| c.objective.unwrap_or(f64::NAN)).collect();
            let (le, lm) = (&spec.log10_lambda_enc, &spec.log10_lambda_mlp);
            let meta = GridMeta {
                x_min: lm[0],
                x_max: *lm.last().unwrap(),
                y_min: le[0],
                y_max: *le.last().unwrap(),
                n_x: lm.len(),
                n_y: le.len(),
            };
            io::write_grid(&dir.join("objective_heatmap.bin"), &meta, &heat)?;
            write_pgm(&dir.join("objective_heatmap.pgm"), &heat, meta.n_x, meta.n_y, RenderMode::Linear)?;
            let best = select_best(&table)
                .ok_or_else(|| CliError::Failed("every grid cell failed".into()))?;
            let tc = cell_train_config(&spec, &template, best.index);
            let trained = train(&samples, &a, &tc)?;
            let e = finish_inr(&dir, cfg, &grid, &a, &tc, &trained)?;
            let r = InrResult {
                mode,
                nrmse: e,
                train_mse: trained.final_data_loss,
                lambda_enc: tc.lambda_enc,
                lambda_mlp: tc.lambda_mlp,
                learning_rate: tau,
                scale: b,
                seed: tc.seed,
                selection_objective: best.objective,
                tau_b_source: Some(source),
                evaluations: table.len() + 1,
                wall_time: clock_now(&clock),
            };
            io::write_json(&dir.join(paths::RESULT), &r)?;
            Ok(r)
        }
    }
}

/// One line of the run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub name: String,
    pub nrmse: f64,
    pub hyperparameters: serde_json::Value,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub entries: Vec<SummaryEntry>,
}

impl Summary {
    pub fn nrmse(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.nrmse)
    }
}

pub const REPORT_RUNS: [&str; 6] =
    ["bspline-oracle", "inr-oracle100", "inr-oracle80", "inr-val-grid", "inr-bilevel", "inr-unregularized"];

fn report_dir(name: &str) -> &str {
    if name == "bspline-oracle" {
        paths::BSPLINE
    } else {
        name
    }
}

/// Collect the six headline results of a run directory into `summary.json`.
pub fn cmd_report(out: &Path) -> CliResult<Summary> {
    let files: Vec<PathBuf> = REPORT_RUNS.iter().map(|n| out.join(report_dir(n)).join(paths::RESULT)).collect();
    require(&files)?;
    let mut entries = Vec::new();
    for (name, path) in REPORT_RUNS.iter().zip(&files) {
        let entry = if *name == "bspline-oracle" {
            let r: BsplineResult = io::read_json(path)?;
            SummaryEntry {
                name: name.to_string(),
                nrmse: r.nrmse,
                hyperparameters: serde_json::json!({ "m": r.m, "lambda": r.lambda }),
                wall_time: r.wall_time,
            }
        } else {
            let r: InrResult = io::read_json(path)?;
            SummaryEntry {
                name: name.to_string(),
                nrmse: r.nrmse,
                hyperparameters: serde_json::json!({
                    "lambda_enc": r.lambda_enc,
                    "lambda_mlp": r.lambda_mlp,
                    "learning_rate": r.learning_rate,
                    "scale": r.scale,
                }),
                wall_time: r.wall_time,
            }
        };
        entries.push(entry);
    }
    let s = Summary { entries };
    io::write_json(&out.join(paths::SUMMARY), &s)?;
    Ok(s)
}

/// Executor sized from the config.
pub fn executor(cfg: &ExperimentConfig) -> PoolExecutor {
    PoolExecutor::new(cfg.workers)
}
