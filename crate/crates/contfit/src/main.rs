use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use contfit::commands::{self, executor, InrMode};
use contfit::config::ExperimentConfig;
use contfit::render::{render_grid_file, RenderMode};
use contfit::CliResult;

/// Fit B-splines and hash-grid neural fields to scattered samples of a 2D rect.
#[derive(Parser)]
#[command(name = "contfit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config merged over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory.
    #[arg(long, default_value = "run")]
    out: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples, the train/validation split and the truth grid.
    Gen(Common),
    /// Oracle sweep over knot counts and ridge strengths.
    BsplineGrid(Common),
    /// Train a neural field under one hyperparameter selection mode.
    InrFit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: InrMode,
        /// Reuse finished grid cells or search history in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Render a grid file as a 16-bit plain PGM.
    Render {
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Symmetric mapping around zero.
        #[arg(long)]
        signed: bool,
    },
    /// Summarize the headline results of a run directory.
    Report {
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(c) => {
            let cfg = c.load()?;
            let info = commands::cmd_gen(&cfg, &c.out)?;
            println!("{} samples ({} train, {} validation) in {}", info.n_samples, info.n_train, info.n_validation, c.out.display());
        }
        Command::BsplineGrid(c) => {
            let cfg = c.load()?;
            let r = commands::cmd_bspline_grid(&cfg, &c.out, &executor(&cfg))?;
            println!("best M = {}, lambda = {:e}, NRMSE = {:.4}", r.m, r.lambda, r.nrmse);
        }
        Command::InrFit { common, mode, resume } => {
            let cfg = common.load()?;
            let r = commands::cmd_inr_fit(&cfg, &common.out, mode, resume, &executor(&cfg))?;
            println!(
                "{}: NRMSE = {:.4}, train MSE = {:.3e} (lambda_enc {:.3e}, lambda_mlp {:.3e}, lr {:.3e}, b {:.3})",
                mode.dir_name(),
                r.nrmse,
                r.train_mse,
                r.lambda_enc,
                r.lambda_mlp,
                r.learning_rate,
                r.scale
            );
        }
        Command::Render { grid, out, signed } => {
            let mode = if signed { RenderMode::Signed } else { RenderMode::Linear };
            let info = render_grid_file(&grid, &out, mode)?;
            println!("{}x{} image, range [{}, {}]", info.width, info.height, info.min, info.max);
        }
        Command::Report { out } => {
            let s = commands::cmd_report(&out)?;
            for e in &s.entries {
                println!("{:<18} {:.4}", e.name, e.nrmse);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
