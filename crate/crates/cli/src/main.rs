//! `revdiff`: command-line front end for the experiment suites.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use revdiff_core::experiments::{self, run, ExperimentConfig};

#[derive(Parser)]
#[command(name = "revdiff", version, about = "Reverse-time diffusion sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// One sampling run: final samples, entropy curves, bounds, plots.
    Sample(Common),
    /// Final KL over the γ × n_steps grid.
    SweepGamma(Common),
    /// Initial and final KL over a list of start times.
    SweepTime(Common),
    /// Final KL for γ on every [S_min, S_max] of the interval grid.
    GridInterval(Common),
    /// Closed-form sweep of the Gauss–Markov example.
    AnalyticSweep(Common),
    /// Train the MLP score by denoising score matching.
    TrainScore(Common),
    /// Render SVG plots from the CSVs in a directory.
    Plot {
        /// Directory holding the CSV artifacts.
        dir: PathBuf,
    },
    /// Print the configuration (defaults merged with --config) as TOML.
    ShowConfig(Common),
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(d) = &common.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(cfg)
}

fn list(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample(c) => {
            let cfg = load(&c)?;
            let r = run::run_sampling(&cfg).context("sample")?;
            println!(
                "initial KL {:.6}  final KL {:.6}",
                r.run.initial_kl(),
                r.run.final_kl()
            );
            for s in &r.run.skipped {
                println!("skipped {s}");
            }
            list(&r.artifacts);
        }
        Command::SweepGamma(c) => {
            let cfg = load(&c)?;
            let (t, files) = run::run_sweep_gamma(&cfg).context("sweep-gamma")?;
            println!(
                "Spearman(final KL, gamma/n_steps) on the degraded half: {:.3}",
                t.degraded_spearman()
            );
            list(&files);
        }
        Command::SweepTime(c) => {
            let cfg = load(&c)?;
            let (t, files) = run::run_sweep_time(&cfg).context("sweep-time")?;
            for r in &t.rows {
                println!(
                    "T = {:.4}: initial {:.5}  SDE {:.5}  ODE {:.5}",
                    r.t_start, r.initial_kl, r.final_kl_sde, r.final_kl_ode
                );
            }
            list(&files);
        }
        Command::GridInterval(c) => {
            let cfg = load(&c)?;
            let (g, files) = run::run_grid_interval(&cfg).context("grid-interval")?;
            let best = g.optimal();
            println!(
                "ODE {:.5}  SDE {:.5}  optimal [{}, {}] {:.5}",
                g.ode_kl(),
                g.sde_kl(),
                best.s_min,
                best.s_max,
                best.final_kl
            );
            list(&files);
        }
        Command::AnalyticSweep(c) => {
            let cfg = load(&c)?;
            let (r, files) = run::run_analytic_sweep(&cfg).context("analytic-sweep")?;
            println!("row variance per gamma: {:?}", r.table.row_variance());
            list(&files);
        }
        Command::TrainScore(c) => {
            let cfg = load(&c)?;
            let (o, files) = run::run_train_score(&cfg).context("train-score")?;
            if let Some(l) = o.report.smoothed(100).last() {
                println!("final smoothed loss {l:.5}");
            }
            list(&files);
        }
        Command::Plot { dir } => {
            let files = experiments::emit_plots(&dir).context("plot")?;
            list(&files);
        }
        Command::ShowConfig(c) => {
            print!("{}", load(&c)?.to_toml_string()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
