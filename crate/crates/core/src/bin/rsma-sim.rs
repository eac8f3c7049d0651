use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rsma_sim::harness::{emit_csv, parse_snr_grid, render_csv, run_figure, run_sweep, Figure, MetricsReport, SimConfig};
use rsma_sim::Result;

#[derive(Parser)]
#[command(name = "rsma-sim", version, about = "Link-level RSMA/OFDM simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Number of trials (channel realizations) per SNR point.
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "RSMA_SIM_WORKERS")]
    workers: Option<usize>,
    /// CSV output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one line per trial to this file.
    #[arg(long)]
    debug_trials: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a configuration file.
    Simulate {
        /// Flat key = value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scheme to simulate, e.g. ProposedDistributed or MuMimo.
        #[arg(long)]
        scheme: Option<String>,
        /// SNR grid as start:stop:step or a comma-separated list.
        #[arg(long, allow_hyphen_values = true)]
        snr_db: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the preset scheme set of one figure (2a, 2b, 3a or 3b).
    SweepFigure {
        #[arg(long)]
        figure: String,
        /// Modulated bits per user per trial.
        #[arg(long, default_value_t = 10_000)]
        block_length: usize,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn apply_run_args(cfg: &mut SimConfig, run: &RunArgs) {
    if let Some(t) = run.trials {
        cfg.trials = t;
    }
    if let Some(s) = run.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = run.workers {
        cfg.workers = w;
    }
    if let Some(o) = &run.out {
        cfg.output_path = Some(o.clone());
    }
    cfg.debug_trials = run.debug_trials.clone();
}

fn write_report(report: &MetricsReport, cfg: &SimConfig) -> Result<()> {
    match &cfg.output_path {
        Some(path) => emit_csv(report, path),
        None => {
            print!("{}", render_csv(report));
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, scheme, snr_db, run } => {
            let mut cfg = match &config {
                Some(path) => SimConfig::from_file(path)?,
                None => SimConfig::default(),
            };
            if let Some(s) = scheme {
                cfg.scheme = s.parse()?;
            }
            if let Some(grid) = snr_db {
                cfg.snr_grid_db = parse_snr_grid(&grid)?;
            }
            apply_run_args(&mut cfg, &run);
            let report = run_sweep(&cfg)?;
            write_report(&report, &cfg)
        }
        Command::SweepFigure { figure, block_length, run } => {
            let figure: Figure = figure.parse()?;
            let mut cfg = SimConfig { trials: 200, block_length, ..SimConfig::default() };
            apply_run_args(&mut cfg, &run);
            let report = run_figure(figure, &cfg)?;
            write_report(&report, &cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
