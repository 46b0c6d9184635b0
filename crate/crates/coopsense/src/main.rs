//! CLI for the cooperative sensing simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coopsense::config::ExperimentConfig;
use coopsense::harness::{self, SweepScheme};

#[derive(Parser)]
#[command(
    name = "coopsense",
    version,
    about = "RSU-assisted cooperative sensing: scenario generation, solving, and experiment sweeps"
)]
struct Cli {
    /// Configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for scenario generation and the solver chain.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; falls back to COOPSENSE_OUT, then ./results.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario and write the versioned replay file.
    Generate {
        /// Also dump each node's point cloud as an `x y z` text file.
        #[arg(long)]
        dump_clouds: bool,
    },
    /// Solve one instance and emit trace, allocations, and summary.
    Solve,
    /// One solver trace per temperature in the sweep list.
    Convergence {
        /// Override the temperature list, e.g. --tau-list 1e-3,1e-4
        #[arg(long, value_delimiter = ',')]
        tau_list: Option<Vec<f64>>,
    },
    /// Standalone vs cooperative per-CAV accuracy.
    Accuracy,
    /// Completion time across CAV compute budgets and schemes.
    Sweep {
        /// Override the compute candidate list (GHz), e.g. --sweep 2.5,5,10
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
        /// Scheme to run: all, proposed, no-placement, no-allocation.
        #[arg(long, default_value = "all")]
        scheme: String,
    },
    /// Run the built-in oracle checks.
    Selftest,
}

fn config_from(cli: &Cli) -> coopsense::Result<ExperimentConfig> {
    match &cli.config {
        Some(path) => ExperimentConfig::from_path(path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("COOPSENSE_OUT").map(PathBuf::from))
        .or_else(|| cfg.experiment.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn run(cli: Cli) -> coopsense::Result<()> {
    let cfg = config_from(&cli)?;
    let out = out_dir(&cli, &cfg);
    let seed = cli
        .seed
        .unwrap_or_else(|| cfg.experiment.seeds.first().copied().unwrap_or(1));

    match cli.command {
        Command::Generate { dump_clouds } => {
            harness::run_generate(&cfg, seed, &out, dump_clouds)?;
        }
        Command::Solve => {
            harness::run_solve(&cfg, seed, &out)?;
        }
        Command::Convergence { tau_list } => {
            let mut cfg = cfg;
            if let Some(taus) = tau_list {
                cfg.experiment.tau_list = taus;
                cfg.experiment.validate()?;
            }
            harness::run_convergence(&cfg, seed, &out)?;
        }
        Command::Accuracy => {
            harness::run_accuracy_comparison(&cfg, seed, &out)?;
        }
        Command::Sweep { sweep, scheme } => {
            let mut cfg = cfg;
            if let Some(sweep) = sweep {
                cfg.experiment.cav_compute_sweep_ghz = sweep;
                cfg.experiment.validate()?;
            }
            if let Some(seed) = cli.seed {
                cfg.experiment.seeds = vec![seed];
            }
            let schemes = SweepScheme::parse(&scheme)?;
            harness::run_compute_sweep(&cfg, &schemes, &out)?;
        }
        Command::Selftest => {
            if !harness::run_selftest()? {
                return Err(coopsense::Error::InvalidArgument("selftest failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
