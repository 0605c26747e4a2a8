//! Batch CLI for the strain-limiting constitutive-modeling toolkit.

use clap::{Parser, Subcommand};
use slekan::cli::{cmd_calibrate, cmd_eval, cmd_regime, cmd_synth, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "slekan",
    about = "Strain-limiting elasticity with spline-network corrections: \
             synthetic benchmarks, calibration, and hybrid regime studies",
    version
)]
struct Cli {
    /// Config file with `key: value` overrides of the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Training/calibration seed; falls back to $SLEKAN_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic benchmark: train a constitutive spline per beta (E = 1).
    Synth {
        /// Comma-separated strain-limiting parameters, e.g. 0.5,1,5,10.
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
    },
    /// Calibrate (alpha, E, beta) to an experimental data file.
    Calibrate {
        /// Experimental stretch-stress CSV.
        #[arg(long)]
        data: PathBuf,
    },
    /// Regime study: calibrate (alpha, E) once, then sweep gamma values.
    Regime {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated strain-limiting strengths, e.g. 0.5,0.8.
        #[arg(long, value_delimiter = ',', required = true)]
        gamma: Vec<f64>,
    },
    /// Evaluate a saved constitutive spline against a data file.
    Eval {
        /// Saved spline model (text format written by `synth`).
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

fn run(cli: &Cli) -> Result<(), (String, slekan::SlekanError)> {
    let stage = |s: &str| s.to_string();
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| (stage("config"), e))?,
        None => RunConfig::default(),
    };
    let env_seed = std::env::var("SLEKAN_SEED")
        .ok()
        .and_then(|s| s.parse::<u64>().ok());
    if let Some(seed) = cli.seed.or(env_seed) {
        config.train.seed = seed;
        config.calibration.seed = seed;
    }

    match &cli.command {
        Command::Synth { beta } => {
            cmd_synth(beta, &config, &cli.out).map_err(|e| (stage("synth"), e))?;
        }
        Command::Calibrate { data } => {
            cmd_calibrate(data, &config, &cli.out).map_err(|e| (stage("calibrate"), e))?;
        }
        Command::Regime { data, gamma } => {
            cmd_regime(data, gamma, &config, &cli.out).map_err(|e| (stage("regime"), e))?;
        }
        Command::Eval { model, data } => {
            cmd_eval(model, data, &cli.out).map_err(|e| (stage("eval"), e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((stage, err)) => {
            eprintln!("slekan: stage {stage} failed: {err}");
            ExitCode::FAILURE
        }
    }
}
