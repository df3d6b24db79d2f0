//! `ratiofit` — density ratio estimation from the command line.
//!
//! Subcommands: `train` (fit a model on two sample CSVs), `score` (evaluate a
//! saved model), `synth-bench` (method comparison on synthetic problems with
//! known ratios), `covshift` (importance-weighted regression under covariate
//! shift). All outputs are pure functions of the inputs: rerunning a command
//! with the same files, flags, and seeds reproduces every output byte.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod specs;

#[derive(Parser)]
#[command(name = "ratiofit", version, about = "Density ratio estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a ratio model on numerator/denominator sample CSVs.
    Train(TrainArgs),
    /// Score data rows with a saved model (one score per input row).
    Score(ScoreArgs),
    /// Benchmark estimators on a synthetic problem with a known ratio.
    SynthBench(BenchArgs),
    /// Importance-weighted ridge regression under covariate shift.
    Covshift(CovshiftArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Numerator samples (CSV).
    #[arg(long)]
    nu: PathBuf,
    /// Denominator samples (CSV).
    #[arg(long)]
    de: PathBuf,
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (model.json, trace.csv, metrics.json, config.resolved).
    #[arg(long)]
    out: PathBuf,
    /// Override a config key (repeatable): --set key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Saved model (model.json).
    #[arg(long)]
    model: PathBuf,
    /// Data rows to score (CSV).
    #[arg(long)]
    data: PathBuf,
    /// Output file, one score per row.
    #[arg(long)]
    out: PathBuf,
    /// Loss family the model was trained with (pulog rescales scores by 1/C).
    #[arg(long, default_value = "lsif")]
    family: String,
    /// The C the model was trained with.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Problem spec, e.g. gauss_shift:d=1,pi=0.5,m=2.0.
    #[arg(long)]
    problem: String,
    /// Comma-separated methods, e.g. nnbr-lsif:c=0.5,ulsif-nn,true_ratio.
    #[arg(long)]
    methods: String,
    /// Number of seeds (runs seed, seed+1, ...).
    #[arg(long)]
    seeds: usize,
    /// Key-value config file for sizes and training settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
pub struct CovshiftArgs {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::train::run(&args),
        Command::Score(args) => commands::score::run(&args),
        Command::SynthBench(args) => commands::bench::run(&args),
        Command::Covshift(args) => commands::covshift::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &ratiofit::Error) -> u8 {
    use ratiofit::Error;
    match e {
        Error::Numerical(_) | Error::SingularMatrix(_) | Error::Domain { .. } => 3,
        _ => 2,
    }
}
