mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qtsa", version, about = "Quantum transient stability assessment experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Clone)]
pub struct DataArg {
    /// Dataset CSV; simulated from the configuration when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct ModelArg {
    /// Trained model JSON; defaults to `<out>/model.json`.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate labeled scenarios into dataset.csv.
    GenData {
        #[command(flatten)]
        common: Common,
    },
    /// Train a circuit; writes model.json and history.csv.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
    },
    /// Test-split metrics into metrics.json.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        #[command(flatten)]
        model: ModelArg,
    },
    /// Probability and label maps over a feature plane into region.csv.
    ScanRegion {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArg,
        /// Overrides the grid resolution per axis.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Train and evaluate every configured circuit into compare.csv.
    CompareCircuits {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
    },
    /// Noisy test-split evaluation into sweep.csv and sweep_summary.csv.
    NoiseSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        #[command(flatten)]
        model: ModelArg,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::GenData { common } => commands::gen_data(&common),
        Command::Train { common, data } => commands::train(&common, &data),
        Command::Eval { common, data, model } => commands::eval(&common, &data, &model),
        Command::ScanRegion { common, model, resolution } => commands::scan_region(&common, &model, resolution),
        Command::CompareCircuits { common, data } => commands::compare_circuits(&common, &data),
        Command::NoiseSweep { common, data, model } => commands::noise_sweep(&common, &data, &model),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
