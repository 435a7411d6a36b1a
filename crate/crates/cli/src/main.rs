use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semg_cascade::contamination::ChannelPolicy;
use semg_cascade_cli::{cmd_contaminate, cmd_report, cmd_run, cmd_synth, init_workers, parse_policy, CliResult};

#[derive(Parser)]
#[command(name = "semg-cascade", version, about = "Contamination-aware sEMG classification benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cross-validated comparison described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a contaminated copy of a dataset and a truth file.
    Contaminate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        snr: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 500.0)]
        window_ms: f64,
        /// up-to-half, all or fixed:<k>
        #[arg(long, default_value = "up-to-half", value_parser = parse_policy)]
        policy: ChannelPolicy,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild rank tables and plots from existing results.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Generate a synthetic dataset from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "synthetic-data")]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    init_workers()?;
    match cli.command {
        Command::Run { config, seed, out } => {
            let dir = cmd_run(&config, seed, out.as_deref())?;
            println!("{}", dir.display());
        }
        Command::Contaminate { input, snr, seed, window_ms, policy, out } => {
            let dir = cmd_contaminate(&input, snr, seed, window_ms, policy, out.as_deref())?;
            println!("{}", dir.display());
        }
        Command::Report { input } => {
            for d in cmd_report(&input)? {
                println!("{}", d.display());
            }
        }
        Command::Synth { spec, seed, out } => {
            let dir = cmd_synth(&spec, seed, &out)?;
            println!("{}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
