use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use scramble::phase::ScanDirection;
use scramble_cli::commands;
use scramble_cli::{CliError, Status};

#[derive(Parser)]
#[command(name = "scramble", version, about = "Entanglement and measurement-visibility phase diagrams")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SCRAMBLE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a (p, tau) sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare Haar closed forms and bounds with Monte Carlo.
    VerifyTheory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate a critical line from a sweep CSV.
    Critical {
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        quantity: String,
        #[arg(long, value_enum, default_value = "p")]
        direction: Direction,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Quenched versus annealed gaps over system sizes.
    SelfAveraging {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    P,
    Tau,
}

fn run(cli: Cli) -> Result<Status, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Sweep { config, out_dir, seed } => commands::cmd_sweep(&config, &out_dir, seed),
        Command::VerifyTheory { config, out_dir, seed } => commands::cmd_verify_theory(&config, &out_dir, seed),
        Command::Critical { sweep, quantity, direction, out_dir } => {
            let direction = match direction {
                Direction::P => ScanDirection::P,
                Direction::Tau => ScanDirection::Tau,
            };
            commands::cmd_critical(&sweep, &quantity, direction, &out_dir)
        }
        Command::SelfAveraging { config, out_dir, seed } => commands::cmd_self_averaging(&config, &out_dir, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Usage.code() as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status.code() as u8)
        }
    }
}
