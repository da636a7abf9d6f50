use std::path::PathBuf;

use clap::{Parser, Subcommand};
use evoctl::commands::{cmd_bdspace, cmd_energy, cmd_simulate, cmd_wellposed};
use evoctl::config::RunConfig;

#[derive(Parser)]
#[command(name = "evoctl", version, about = "Discrete evolutionary equations: checks, simulations, ledgers")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set n_cells=64` or `--set input.kind=sinusoid`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coercivity sweep and well-posedness check; writes wellposed.csv.
    Wellposed {
        /// Remove all damping on the observation block.
        #[arg(long)]
        zero_damping: bool,
    },
    /// Time integration; writes trajectory.csv, ledger.csv and io.csv.
    Simulate,
    /// Boundary data spaces; writes bd_basis.csv and bd_defects.csv.
    Bdspace,
    /// Energy ledger of a stored trajectory; writes ledger.csv.
    Energy {
        /// Trajectory file (defaults to trajectory.csv in the output directory).
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = RunConfig::load(cli.config.as_deref(), &cli.set, std::env::var("EVOCTL_SEED").ok()).and_then(|cfg| {
        match &cli.command {
            Command::Wellposed { zero_damping } => cmd_wellposed(&cfg, *zero_damping),
            Command::Simulate => cmd_simulate(&cfg),
            Command::Bdspace => cmd_bdspace(&cfg),
            Command::Energy { trajectory } => cmd_energy(&cfg, trajectory.as_deref()),
        }
    });
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
