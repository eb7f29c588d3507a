use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use irl_lab::commands::{self, load_config, seed_override_from_env, CliError};
use irl_lab::config::REFERENCE;

const AFTER_HELP: &str = "\
-c accepts a config path or a preset name: tree6, maze7, fig3.
IRL_LAB_SEED_OVERRIDE=<n> replaces the run seed and the sweep seeds.
Exit codes: 0 success, 1 failed check or run error, 2 config error.";

#[derive(Parser)]
#[command(name = "irl-lab", version, about = "Tabular hybrid inverse RL lab", after_help = format!("{AFTER_HELP}\n\n{REFERENCE}"))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the config's variant once and write <run_id>.csv and <run_id>.summary.json.
    Run {
        #[arg(short, long)]
        config: String,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every variant and seed of the [sweep] section, plus an aggregate summary.
    Sweep {
        #[arg(short, long)]
        config: String,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Check the numeric identities and bounds on random instances.
    Verify,
    /// Compare the exact solvers against exhaustive enumeration.
    Oracle {
        #[arg(short, long)]
        config: Option<String>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let seed = seed_override_from_env();
    match cli.command {
        Command::Run { config, out } => commands::run(&load_config(&config, seed.as_deref())?, &out).map(drop),
        Command::Sweep { config, out } => commands::sweep(&load_config(&config, seed.as_deref())?, &out).map(drop),
        Command::Verify => commands::verify().map(drop),
        Command::Oracle { config } => {
            let cfg = config.map(|c| load_config(&c, seed.as_deref())).transpose()?;
            commands::oracle(cfg.as_ref()).map(drop)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irl-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
