//! `garagegen`: train, score, export, simulate and report from one run config.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

mod commands;
mod config;
mod error;
mod filter;
mod lock;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use garagegen::par::Exec;

use crate::commands::{Run, Selection, SimSource};
use crate::config::Loaded;
use crate::error::CliError;
use crate::filter::Filter;
use crate::lock::RunLock;

/// Environment variable overriding `train.seed` and `sim.seed`.
const SEED_VAR: &str = "GF_SEED";

#[derive(Debug, Parser)]
#[command(name = "garagegen", version, about = "Grid parking-garage generation runs")]
struct Cli {
    /// Run configuration file.
    #[arg(short, long, global = true, default_value = "garagegen.toml")]
    config: PathBuf,
    /// Override one config value, e.g. `--set train.total_timesteps=50000`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on the initial map; writes the garage set, training curve and checkpoint.
    Train {
        /// Train once per seed, e.g. `1..5` (inclusive) or `0,3,7`.
        #[arg(long)]
        seeds: Option<Seeds>,
    },
    /// Score usable garages; writes scores and the difficulty/coverage heatmap.
    Score {
        /// Garage set to read instead of the run's own.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Export scored garages as OpenDrive, mesh and SVG files.
    Export {
        /// Content hash or set index of one garage.
        #[arg(long, required_unless_present = "filter", conflicts_with = "filter")]
        id: Option<String>,
        /// e.g. `lambda in [0.6,1.0] and delta in [0.5,0.9]`
        #[arg(long)]
        filter: Option<Filter>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Drive noisy trials through exported garages and regress success on difficulty.
    Simulate {
        /// Use the bundled published evaluation table instead of simulating.
        #[arg(long)]
        fixture: bool,
        /// Simulate this many scored garages spread evenly over difficulty
        /// instead of the exported ones.
        #[arg(long, conflicts_with = "fixture")]
        spanning: Option<usize>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Print the effective configuration after overrides.
    Config,
    /// Summarize the run directory.
    Report {
        /// Exit with status 2 when a check fails.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Seeds(Vec<u64>);

impl FromStr for Seeds {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected a range like 1..5 or a list like 0,3,7, got {s:?}");
        let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            (a..=b).collect()
        } else {
            s.split(',')
                .map(|v| v.trim().parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?
        };
        if seeds.is_empty() {
            return Err(bad());
        }
        Ok(Seeds(seeds))
    }
}

fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{SEED_VAR}={v:?} is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{SEED_VAR}: {e}"))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let loaded = Loaded::load(&cli.config, seed_override()?, &cli.sets)?;
    if let Command::Config = cli.command {
        print!("{}", loaded.config.to_toml());
        return Ok(());
    }
    let dir = loaded.output_dir();
    let _lock = RunLock::acquire(&dir)?;
    let run = Run {
        loaded,
        dir,
        exec: if cli.sequential { Exec::Sequential } else { Exec::default() },
    };
    match cli.command {
        Command::Train { seeds } => commands::train(&run, seeds.as_ref().map(|s| s.0.as_slice())),
        Command::Score { input } => commands::score(&run, input.as_deref()),
        Command::Export { id, filter, input } => {
            let selection = match (&id, &filter) {
                (Some(id), _) => Selection::Id(id),
                (None, Some(f)) => Selection::Filter(f),
                (None, None) => unreachable!("clap requires one of --id and --filter"),
            };
            commands::export(&run, selection, input.as_deref())
        }
        Command::Simulate {
            fixture,
            spanning,
            input,
        } => {
            let source = match (fixture, spanning) {
                (true, _) => SimSource::Fixture,
                (false, Some(n)) => SimSource::Spanning(n),
                (false, None) => SimSource::Exported,
            };
            commands::simulate(&run, source, input.as_deref())
        }
        Command::Config => unreachable!("handled before locking"),
        Command::Report { strict } => {
            let (text, ok) = commands::report(&run)?;
            print!("{text}");
            if strict && !ok {
                return Err(CliError::Runtime("report checks failed".into()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
