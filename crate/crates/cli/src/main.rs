//! `apiary`: run colony simulations, dump quality fields, price the pollen
//! market and validate scenarios.
//!
//! Exit codes: 0 success, 1 invalid input or I/O failure, 2 the colony
//! starved before the horizon, 3 the market has no feasible allocation.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "apiary",
    version,
    about = "Honeybee colony energetics simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the scenario day by day; writes reports.csv and summary.json.
    Run(Common),
    /// Compute nectar quality fields over the landscape.
    Field(Common),
    /// Price pollen for the first day and write the exchange solution.
    Market {
        #[command(flatten)]
        common: Common,
        /// Earlier exchange solution a balanced hive keeps.
        #[arg(long)]
        previous: Option<PathBuf>,
    },
    /// Validate the scenario and print derived quantities without running.
    Check(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario JSON; the built-in scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config value, e.g. `--set colony.honey=8000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// How a command ended when it did not fail outright.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Starved,
    MarketInfeasible,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Starved => 2,
            Status::MarketInfeasible => 3,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("APIARY_LOG", "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(c) => commands::run(&c.into()),
        Command::Field(c) => commands::field(&c.into()),
        Command::Market { common, previous } => {
            commands::market(&common.into(), previous.as_deref())
        }
        Command::Check(c) => commands::check(&c.into()),
    };
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

impl From<Common> for commands::Options {
    fn from(c: Common) -> Self {
        commands::Options {
            config: c.config,
            out: c.out,
            overrides: c.set,
        }
    }
}
