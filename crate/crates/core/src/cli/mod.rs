//! Command-line driver: parse a run configuration, solve, check, write reports.
//!
//! Exit codes: 0 when every hard check passes, 1 on a check failure, 2 on a
//! configuration or I/O error.

mod config;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{
    parse_config, BranchChoice, ChecksConfig, ClosedFormCheck, DppCheck, IsaacsCheck, LemmaCheck,
    MgridConfig, OmegaMode, OracleCheck, PathCheck, RunConfig, SgridConfig, SolverConfig,
    ViscosityCheck,
};
pub use run::{run, CheckRecord, Command, RunOutcome, Status};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mtgame",
    version,
    about = "Solve and verify multitime zero-sum games"
)]
pub struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output directory, overrides the config
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// random seed, overrides the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// worker threads for the solver (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Sub>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Sub {
    /// Solve the requested sides and check the terminal layer and closed form
    Solve,
    /// Dynamic programming residual at random nodes
    DppCheck,
    /// Viscosity inequalities at extrema of field minus random test functions
    Viscosity,
    /// Gap between upper and lower values and Hamiltonians
    Isaacs,
    /// Integral inequalities of the Lambda form along a short staircase
    Lemma,
    /// Endpoint and cost gap between two staircase orders
    PathCheck,
    /// Exhaustive game tree against the solved fields
    OracleCompare,
    /// Solve and run every check present in the config
    All,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Solve => Command::Solve,
            Sub::DppCheck => Command::DppCheck,
            Sub::Viscosity => Command::Viscosity,
            Sub::Isaacs => Command::Isaacs,
            Sub::Lemma => Command::Lemma,
            Sub::PathCheck => Command::PathCheck,
            Sub::OracleCompare => Command::OracleCompare,
            Sub::All => Command::All,
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> i32 {
    let Some(path) = &cli.config else {
        eprintln!("error: --config is required");
        return EXIT_CONFIG;
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let command = cli.command.map_or(Command::All, Command::from);

    let go = || run(&cfg, command, &out);
    let result = match cli.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(go),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                return EXIT_CONFIG;
            }
        },
        None => go(),
    };
    match result {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!(
                    "{:<18} {:<5} {}",
                    c.name,
                    format!("{:?}", c.status).to_uppercase(),
                    c.headline
                );
            }
            println!("outputs in {}", out.display());
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: writing outputs to {}: {e}", out.display());
            EXIT_CONFIG
        }
    }
}
