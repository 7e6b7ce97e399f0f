//! `collab`: solve, sweep, simulate and verify the collaboration games.
//!
//! Exit codes: 0 success, 1 domain verdict (infeasible contract or oracle
//! mismatch), 2 configuration error, 3 numerical failure.

mod acq;
mod config;
mod contract;
mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use collab_core::contract::ProfitMethod;

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<collab_core::Error> for CliError {
    fn from(e: collab_core::Error) -> Self {
        match e {
            collab_core::Error::Domain(msg) => CliError::Config(msg),
            collab_core::Error::Numerical(msg) => CliError::Numerical(msg),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "collab", version, about = "Incentive mechanisms for smartphone collaboration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Data acquisition with a collaborator threshold.
    Acq {
        #[command(subcommand)]
        action: AcqAction,
    },
    /// Distributed computing with type-screening contracts.
    Contract {
        #[command(subcommand)]
        action: ContractAction,
    },
    /// Randomized checks of the solvers against brute-force oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct Io {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum AcqAction {
    /// Equilibrium reward, Stage II outcome and expected profit as JSON.
    Solve {
        #[command(flatten)]
        io: Io,
        /// Reward grid points over [0, V].
        #[arg(long)]
        grid: Option<usize>,
    },
    /// One CSV row per value of a swept parameter.
    Sweep {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum)]
        param: acq::SweepParam,
        /// start:stop:count, endpoints included.
        #[arg(long)]
        range: String,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Realized outcomes over time slots at the optimal (or given) reward.
    Simulate {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        slots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        grid: Option<usize>,
        /// Fixed reward instead of the optimized one.
        #[arg(long)]
        reward: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum ContractAction {
    /// Optimal menu as JSON; counts give complete information, type
    /// probabilities give incomplete information.
    Solve {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Feasibility verdict for a menu file.
    Check {
        /// JSON list of {"reward", "task"} items or [reward, task] pairs.
        #[arg(long)]
        contract: PathBuf,
        /// Unit costs, comma separated, highest first.
        #[arg(long)]
        unit_costs: Option<String>,
        /// Take unit costs from a contract config instead.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Profits and user payoff for every realized type count vector.
    Sweep {
        #[command(flatten)]
        io: Io,
    },
    /// Realized profits over time slots with sampled type counts.
    Simulate {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        slots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Marginal,
    Multinomial,
}

impl From<MethodArg> for ProfitMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Marginal => ProfitMethod::Marginal,
            MethodArg::Multinomial => ProfitMethod::Multinomial,
        }
    }
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: verify::Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random instances (suite default when omitted).
    #[arg(long)]
    instances: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    RunConfig::load(path)
}

/// Runs the command; `Ok(false)` is a negative domain verdict.
fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Acq { action } => match action {
            AcqAction::Solve { io, grid } => acq::solve_cmd(&load(&io.config)?, grid, io.out.as_deref()),
            AcqAction::Sweep { io, param, range, grid } => {
                let range = acq::Range::parse(&range)?;
                acq::sweep_cmd(&load(&io.config)?, param, range, grid, io.out.as_deref())
            }
            AcqAction::Simulate { io, slots, seed, grid, reward } => {
                acq::simulate_cmd(&load(&io.config)?, slots, seed, grid, reward, io.out.as_deref())
            }
        }
        .map(|_| true),
        Command::Contract { action } => match action {
            ContractAction::Solve { io, method } => {
                contract::solve_cmd(&load(&io.config)?, method.map(Into::into), io.out.as_deref()).map(|_| true)
            }
            ContractAction::Check { contract, unit_costs, config, out } => {
                let config = config.as_deref().map(load).transpose()?;
                contract::check_cmd(&contract, unit_costs.as_deref(), config.as_ref(), out.as_deref())
            }
            ContractAction::Sweep { io } => contract::sweep_cmd(&load(&io.config)?, io.out.as_deref()).map(|_| true),
            ContractAction::Simulate { io, slots, seed } => {
                contract::simulate_cmd(&load(&io.config)?, slots, seed, io.out.as_deref()).map(|_| true)
            }
        },
        Command::Verify(args) => {
            let instances = args.instances.unwrap_or_else(|| args.suite.default_instances());
            let report = verify::run(args.suite, args.seed, instances)?;
            output::emit(&verify::render(args.suite, args.seed, &report), args.out.as_deref())?;
            Ok(report.mismatches.is_empty())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("collab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
