//! `collab contract ...`: computing-task contracts.

use std::path::Path;

use collab_core::contract::{
    aggregate_user_payoff, check_feasibility, solve_complete, solve_incomplete, Contract, ContractItem,
    ContractSolution, KktDiagnostics, Population, ProfitMethod, UserTypeProfile, Violation,
};
use collab_core::prob::{composition_count, multinomial_compositions};
use collab_core::sim::{compare_at_counts, simulate_contract};
use serde::{Deserialize, Serialize};

use crate::config::{parse_numbers, RunConfig};
use crate::output::{emit, json, num, opt, Csv};
use crate::CliError;

/// Largest count grid `contract sweep` will walk.
pub const MAX_SWEEP_POINTS: u128 = 2_000_000;

#[derive(Debug, Serialize)]
struct SolveReport<'a> {
    information: &'static str,
    items: &'a [ContractItem],
    /// One-based type labels with a positive task.
    involved: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    involvement_test: Option<Vec<usize>>,
    per_type_payoff: &'a [f64],
    expected_profit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    kkt: Option<&'a KktDiagnostics>,
}

fn one_based(types: &[usize]) -> Vec<usize> {
    types.iter().map(|i| i + 1).collect()
}

fn solve_profile(profile: &UserTypeProfile) -> Result<(ContractSolution, bool), CliError> {
    Ok(match profile.population() {
        Population::Counts(_) => (solve_complete(profile)?, true),
        Population::Probabilistic { .. } => (solve_incomplete(profile)?, false),
    })
}

pub fn solve_cmd(config: &RunConfig, method: Option<ProfitMethod>, out: Option<&Path>) -> Result<(), CliError> {
    let profile = config.profile()?;
    let (mut solution, complete) = solve_profile(&profile)?;
    if !complete && config.method(method) == ProfitMethod::Multinomial {
        solution.expected_profit =
            collab_core::contract::expected_profit(&solution.contract, &profile, ProfitMethod::Multinomial)?;
    }
    let report = SolveReport {
        information: if complete { "complete" } else { "incomplete" },
        items: solution.contract.items(),
        involved: one_based(&solution.involved),
        involvement_test: (!complete).then(|| one_based(&solution.involvement_test)),
        per_type_payoff: &solution.per_type_payoff,
        expected_profit: solution.expected_profit,
        kkt: solution.diagnostics.as_ref(),
    };
    emit(&json(&report)?, out)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ContractFile {
    Items(Vec<ContractItem>),
    Pairs(Vec<(f64, f64)>),
}

pub fn load_contract(path: &Path) -> Result<Contract, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let parsed: ContractFile =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let contract = match parsed {
        ContractFile::Items(items) => Contract::new(items),
        ContractFile::Pairs(pairs) => Contract::from_pairs(&pairs),
    };
    contract.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn describe(v: &Violation) -> String {
    match v {
        Violation::LowestTypeParticipation { payoff } => {
            format!("type 1 payoff {} is negative", num(*payoff))
        }
        Violation::Monotonicity { type_index, rewards, tasks } => format!(
            "types {} and {}: rewards ({}, {}) and tasks ({}, {}) are not both nondecreasing",
            type_index,
            type_index + 1,
            num(rewards.0),
            num(rewards.1),
            num(tasks.0),
            num(tasks.1)
        ),
        Violation::NeighborBounds { type_index, reward, lower, upper } => format!(
            "type {} reward {} outside [{}, {}]",
            type_index + 1,
            num(*reward),
            num(*lower),
            num(*upper)
        ),
    }
}

/// Returns whether the contract is feasible.
pub fn check_cmd(
    contract: &Path,
    unit_costs: Option<&str>,
    config: Option<&RunConfig>,
    out: Option<&Path>,
) -> Result<bool, CliError> {
    let contract = load_contract(contract)?;
    let k = match (unit_costs, config) {
        (Some(text), _) => parse_numbers(text).map_err(|e| CliError::Config(format!("--unit-costs: {e}")))?,
        (None, Some(c)) => c.contract()?.unit_costs.clone(),
        (None, None) => return Err(CliError::Config("give --unit-costs or a --config with a contract section".into())),
    };
    let report = check_feasibility(&contract, &k)?;
    let mut text = String::from(if report.feasible() { "feasible\n" } else { "infeasible\n" });
    for v in &report.violations {
        text.push_str(&describe(v));
        text.push('\n');
    }
    emit(&text, out)?;
    Ok(report.feasible())
}

fn count_header(types: usize, tail: &[&str]) -> Vec<String> {
    (1..=types).map(|i| format!("n{i}")).chain(tail.iter().map(|s| s.to_string())).collect()
}

fn incomplete_profile(config: &RunConfig) -> Result<(UserTypeProfile, ContractSolution), CliError> {
    let profile = config.profile()?;
    if !matches!(profile.population(), Population::Probabilistic { .. }) {
        return Err(CliError::Config("this command needs a probabilistic population".into()));
    }
    let solution = solve_incomplete(&profile)?;
    Ok((profile, solution))
}

/// Every realised count vector: profits under both information scenarios
/// and the users' aggregate payoff under the fixed incomplete contract.
pub fn sweep_cmd(config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let (profile, solution) = incomplete_profile(config)?;
    let (total, _) = profile.distribution()?;
    let types = profile.types();
    let points = composition_count(total, types);
    if points > MAX_SWEEP_POINTS {
        return Err(CliError::Config(format!("{points} count vectors exceed the sweep limit {MAX_SWEEP_POINTS}")));
    }
    let header = count_header(types, &["incomplete_profit", "complete_profit", "ratio", "user_payoff"]);
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for counts in multinomial_compositions(total, types)? {
        let users = aggregate_user_payoff(&solution.contract, &counts, profile.unit_costs())?;
        let cells: Vec<String> = counts.as_slice().iter().map(u64::to_string).collect();
        let (incomplete, complete, ratio) = compare_at_counts(&profile, &solution, counts)?;
        csv.row(cells.into_iter().chain([num(incomplete), num(complete), opt(ratio), num(users)]));
    }
    emit(&csv.into_string(), out)
}

pub fn simulate_cmd(config: &RunConfig, slots: Option<u64>, seed: Option<u64>, out: Option<&Path>) -> Result<(), CliError> {
    let (profile, solution) = incomplete_profile(config)?;
    let run = simulate_contract(&profile, &solution, config.slots(slots)?, config.seed(seed))?;
    let header = count_header(profile.types(), &["incomplete_profit", "complete_profit", "ratio"]);
    let mut csv = Csv::new(&[&["slot"], header.iter().map(String::as_str).collect::<Vec<_>>().as_slice()].concat());
    for r in &run.records {
        let cells = std::iter::once(r.slot.to_string())
            .chain(r.counts.as_slice().iter().map(u64::to_string))
            .chain([num(r.incomplete_profit), num(r.complete_profit), opt(r.ratio)]);
        csv.row(cells);
    }
    emit(&csv.into_string(), out)
}
