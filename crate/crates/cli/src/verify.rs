//! `collab verify <suite>`: randomized agreement checks against the
//! brute-force oracles. Instance `i` draws from stream `i` of `--seed`.

use clap::ValueEnum;
use collab_core::acquisition::{solve_complete as solve_acq_complete, AcquisitionScenario, Information, PayoffModel, StageTwo};
use collab_core::contract::{
    check_feasibility, solve_complete, solve_incomplete, Contract, ContractItem, Population, UserTypeProfile,
};
use collab_core::cost::KnownCosts;
use collab_core::oracles::{
    complete_type_oracle, enumerate_ir_ic, enumerate_pure_ne, grid_contract_oracle, minimal_successful_reward,
    GridOracleConfig,
};
use collab_core::prob::{binom_pmf, binom_tail, multinomial_compositions, multinomial_pmf, BinomialSpec, RngHandle};
use rand::Rng;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    AcqNe,
    ContractFeas,
    ContractGrid,
    Prob,
}

impl Suite {
    pub fn default_instances(self) -> u64 {
        match self {
            Suite::AcqNe => 1000,
            Suite::ContractFeas => 10_000,
            Suite::ContractGrid => 50,
            Suite::Prob => 1000,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Suite::AcqNe => "acq-ne",
            Suite::ContractFeas => "contract-feas",
            Suite::ContractGrid => "contract-grid",
            Suite::Prob => "prob",
        }
    }
}

/// `Ok(None)` on agreement, `Ok(Some(dump))` on a mismatch.
type Check = Result<Option<String>, CliError>;

pub struct Report {
    pub instances: u64,
    pub mismatches: Vec<(u64, String)>,
}

pub fn run(suite: Suite, seed: u64, instances: u64) -> Result<Report, CliError> {
    let mut mismatches = Vec::new();
    for i in 0..instances {
        let mut rng = RngHandle::with_stream(seed, i);
        let outcome = match suite {
            Suite::AcqNe => acq_ne(&mut rng),
            Suite::ContractFeas => contract_feas(&mut rng),
            Suite::ContractGrid => contract_grid(&mut rng),
            Suite::Prob => prob(&mut rng),
        }?;
        if let Some(dump) = outcome {
            mismatches.push((i, dump));
        }
    }
    Ok(Report { instances, mismatches })
}

pub fn render(suite: Suite, seed: u64, report: &Report) -> String {
    let mut text = format!(
        "{}: {} instances, {} mismatches (seed {seed})\n",
        suite.name(),
        report.instances,
        report.mismatches.len()
    );
    for (i, dump) in &report.mismatches {
        text.push_str(&format!("instance {i} (seed {seed}, stream {i}): {dump}\n"));
    }
    text
}

fn unit_costs(rng: &mut RngHandle, types: usize) -> Vec<f64> {
    let mut k = vec![rng.random_range(0.05..1.0)];
    for _ in 1..types {
        let next = k.last().unwrap() + rng.random_range(0.05..1.5);
        k.push(next);
    }
    k.reverse();
    k
}

fn probabilities(rng: &mut RngHandle, types: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..types).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let mut q: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let head: f64 = q[..types - 1].iter().sum();
    q[types - 1] = 1.0 - head;
    q
}

fn capacity(rng: &mut RngHandle) -> f64 {
    if rng.random_bool(0.5) {
        f64::INFINITY
    } else {
        rng.random_range(0.02..2.0)
    }
}

fn acq_ne(rng: &mut RngHandle) -> Check {
    let n = rng.random_range(2..=6usize);
    let costs: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
    let n0 = rng.random_range(1..n as u64);
    let v = rng.random_range(0.0..20.0);
    let model = if rng.random_bool(0.5) { PayoffModel::A } else { PayoffModel::B };
    let known = KnownCosts::new(costs.clone())?;
    let s = AcquisitionScenario::new(n as u64, n0, v, model, Information::Complete(known.clone()))?;
    let eq = solve_acq_complete(&s)?;
    let minimal = minimal_successful_reward(&known, n0, v, model)?;
    let confirmed = match &eq.stage2 {
        StageTwo::PureSet(set) => enumerate_pure_ne(&known, eq.reward, n0, model)?
            .iter()
            .any(|p| p.collaborators() == *set),
        _ => minimal.is_none(),
    };
    Ok((eq.reward != minimal.unwrap_or(0.0) || !confirmed).then(|| {
        format!("costs {costs:?} n0 {n0} V {v} model {model:?}: solver R* {} {:?}, oracle {minimal:?}", eq.reward, eq.stage2)
    }))
}

fn contract_feas(rng: &mut RngHandle) -> Check {
    let types = rng.random_range(1..=5);
    let k = unit_costs(rng, types);
    let items: Vec<ContractItem> = if rng.random_bool(0.5) {
        let mut tasks: Vec<f64> = (0..types).map(|_| rng.random_range(0.0..3.0)).collect();
        tasks.sort_by(f64::total_cmp);
        let mut prev = ContractItem::NULL;
        tasks
            .iter()
            .enumerate()
            .map(|(i, &task)| {
                let dt = task - prev.task;
                let lo = prev.reward + k[i] * dt;
                let hi = if i == 0 { lo + 0.5 } else { prev.reward + k[i - 1] * dt };
                let w = rng.random_range(-0.1..1.1);
                prev = ContractItem { reward: (lo + w * (hi - lo)).max(0.0), task };
                prev
            })
            .collect()
    } else {
        (0..types)
            .map(|_| ContractItem { reward: rng.random_range(0.0..3.0), task: rng.random_range(0.0..3.0) })
            .collect()
    };
    let contract = Contract::new(items)?;
    let verdict = check_feasibility(&contract, &k)?.feasible();
    let violations = enumerate_ir_ic(&contract, &k)?;
    Ok((verdict != violations.is_empty()).then(|| {
        format!("K {k:?} contract {:?}: neighbour test {verdict}, enumeration {violations:?}", contract.items())
    }))
}

fn contract_grid(rng: &mut RngHandle) -> Check {
    let types = 2;
    let k = unit_costs(rng, types);
    let theta: Vec<f64> = (0..types).map(|_| rng.random_range(0.3..8.0)).collect();
    let caps: Vec<f64> = (0..types).map(|_| capacity(rng)).collect();
    let total = rng.random_range(1..=10u64);
    let q = probabilities(rng, types);
    let profile = UserTypeProfile::new(
        k.clone(),
        caps.clone(),
        theta.clone(),
        Population::Probabilistic { total, probabilities: q.clone() },
    )?;
    let solution = solve_incomplete(&profile)?;
    let grid = grid_contract_oracle(&profile, GridOracleConfig::default())?;
    if (solution.expected_profit - grid.expected_profit).abs() > 1e-3 {
        return Ok(Some(format!(
            "K {k:?} theta {theta:?} t_bar {caps:?} N {total} q {q:?}: solver {} grid {}",
            solution.expected_profit, grid.expected_profit
        )));
    }
    let counts: Vec<u64> = (0..types).map(|_| rng.random_range(0..30)).collect();
    let complete = solve_complete(&profile.with_counts(counts.clone().into())?)?;
    let oracle: f64 = (0..types).map(|i| complete_type_oracle(theta[i], k[i], counts[i], caps[i]).1).sum();
    Ok(((complete.expected_profit - oracle).abs() > 1e-6 * oracle.abs().max(1.0)).then(|| {
        format!("K {k:?} theta {theta:?} t_bar {caps:?} counts {counts:?}: solver {} grid {oracle}", complete.expected_profit)
    }))
}

fn prob(rng: &mut RngHandle) -> Check {
    let n = rng.random_range(0..=200u64);
    let p = rng.random_range(0.0..=1.0);
    let spec = BinomialSpec::new(n, p)?;
    let masses = spec.pmf_vec();
    let total: f64 = masses.iter().sum();
    let t = rng.random_range(0..=n + 1);
    let head: f64 = masses[..t as usize].iter().sum();
    let complement = binom_tail(&spec, t) + head;
    if (total - 1.0).abs() > 1e-10 || (complement - 1.0).abs() > 1e-10 {
        return Ok(Some(format!("B({n}, {p}): mass {total}, tail + head at {t} = {complement}")));
    }
    let parts = rng.random_range(2..=4usize);
    let users = rng.random_range(0..=10u64);
    let q = probabilities(rng, parts);
    let mut marginal = vec![0.0; users as usize + 1];
    for c in multinomial_compositions(users, parts)? {
        marginal[c.as_slice()[0] as usize] += multinomial_pmf(c.as_slice(), &q)?;
    }
    let first = BinomialSpec::new(users, q[0])?;
    for (k, m) in marginal.iter().enumerate() {
        let b = binom_pmf(&first, k as u64)?;
        if (m - b).abs() > 1e-10 {
            return Ok(Some(format!("multinomial({users}, {q:?}) marginal at {k}: {m} vs binomial {b}")));
        }
    }
    Ok(None)
}
