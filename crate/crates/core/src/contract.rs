//! Screening contracts for distributed computing.
//!
//! Users come in `I` types ordered by decreasing unit cost `K_1 > ... > K_I`.
//! The master offers one `(reward, task)` item per type and values a type's
//! total work with `theta_i * ln(1 + n_i t_i)`. Under complete information
//! each type gets its own zero-rent item; under incomplete information only
//! the type distribution `q` is known and the menu has to be self-selecting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{
    composition_count, multinomial_compositions, multinomial_pmf, validate_probabilities, BinomialSpec,
    NeumaierSum, TypeCountVector,
};
use crate::roots::bisect;

/// Slack allowed when comparing rewards and payoffs in feasibility checks.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;
pub const KKT_TOLERANCE: f64 = 1e-8;
/// Largest population accepted by the composition-enumeration path.
pub const MULTINOMIAL_MAX_USERS: u64 = 30;
const FALLBACK_ITERATIONS: usize = 20_000;

/// Tolerance scaled to the magnitude of the compared values.
pub fn scaled_tolerance(a: f64, b: f64) -> f64 {
    FEASIBILITY_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    /// Realised count of each type.
    Counts(TypeCountVector),
    /// `N` users, each of type `i` with probability `q_i`.
    Probabilistic { total: u64, probabilities: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTypeProfile {
    unit_costs: Vec<f64>,
    capacities: Vec<f64>,
    preferences: Vec<f64>,
    population: Population,
}

impl UserTypeProfile {
    /// `capacities` may contain `f64::INFINITY` for uncapped types.
    pub fn new(unit_costs: Vec<f64>, capacities: Vec<f64>, preferences: Vec<f64>, population: Population) -> Result<Self> {
        let types = unit_costs.len();
        if types == 0 {
            return Err(Error::domain("a profile needs at least one type"));
        }
        if capacities.len() != types || preferences.len() != types {
            return Err(Error::domain(format!(
                "{types} unit costs, {} capacities, {} preferences",
                capacities.len(),
                preferences.len()
            )));
        }
        if let Some(k) = unit_costs.iter().find(|k| !k.is_finite() || **k <= 0.0) {
            return Err(Error::domain(format!("unit cost {k} must be positive and finite")));
        }
        for (i, w) in unit_costs.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(Error::domain(format!(
                    "types {} and {} share unit cost {}; merge them into one type",
                    i + 1,
                    i + 2,
                    w[0]
                )));
            }
            if w[0] < w[1] {
                return Err(Error::domain(format!(
                    "unit costs must be strictly decreasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(c) = capacities.iter().find(|c| c.is_nan() || **c <= 0.0) {
            return Err(Error::domain(format!("capacity {c} must be positive")));
        }
        if let Some(t) = preferences.iter().find(|t| !t.is_finite() || **t <= 0.0) {
            return Err(Error::domain(format!("preference weight {t} must be positive and finite")));
        }
        match &population {
            Population::Counts(c) if c.len() != types => {
                return Err(Error::domain(format!("{} counts for {types} types", c.len())));
            }
            Population::Probabilistic { probabilities, .. } => {
                if probabilities.len() != types {
                    return Err(Error::domain(format!(
                        "{} probabilities for {types} types",
                        probabilities.len()
                    )));
                }
                validate_probabilities(probabilities)?;
            }
            _ => {}
        }
        Ok(Self {
            unit_costs,
            capacities,
            preferences,
            population,
        })
    }

    pub fn uncapped(unit_costs: Vec<f64>, preferences: Vec<f64>, population: Population) -> Result<Self> {
        let caps = vec![f64::INFINITY; unit_costs.len()];
        Self::new(unit_costs, caps, preferences, population)
    }

    pub fn types(&self) -> usize {
        self.unit_costs.len()
    }

    pub fn unit_costs(&self) -> &[f64] {
        &self.unit_costs
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn preferences(&self) -> &[f64] {
        &self.preferences
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn counts(&self) -> Result<&TypeCountVector> {
        match &self.population {
            Population::Counts(c) => Ok(c),
            Population::Probabilistic { .. } => Err(Error::domain("operation needs realised type counts")),
        }
    }

    /// `(N, q)` of a probabilistic population.
    pub fn distribution(&self) -> Result<(u64, &[f64])> {
        match &self.population {
            Population::Probabilistic { total, probabilities } => Ok((*total, probabilities)),
            Population::Counts(_) => Err(Error::domain("operation needs type probabilities")),
        }
    }

    pub fn with_population(&self, population: Population) -> Result<Self> {
        Self::new(
            self.unit_costs.clone(),
            self.capacities.clone(),
            self.preferences.clone(),
            population,
        )
    }

    pub fn with_counts(&self, counts: TypeCountVector) -> Result<Self> {
        self.with_population(Population::Counts(counts))
    }

    pub fn with_preferences(&self, preferences: Vec<f64>) -> Result<Self> {
        Self::new(
            self.unit_costs.clone(),
            self.capacities.clone(),
            preferences,
            self.population.clone(),
        )
    }

    pub fn with_unit_costs(&self, unit_costs: Vec<f64>) -> Result<Self> {
        Self::new(
            unit_costs,
            self.capacities.clone(),
            self.preferences.clone(),
            self.population.clone(),
        )
    }

    /// `min_{j >= i} t_bar_j`: the largest task type `i` can get in any
    /// contract with nondecreasing tasks.
    pub fn effective_capacities(&self) -> Vec<f64> {
        let mut out = self.capacities.clone();
        for i in (0..out.len().saturating_sub(1)).rev() {
            out[i] = out[i].min(out[i + 1]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractItem {
    pub reward: f64,
    pub task: f64,
}

impl ContractItem {
    pub const NULL: ContractItem = ContractItem { reward: 0.0, task: 0.0 };

    /// Payoff of a user with unit cost `unit_cost` choosing this item.
    pub fn payoff(&self, unit_cost: f64) -> f64 {
        self.reward - unit_cost * self.task
    }
}

/// One item per type, in type order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ContractItem>", into = "Vec<ContractItem>")]
pub struct Contract {
    items: Vec<ContractItem>,
}

impl Contract {
    pub fn new(items: Vec<ContractItem>) -> Result<Self> {
        if let Some(it) = items
            .iter()
            .find(|it| !(it.reward.is_finite() && it.task.is_finite() && it.reward >= 0.0 && it.task >= 0.0))
        {
            return Err(Error::domain(format!(
                "contract item (r = {}, t = {}) must be finite and nonnegative",
                it.reward, it.task
            )));
        }
        Ok(Self { items })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(reward, task)| ContractItem { reward, task }).collect())
    }

    pub fn null(types: usize) -> Self {
        Self {
            items: vec![ContractItem::NULL; types],
        }
    }

    pub fn items(&self) -> &[ContractItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.reward).collect()
    }

    pub fn tasks(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.task).collect()
    }

    /// `r_i - K_i t_i` for every type.
    pub fn payoffs(&self, unit_costs: &[f64]) -> Vec<f64> {
        self.items.iter().zip(unit_costs).map(|(it, &k)| it.payoff(k)).collect()
    }
}

impl TryFrom<Vec<ContractItem>> for Contract {
    type Error = Error;

    fn try_from(items: Vec<ContractItem>) -> Result<Self> {
        Contract::new(items)
    }
}

impl From<Contract> for Vec<ContractItem> {
    fn from(c: Contract) -> Self {
        c.items
    }
}

/// A failed condition of the three-part feasibility characterisation.
/// Type indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Violation {
    /// The lowest type's payoff is negative.
    LowestTypeParticipation { payoff: f64 },
    /// Reward or task drops from `type_index - 1` to `type_index`.
    Monotonicity { type_index: usize, rewards: (f64, f64), tasks: (f64, f64) },
    /// `r_i` lies outside `[r_{i-1} + K_i dt, r_{i-1} + K_{i-1} dt]`.
    NeighborBounds { type_index: usize, reward: f64, lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Feasibility (participation plus self-selection) via the neighbor
/// characterisation: lowest type participates, rewards and tasks are
/// nondecreasing, and every reward increment lies between the two adjacent
/// unit costs times the task increment.
pub fn check_feasibility(contract: &Contract, unit_costs: &[f64]) -> Result<FeasibilityReport> {
    if contract.len() != unit_costs.len() || contract.is_empty() {
        return Err(Error::domain(format!(
            "contract has {} items for {} types",
            contract.len(),
            unit_costs.len()
        )));
    }
    let items = contract.items();
    let mut violations = Vec::new();
    let first = items[0].payoff(unit_costs[0]);
    if first < -scaled_tolerance(items[0].reward, unit_costs[0] * items[0].task) {
        violations.push(Violation::LowestTypeParticipation { payoff: first });
    }
    for i in 1..items.len() {
        let (prev, cur) = (items[i - 1], items[i]);
        if cur.reward < prev.reward - scaled_tolerance(cur.reward, prev.reward)
            || cur.task < prev.task - scaled_tolerance(cur.task, prev.task)
        {
            violations.push(Violation::Monotonicity {
                type_index: i,
                rewards: (prev.reward, cur.reward),
                tasks: (prev.task, cur.task),
            });
        }
        let dt = cur.task - prev.task;
        let lower = prev.reward + unit_costs[i] * dt;
        let upper = prev.reward + unit_costs[i - 1] * dt;
        if cur.reward < lower - scaled_tolerance(cur.reward, lower)
            || cur.reward > upper + scaled_tolerance(cur.reward, upper)
        {
            violations.push(Violation::NeighborBounds {
                type_index: i,
                reward: cur.reward,
                lower,
                upper,
            });
        }
    }
    Ok(FeasibilityReport { violations })
}

/// Cheapest rewards implementing nondecreasing `tasks`:
/// `r_1 = K_1 t_1`, `r_i = r_{i-1} + K_i (t_i - t_{i-1})`.
pub fn optimal_rewards_given_tasks(tasks: &[f64], unit_costs: &[f64]) -> Result<Vec<f64>> {
    if tasks.len() != unit_costs.len() {
        return Err(Error::domain(format!(
            "{} tasks for {} types",
            tasks.len(),
            unit_costs.len()
        )));
    }
    if let Some(t) = tasks.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(Error::domain(format!("task {t} must be finite and nonnegative")));
    }
    if let Some(i) = tasks.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::domain(format!(
            "tasks must be nondecreasing in type; t[{i}] = {} > t[{}] = {}",
            tasks[i],
            i + 1,
            tasks[i + 1]
        )));
    }
    let mut rewards = Vec::with_capacity(tasks.len());
    let mut prev_t = 0.0;
    let mut prev_r = 0.0;
    for (&t, &k) in tasks.iter().zip(unit_costs) {
        prev_r += k * (t - prev_t);
        prev_t = t;
        rewards.push(prev_r);
    }
    Ok(rewards)
}

/// Profit for one realisation of type counts:
/// `sum_i theta_i ln(1 + n_i t_i) - n_i r_i`.
pub fn realized_profit(contract: &Contract, counts: &TypeCountVector, preferences: &[f64]) -> Result<f64> {
    if counts.len() != contract.len() || preferences.len() != contract.len() {
        return Err(Error::domain(format!(
            "{} counts and {} preferences for {} items",
            counts.len(),
            preferences.len(),
            contract.len()
        )));
    }
    let mut sum = NeumaierSum::new();
    for ((it, &n), &theta) in contract.items().iter().zip(counts.as_slice()).zip(preferences) {
        let n = n as f64;
        sum.add(theta * (n * it.task).ln_1p());
        sum.add(-n * it.reward);
    }
    Ok(sum.value())
}

/// `sum_i n_i (r_i - K_i t_i)`.
pub fn aggregate_user_payoff(contract: &Contract, counts: &TypeCountVector, unit_costs: &[f64]) -> Result<f64> {
    if counts.len() != contract.len() || unit_costs.len() != contract.len() {
        return Err(Error::domain("counts, unit costs and contract differ in length"));
    }
    Ok(contract
        .payoffs(unit_costs)
        .iter()
        .zip(counts.as_slice())
        .map(|(u, &n)| n as f64 * u)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfitMethod {
    /// Sum of per-type binomial expectations.
    #[default]
    Marginal,
    /// Full enumeration of type compositions.
    Multinomial,
}

/// Expected profit over the type distribution of a probabilistic profile.
pub fn expected_profit(contract: &Contract, profile: &UserTypeProfile, method: ProfitMethod) -> Result<f64> {
    let (total, q) = profile.distribution()?;
    if contract.len() != q.len() {
        return Err(Error::domain(format!(
            "contract has {} items for {} types",
            contract.len(),
            q.len()
        )));
    }
    let theta = profile.preferences();
    match method {
        ProfitMethod::Marginal => {
            let mut sum = NeumaierSum::new();
            for ((it, &qi), &th) in contract.items().iter().zip(q).zip(theta) {
                let masses = BinomialSpec::new(total, qi)?.pmf_vec();
                let gain = crate::prob::expect_with_masses(&masses, |n| th * (n as f64 * it.task).ln_1p())?;
                sum.add(gain);
                sum.add(-(total as f64) * qi * it.reward);
            }
            Ok(sum.value())
        }
        ProfitMethod::Multinomial => {
            if total > MULTINOMIAL_MAX_USERS {
                return Err(Error::domain(format!(
                    "composition enumeration limited to N <= {MULTINOMIAL_MAX_USERS}, got {total}"
                )));
            }
            if composition_count(total, q.len()) > 50_000_000 {
                return Err(Error::domain("too many type compositions to enumerate"));
            }
            let mut sum = NeumaierSum::new();
            for counts in multinomial_compositions(total, q.len())? {
                let p = multinomial_pmf(counts.as_slice(), q)?;
                if p > 0.0 {
                    sum.add(p * realized_profit(contract, &counts, theta)?);
                }
            }
            Ok(sum.value())
        }
    }
}

/// Lagrange multipliers of the incomplete-information program and the
/// largest violation of its optimality conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktDiagnostics {
    /// Derivative of expected profit with respect to each task.
    pub gradient: Vec<f64>,
    /// Multipliers of `t_i <= t_{i+1}`.
    pub ordering: Vec<f64>,
    /// Multipliers of `t_i <= t_bar_i`.
    pub capacity: Vec<f64>,
    /// Multiplier of `t_1 >= 0`.
    pub nonnegativity: f64,
    pub stationarity_residual: f64,
    pub dual_residual: f64,
    pub slackness_residual: f64,
    pub used_fallback: bool,
}

impl KktDiagnostics {
    pub fn max_residual(&self) -> f64 {
        self.stationarity_residual
            .max(self.dual_residual)
            .max(self.slackness_residual)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractSolution {
    pub contract: Contract,
    /// Types with a positive task (zero-based).
    pub involved: Vec<usize>,
    /// Types passing the derivative-at-zero involvement test (zero-based).
    /// Pooling can make `involved` differ from this set.
    pub involvement_test: Vec<usize>,
    pub expected_profit: f64,
    pub per_type_payoff: Vec<f64>,
    pub diagnostics: Option<KktDiagnostics>,
}

/// Types worth hiring under complete information: `theta_i > K_i`.
pub fn complete_involvement(profile: &UserTypeProfile) -> Vec<usize> {
    profile
        .preferences()
        .iter()
        .zip(profile.unit_costs())
        .enumerate()
        .filter(|(_, (t, k))| t > k)
        .map(|(i, _)| i)
        .collect()
}

/// Closed-form task for one type under complete information:
/// `min((theta - K) / (K n), t_bar)` when `theta > K` and `n > 0`.
pub fn complete_task(preference: f64, unit_cost: f64, count: u64, capacity: f64) -> f64 {
    if preference <= unit_cost || count == 0 {
        return 0.0;
    }
    ((preference - unit_cost) / (unit_cost * count as f64)).min(capacity)
}

/// Complete information: each type gets `(K_i t_i, t_i)` with the closed-form
/// task, so every payoff is zero. Types with zero users get the null item.
pub fn solve_complete(profile: &UserTypeProfile) -> Result<ContractSolution> {
    let counts = profile.counts()?;
    let items: Vec<ContractItem> = (0..profile.types())
        .map(|i| {
            let k = profile.unit_costs()[i];
            let t = complete_task(profile.preferences()[i], k, counts.0[i], profile.capacities()[i]);
            ContractItem { reward: k * t, task: t }
        })
        .collect();
    let contract = Contract::new(items)?;
    let expected_profit = realized_profit(&contract, counts, profile.preferences())?;
    let involved = complete_involvement(profile);
    Ok(ContractSolution {
        per_type_payoff: contract.payoffs(profile.unit_costs()),
        involvement_test: involved.clone(),
        involved,
        expected_profit,
        contract,
        diagnostics: None,
    })
}

/// Per-type derivatives of expected profit with telescoped rewards.
struct Gradient {
    masses: Vec<Vec<f64>>,
    preferences: Vec<f64>,
    /// Marginal reward cost of raising `t_i`.
    slope: Vec<f64>,
}

impl Gradient {
    fn new(profile: &UserTypeProfile) -> Result<Self> {
        let (total, q) = profile.distribution()?;
        let k = profile.unit_costs();
        let n = total as f64;
        let types = q.len();
        let mut slope = vec![0.0; types];
        let mut upper_mass = 0.0;
        for i in (0..types).rev() {
            slope[i] = n * q[i] * k[i];
            if i + 1 < types {
                slope[i] += (k[i] - k[i + 1]) * n * upper_mass;
            }
            upper_mass += q[i];
        }
        let masses = q
            .iter()
            .map(|&qi| BinomialSpec::new(total, qi).map(|b| b.pmf_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            masses,
            preferences: profile.preferences().to_vec(),
            slope,
        })
    }

    fn at(&self, i: usize, t: f64) -> f64 {
        let theta = self.preferences[i];
        let mut sum = NeumaierSum::new();
        for (n, &m) in self.masses[i].iter().enumerate().skip(1) {
            if m > 0.0 {
                let n = n as f64;
                sum.add(m * n * theta / (1.0 + n * t));
            }
        }
        sum.value() - self.slope[i]
    }

    fn block(&self, range: std::ops::Range<usize>, t: f64) -> f64 {
        range.map(|i| self.at(i, t)).sum()
    }

    /// Maximiser of the pooled objective of `range` over `[0, cap]`.
    fn block_optimum(&self, range: std::ops::Range<usize>, cap: f64) -> Result<f64> {
        let h = |t: f64| Ok(self.block(range.clone(), t));
        if h(0.0)? <= 0.0 {
            return Ok(0.0);
        }
        let hi = if cap.is_finite() {
            if h(cap)? >= 0.0 {
                return Ok(cap);
            }
            cap
        } else {
            let mut hi = 1.0;
            while h(hi)? >= 0.0 {
                hi *= 2.0;
                if !hi.is_finite() || hi > 1e150 {
                    return Err(Error::numerical("pooled derivative stays positive; no finite task"));
                }
            }
            hi
        };
        bisect(h, 0.0, hi)
    }
}

/// Types with a positive derivative at zero task:
/// `N q_i (theta_i - K_i) - (K_i - K_{i+1}) N sum_{j>i} q_j > 0`.
pub fn involvement_test(profile: &UserTypeProfile) -> Result<Vec<usize>> {
    let (total, q) = profile.distribution()?;
    let g = Gradient::new(profile)?;
    Ok((0..q.len())
        .filter(|&i| total as f64 * q[i] * profile.preferences()[i] - g.slope[i] > 0.0)
        .collect())
}

/// Pool-adjacent-violators over concave per-type objectives with upper
/// bounds `caps` (nondecreasing).
fn pool_adjacent(g: &Gradient, caps: &[f64]) -> Result<Vec<f64>> {
    // (start, end, value)
    let mut blocks: Vec<(usize, usize, f64)> = Vec::with_capacity(caps.len());
    for i in 0..caps.len() {
        let mut block = (i, i + 1, g.block_optimum(i..i + 1, caps[i])?);
        while let Some(&(s, _, v)) = blocks.last() {
            if v <= block.2 {
                break;
            }
            blocks.pop();
            block = (s, block.1, g.block_optimum(s..block.1, caps[s])?);
        }
        blocks.push(block);
    }
    let mut tasks = vec![0.0; caps.len()];
    for (s, e, v) in blocks {
        tasks[s..e].fill(v);
    }
    Ok(tasks)
}

/// Multipliers recovered from the structure of `tasks` (runs of equal
/// values) and the resulting residuals.
fn kkt_diagnostics(g: &Gradient, tasks: &[f64], capacities: &[f64], used_fallback: bool) -> KktDiagnostics {
    let types = tasks.len();
    let gradient: Vec<f64> = (0..types).map(|i| g.at(i, tasks[i])).collect();
    let mut ordering = vec![0.0; types.saturating_sub(1)];
    let mut capacity = vec![0.0; types];
    let mut nonnegativity = 0.0;
    let mut stationarity: f64 = 0.0;

    let mut start = 0;
    while start < types {
        let mut end = start + 1;
        while end < types && tasks[end] == tasks[start] {
            end += 1;
        }
        let level = tasks[start];
        let total: f64 = gradient[start..end].iter().sum();
        if let Some(k) = (start..end).rev().find(|&i| level >= capacities[i]) {
            capacity[k] = total;
        } else if start == 0 && level == 0.0 {
            nonnegativity = -total;
        } else {
            stationarity = stationarity.max(total.abs());
        }
        let mut lambda = if start == 0 { nonnegativity } else { 0.0 };
        for i in start..end - 1 {
            lambda += gradient[i] - capacity[i];
            ordering[i] = lambda;
        }
        start = end;
    }

    let mut dual: f64 = 0.0;
    for &m in ordering.iter().chain(&capacity).chain(std::iter::once(&nonnegativity)) {
        if -m > dual {
            dual = -m;
        }
    }
    let mut slackness: f64 = 0.0;
    for i in 0..types {
        if i + 1 < types {
            slackness = slackness.max((ordering[i] * (tasks[i + 1] - tasks[i])).abs());
        }
        if capacities[i].is_finite() {
            slackness = slackness.max((capacity[i] * (capacities[i] - tasks[i])).abs());
        } else {
            slackness = slackness.max(capacity[i].abs());
        }
    }
    slackness = slackness.max((nonnegativity * tasks[0]).abs());

    KktDiagnostics {
        gradient,
        ordering,
        capacity,
        nonnegativity,
        stationarity_residual: stationarity,
        dual_residual: dual,
        slackness_residual: slackness,
        used_fallback,
    }
}

/// Euclidean projection onto `{0 <= t_1 <= ... <= t_I, t_i <= caps_i}` for
/// nondecreasing `caps`.
fn project_monotone(y: &[f64], caps: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(usize, usize, f64)> = Vec::with_capacity(y.len());
    for (i, &v) in y.iter().enumerate() {
        let mut block = (i, i + 1, v);
        while let Some(&(s, e, m)) = blocks.last() {
            if m <= block.2 {
                break;
            }
            blocks.pop();
            let (n1, n2) = ((e - s) as f64, (block.1 - block.0) as f64);
            block = (s, block.1, (m * n1 + block.2 * n2) / (n1 + n2));
        }
        blocks.push(block);
    }
    let mut out = vec![0.0; y.len()];
    for (s, e, m) in blocks {
        out[s..e].fill(m);
    }
    out.iter().zip(caps).map(|(&v, &c)| v.clamp(0.0, c)).collect()
}

/// Projected gradient ascent, then each run of equal tasks is re-solved
/// exactly.
fn projected_gradient(g: &Gradient, caps: &[f64], start: &[f64]) -> Result<Vec<f64>> {
    let types = caps.len();
    let mut t = start.to_vec();
    let curvature: f64 = (0..types)
        .map(|i| {
            g.masses[i]
                .iter()
                .enumerate()
                .map(|(n, m)| m * (n * n) as f64 * g.preferences[i])
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let step = 1.0 / curvature.max(1e-12);
    for _ in 0..FALLBACK_ITERATIONS {
        let y: Vec<f64> = (0..types).map(|i| t[i] + step * g.at(i, t[i])).collect();
        let next = project_monotone(&y, caps);
        let moved = next.iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        t = next;
        if moved < 1e-14 {
            break;
        }
    }
    let mut start = 0;
    while start < types {
        let mut end = start + 1;
        while end < types && (t[end] - t[start]).abs() <= 1e-7 {
            end += 1;
        }
        let v = g.block_optimum(start..end, caps[start])?;
        t[start..end].fill(v);
        start = end;
    }
    Ok(t)
}

/// Incomplete information: maximise expected profit over nondecreasing
/// tasks within capacities, rewards telescoped from the tasks.
pub fn solve_incomplete(profile: &UserTypeProfile) -> Result<ContractSolution> {
    let g = Gradient::new(profile)?;
    let caps = profile.effective_capacities();
    let capacities = profile.capacities();

    let mut tasks = pool_adjacent(&g, &caps)?;
    let mut diag = kkt_diagnostics(&g, &tasks, capacities, false);
    if diag.max_residual() > KKT_TOLERANCE {
        tasks = projected_gradient(&g, &caps, &tasks)?;
        diag = kkt_diagnostics(&g, &tasks, capacities, true);
        if diag.max_residual() > KKT_TOLERANCE {
            return Err(Error::numerical(format!(
                "optimality conditions violated after fallback: stationarity {}, dual {}, slackness {}; tasks {:?}",
                diag.stationarity_residual, diag.dual_residual, diag.slackness_residual, tasks
            )));
        }
    }

    let rewards = optimal_rewards_given_tasks(&tasks, profile.unit_costs())?;
    let contract = Contract::new(
        rewards
            .iter()
            .zip(&tasks)
            .map(|(&reward, &task)| ContractItem { reward, task })
            .collect(),
    )?;
    Ok(ContractSolution {
        expected_profit: expected_profit(&contract, profile, ProfitMethod::Marginal)?,
        per_type_payoff: contract.payoffs(profile.unit_costs()),
        involved: (0..tasks.len()).filter(|&i| tasks[i] > 0.0).collect(),
        involvement_test: involvement_test(profile)?,
        contract,
        diagnostics: Some(diag),
    })
}
