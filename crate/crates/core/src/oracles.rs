//! Brute-force verifiers.
//!
//! Nothing here calls the solver kernels: pmfs, compositions, rewards and
//! expectations are recomputed directly, so agreement between an oracle and
//! a solver is evidence rather than a tautology. Instance sizes are guarded
//! and exceeding a guard is an error.

use serde::{Deserialize, Serialize};

use crate::acquisition::PayoffModel;
use crate::contract::{Contract, UserTypeProfile};
use crate::cost::KnownCosts;
use crate::error::{Error, Result};

pub const MAX_PROFILE_USERS: usize = 20;
pub const MAX_CONSTRAINT_TYPES: usize = 12;
pub const MAX_GRID_TYPES: usize = 3;
pub const MAX_GRID_USERS: u64 = 15;
pub const MAX_GRID_RESOLUTION: usize = 50;

fn tolerance(a: f64, b: f64) -> f64 {
    1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Collaborate (`true`) or decline for every user.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub decisions: Vec<bool>,
}

impl StrategyProfile {
    fn from_mask(mask: u32, users: usize) -> Self {
        Self {
            decisions: (0..users).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn collaborators(&self) -> Vec<usize> {
        (0..self.decisions.len()).filter(|&i| self.decisions[i]).collect()
    }

    pub fn count(&self) -> usize {
        self.decisions.iter().filter(|&&d| d).count()
    }
}

fn collaborator_payoff(model: PayoffModel, reward: f64, count: usize, threshold: u64, cost: f64) -> f64 {
    let success = count as u64 >= threshold;
    let share = if success { reward / count as f64 } else { 0.0 };
    match model {
        PayoffModel::A if success => share - cost,
        PayoffModel::A => 0.0,
        PayoffModel::B => share - cost,
    }
}

/// Every pure Nash equilibrium of the user game at reward `R`, by checking
/// all `2^N` profiles for a profitable unilateral deviation.
pub fn enumerate_pure_ne(costs: &KnownCosts, reward: f64, threshold: u64, model: PayoffModel) -> Result<Vec<StrategyProfile>> {
    let c = costs.as_slice();
    let users = c.len();
    if users > MAX_PROFILE_USERS {
        return Err(Error::domain(format!(
            "profile enumeration limited to N <= {MAX_PROFILE_USERS}, got {users}"
        )));
    }
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << users) {
        let n = mask.count_ones() as usize;
        let stable = (0..users).all(|i| {
            let (stay, switch) = if mask >> i & 1 == 1 {
                (collaborator_payoff(model, reward, n, threshold, c[i]), 0.0)
            } else {
                (0.0, collaborator_payoff(model, reward, n + 1, threshold, c[i]))
            };
            switch <= stay + tolerance(stay, switch)
        });
        if stable {
            out.push(StrategyProfile::from_mask(mask, users));
        }
    }
    Ok(out)
}

/// Smallest reward `R <= V` admitting a pure equilibrium with at least `n0`
/// collaborators. Candidates are `n * C_k`, the only values where the set of
/// such equilibria can change.
pub fn minimal_successful_reward(costs: &KnownCosts, threshold: u64, revenue: f64, model: PayoffModel) -> Result<Option<f64>> {
    let c = costs.as_slice();
    let mut candidates: Vec<f64> = (threshold as usize..=c.len())
        .flat_map(|n| c.iter().map(move |&ck| n as f64 * ck))
        .filter(|&r| r <= revenue)
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    for r in candidates {
        let ne = enumerate_pure_ne(costs, r, threshold, model)?;
        if ne.iter().any(|p| p.count() as u64 >= threshold) {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

/// A literal participation or self-selection constraint that fails.
/// Type indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum ConstraintViolation {
    Participation { type_index: usize, payoff: f64 },
    SelfSelection { type_index: usize, preferred_item: usize, own: f64, other: f64 },
}

/// Evaluates all `I` participation and `I (I - 1)` self-selection
/// constraints directly.
pub fn enumerate_ir_ic(contract: &Contract, unit_costs: &[f64]) -> Result<Vec<ConstraintViolation>> {
    let items = contract.items();
    if items.len() != unit_costs.len() {
        return Err(Error::domain("contract and unit costs differ in length"));
    }
    if items.len() > MAX_CONSTRAINT_TYPES {
        return Err(Error::domain(format!(
            "constraint enumeration limited to I <= {MAX_CONSTRAINT_TYPES}"
        )));
    }
    let mut out = Vec::new();
    for (i, &k) in unit_costs.iter().enumerate() {
        let own = items[i].reward - k * items[i].task;
        if own < -tolerance(items[i].reward, k * items[i].task) {
            out.push(ConstraintViolation::Participation { type_index: i, payoff: own });
        }
        for (j, it) in items.iter().enumerate() {
            if j == i {
                continue;
            }
            let other = it.reward - k * it.task;
            if other > own + tolerance(own, other) {
                out.push(ConstraintViolation::SelfSelection {
                    type_index: i,
                    preferred_item: j,
                    own,
                    other,
                });
            }
        }
    }
    Ok(out)
}

/// Grid settings for [`grid_contract_oracle`]. After the full search, each
/// refinement round re-grids a window of two steps either side of the
/// incumbent at the same resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOracleConfig {
    pub resolution: usize,
    pub refinement_rounds: usize,
}

impl Default for GridOracleConfig {
    fn default() -> Self {
        Self {
            resolution: MAX_GRID_RESOLUTION,
            refinement_rounds: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub tasks: Vec<f64>,
    pub rewards: Vec<f64>,
    pub expected_profit: f64,
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Expected profit of nondecreasing `tasks` with telescoped rewards, by
/// summing over every type composition.
struct CompositionProfit {
    weights: Vec<(f64, Vec<u64>)>,
    unit_costs: Vec<f64>,
    preferences: Vec<f64>,
}

impl CompositionProfit {
    fn new(profile: &UserTypeProfile) -> Result<Self> {
        let (total, q) = profile.distribution()?;
        let weights = compositions(total, q.len())
            .into_iter()
            .map(|c| {
                let mut p = factorial(total);
                for (&n, &qi) in c.iter().zip(q) {
                    p *= qi.powi(n as i32) / factorial(n);
                }
                (p, c)
            })
            .filter(|(p, _)| *p > 0.0)
            .collect();
        Ok(Self {
            weights,
            unit_costs: profile.unit_costs().to_vec(),
            preferences: profile.preferences().to_vec(),
        })
    }

    fn rewards(&self, tasks: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(tasks.len());
        for i in 0..tasks.len() {
            let below = if i == 0 { (0.0, 0.0) } else { (out[i - 1], tasks[i - 1]) };
            out.push(below.0 + self.unit_costs[i] * (tasks[i] - below.1));
        }
        out
    }

    fn profit(&self, tasks: &[f64]) -> f64 {
        let rewards = self.rewards(tasks);
        self.weights
            .iter()
            .map(|(p, counts)| {
                let realized: f64 = counts
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| {
                        let n = n as f64;
                        self.preferences[i] * (1.0 + n * tasks[i]).ln() - n * rewards[i]
                    })
                    .sum();
                p * realized
            })
            .sum()
    }
}

/// Grid search for the incomplete-information contract: every
/// nondecreasing task vector on the grid within capacities, rewards
/// telescoped, profit by composition enumeration.
pub fn grid_contract_oracle(profile: &UserTypeProfile, config: GridOracleConfig) -> Result<GridOptimum> {
    let (total, q) = profile.distribution()?;
    let types = q.len();
    if types > MAX_GRID_TYPES || total > MAX_GRID_USERS || config.resolution > MAX_GRID_RESOLUTION || config.resolution < 2 {
        return Err(Error::domain(format!(
            "grid oracle limited to I <= {MAX_GRID_TYPES}, N <= {MAX_GRID_USERS}, 2..={MAX_GRID_RESOLUTION} points"
        )));
    }
    let evaluator = CompositionProfit::new(profile)?;
    let caps = profile.capacities();

    // beyond theta_i / (N q_i K_i) every type's derivative is negative
    let mut span: f64 = 0.0;
    for i in 0..types {
        if q[i] > 0.0 {
            let bound = profile.preferences()[i] / (total as f64 * q[i] * profile.unit_costs()[i]);
            span = span.max(bound.min(caps[i]));
        }
    }
    if !span.is_finite() || span <= 0.0 {
        span = caps.iter().copied().filter(|c| c.is_finite()).fold(0.0, f64::max);
    }

    let mut best = (vec![0.0; types], evaluator.profit(&vec![0.0; types]));
    let mut windows = vec![(0.0, span); types];
    for _ in 0..=config.refinement_rounds {
        let axes: Vec<Vec<f64>> = windows
            .iter()
            .map(|&(lo, hi)| {
                (0..config.resolution)
                    .map(|k| lo + (hi - lo) * k as f64 / (config.resolution - 1) as f64)
                    .collect()
            })
            .collect();
        let mut current = vec![0.0; types];
        search(&axes, caps, 0, &mut current, &evaluator, &mut best);
        windows = best
            .0
            .iter()
            .zip(&windows)
            .map(|(&t, &(lo, hi))| {
                let step = (hi - lo) / (config.resolution - 1) as f64;
                ((t - 2.0 * step).max(0.0), (t + 2.0 * step).min(span))
            })
            .collect();
    }
    Ok(GridOptimum {
        rewards: evaluator.rewards(&best.0),
        tasks: best.0,
        expected_profit: best.1,
    })
}

fn search(
    axes: &[Vec<f64>],
    caps: &[f64],
    depth: usize,
    current: &mut Vec<f64>,
    evaluator: &CompositionProfit,
    best: &mut (Vec<f64>, f64),
) {
    if depth == axes.len() {
        let p = evaluator.profit(current);
        if p > best.1 {
            *best = (current.clone(), p);
        }
        return;
    }
    let floor = if depth == 0 { 0.0 } else { current[depth - 1] };
    for &t in &axes[depth] {
        if t < floor || t > caps[depth] {
            continue;
        }
        current[depth] = t;
        search(axes, caps, depth + 1, current, evaluator, best);
    }
}

/// Maximiser of `theta ln(1 + n t) - n K t` over `t` in `[0, t_bar]`, by a
/// dense grid followed by golden-section refinement of the best cell.
/// Returns `(task, profit)`.
pub fn complete_type_oracle(preference: f64, unit_cost: f64, count: u64, capacity: f64) -> (f64, f64) {
    let n = count as f64;
    let value = |t: f64| preference * (1.0 + n * t).ln() - n * unit_cost * t;
    if count == 0 {
        return (0.0, 0.0);
    }
    let hi = capacity.min(preference / (n * unit_cost));
    const POINTS: usize = 4001;
    let step = hi / (POINTS - 1) as f64;
    let (k, _) = (0..POINTS)
        .map(|k| (k, value(k as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let (mut a, mut b) = ((k as f64 - 1.0).max(0.0) * step, ((k + 1) as f64 * step).min(hi));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let x1 = b - ratio * (b - a);
        let x2 = a + ratio * (b - a);
        if value(x1) < value(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    let mut t = 0.5 * (a + b);
    for cand in [0.0, hi] {
        if value(cand) > value(t) {
            t = cand;
        }
    }
    (t, value(t))
}

/// Intervals of a uniform grid on which `f` changes sign, plus grid points
/// where it is exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootScan {
    pub intervals: Vec<(f64, f64)>,
    pub zeros: Vec<f64>,
}

pub fn dense_root_scan<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, points: usize) -> Result<RootScan> {
    if lo.is_nan() || hi.is_nan() || lo >= hi || points < 2 {
        return Err(Error::domain(format!("root scan needs lo < hi and >= 2 points, got [{lo}, {hi}], {points}")));
    }
    let xs: Vec<f64> = (0..points)
        .map(|k| if k + 1 == points { hi } else { lo + (hi - lo) * k as f64 / (points - 1) as f64 })
        .collect();
    let mut ys = Vec::with_capacity(points);
    for &x in &xs {
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::numerical(format!("f({x}) = {y}")));
        }
        ys.push(y);
    }
    let mut scan = RootScan {
        intervals: Vec::new(),
        zeros: Vec::new(),
    };
    for k in 0..points {
        if ys[k] == 0.0 {
            scan.zeros.push(xs[k]);
        }
        if k + 1 < points && ys[k] * ys[k + 1] < 0.0 {
            scan.intervals.push((xs[k], xs[k + 1]));
        }
    }
    Ok(scan)
}

/// `P(X = k)` for `X ~ B(n, p)`, from a running product of ratios.
pub fn direct_binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p == 0.0 || p == 1.0 {
        let certain = if p == 0.0 { 0 } else { n };
        return if k == certain { 1.0 } else { 0.0 };
    }
    let mut ln = 0.0;
    for j in 1..=k {
        ln += ((n - k + j) as f64 / j as f64).ln();
    }
    (ln + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

/// Threshold equation evaluated by direct summation.
pub fn direct_threshold_equation(model: PayoffModel, users: u64, threshold: u64, reward: f64, cdf: f64, gamma: f64) -> f64 {
    let mut total = 0.0;
    for m in threshold - 1..users {
        let w = direct_binomial_pmf(users - 1, cdf, m);
        let share = reward / (m + 1) as f64;
        total += w * match model {
            PayoffModel::A => share - gamma,
            PayoffModel::B => share,
        };
    }
    match model {
        PayoffModel::A => total,
        PayoffModel::B => total - gamma,
    }
}

/// Point of a dense reward scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardOraclePoint {
    pub reward: f64,
    pub threshold: Option<f64>,
    pub expected_profit: f64,
}

/// Best reward on a grid over `[0, V]` for the asymmetric scenario with
/// cost cdf `cdf`. For each reward the threshold is located by a dense
/// sign-change scan on `(0, R / n0]` followed by bisection of the last
/// interval.
pub fn dense_reward_oracle<C: Fn(f64) -> f64>(
    model: PayoffModel,
    users: u64,
    threshold: u64,
    revenue: f64,
    cdf: C,
    reward_points: usize,
    scan_points: usize,
) -> Result<RewardOraclePoint> {
    let mut best = RewardOraclePoint {
        reward: 0.0,
        threshold: None,
        expected_profit: 0.0,
    };
    for k in 1..reward_points {
        let r = revenue * k as f64 / (reward_points - 1) as f64;
        let eq = |g: f64| direct_threshold_equation(model, users, threshold, r, cdf(g), g);
        let hi = r / threshold as f64;
        let scan = dense_root_scan(eq, hi / scan_points as f64, hi, scan_points)?;
        let last_zero = scan.zeros.last().copied();
        let root = match scan.intervals.last() {
            Some(&(a, b)) if last_zero.is_none_or(|z| z < a) => {
                let (mut a, mut b) = (a, b);
                let fa = eq(a);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if eq(m) * fa > 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                Some(0.5 * (a + b))
            }
            _ => last_zero,
        };
        let success = match root {
            Some(g) => {
                let f = cdf(g);
                (threshold..=users).map(|n| direct_binomial_pmf(users, f, n)).sum::<f64>()
            }
            None => 0.0,
        };
        let profit = (revenue - r) * success;
        if profit > best.expected_profit {
            best = RewardOraclePoint {
                reward: r,
                threshold: root,
                expected_profit: profit,
            };
        }
    }
    Ok(best)
}
