//! Reward game for data acquisition.
//!
//! The master announces a total reward `R`; each of `N` users then decides
//! whether to collaborate. The master earns `V` only if at least `n0` users
//! collaborate, so his profit is `(V - R) * 1{n >= n0}`. Under
//! [`PayoffModel::A`] a collaborator's cost is only incurred when the
//! collaboration succeeds; under [`PayoffModel::B`] it is always paid.
//!
//! Stage II (users) is solved per information scenario:
//!
//! * complete: the `n0` cheapest users collaborate;
//! * symmetric: a pure equilibrium with `floor(R / mu)` collaborators, or a
//!   symmetric mixed equilibrium from the indifference equation;
//! * asymmetric: every user with cost at most a common threshold
//!   `gamma*(R)` collaborates.
//!
//! Stage I (master) picks `R` in closed form for the first two scenarios and
//! by grid search for the asymmetric one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{CostDistribution, KnownCosts};
use crate::error::{Error, Result};
use crate::prob::{binom_tail, expect_with_masses, BinomialSpec};
use crate::roots::{bisect, bisect_boundary, sign_change_indices};

/// Number of interior probabilities scanned for a mixed-equilibrium bracket.
pub const MIXED_SCAN_POINTS: usize = 1024;
/// Number of thresholds scanned on `(0, R / n0]` for Model B roots.
pub const MODEL_B_SCAN_POINTS: usize = 4096;
pub const DEFAULT_REWARD_GRID: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PayoffModel {
    /// Reward for collaboration effort: `(R/n - C_i) * 1{n >= n0}`.
    A,
    /// Reward only with successful collaboration: `R/n * 1{n >= n0} - C_i`.
    B,
}

/// What the master and the users know about collaboration costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Information {
    Complete(KnownCosts),
    Symmetric(CostDistribution),
    Asymmetric(CostDistribution),
}

impl Information {
    pub fn name(&self) -> &'static str {
        match self {
            Information::Complete(_) => "complete",
            Information::Symmetric(_) => "symmetric",
            Information::Asymmetric(_) => "asymmetric",
        }
    }

    pub fn distribution(&self) -> Option<&CostDistribution> {
        match self {
            Information::Complete(_) => None,
            Information::Symmetric(d) | Information::Asymmetric(d) => Some(d),
        }
    }
}

/// One game instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionScenario {
    users: u64,
    threshold: u64,
    revenue: f64,
    model: PayoffModel,
    info: Information,
}

impl AcquisitionScenario {
    pub fn new(users: u64, threshold: u64, revenue: f64, model: PayoffModel, info: Information) -> Result<Self> {
        if threshold < 1 || threshold >= users {
            return Err(Error::domain(format!(
                "collaborator threshold n0 = {threshold} must satisfy 1 <= n0 < N = {users}"
            )));
        }
        if !revenue.is_finite() || revenue < 0.0 {
            return Err(Error::domain(format!("revenue V = {revenue} must be finite and >= 0")));
        }
        if let Information::Complete(costs) = &info {
            if costs.len() as u64 != users {
                return Err(Error::domain(format!(
                    "{} known costs for N = {users} users",
                    costs.len()
                )));
            }
        }
        Ok(Self {
            users,
            threshold,
            revenue,
            model,
            info,
        })
    }

    pub fn users(&self) -> u64 {
        self.users
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn revenue(&self) -> f64 {
        self.revenue
    }

    pub fn model(&self) -> PayoffModel {
        self.model
    }

    pub fn info(&self) -> &Information {
        &self.info
    }

    pub fn with_users(&self, users: u64) -> Result<Self> {
        Self::new(users, self.threshold, self.revenue, self.model, self.info.clone())
    }

    pub fn with_threshold(&self, threshold: u64) -> Result<Self> {
        Self::new(self.users, threshold, self.revenue, self.model, self.info.clone())
    }

    pub fn with_revenue(&self, revenue: f64) -> Result<Self> {
        Self::new(self.users, self.threshold, revenue, self.model, self.info.clone())
    }

    pub fn with_model(&self, model: PayoffModel) -> Self {
        Self { model, ..self.clone() }
    }

    pub fn with_info(&self, info: Information) -> Result<Self> {
        Self::new(self.users, self.threshold, self.revenue, self.model, info)
    }

    fn distribution_for(&self, want: &str) -> Result<&CostDistribution> {
        match (&self.info, want) {
            (Information::Symmetric(d), "symmetric") | (Information::Asymmetric(d), "asymmetric") => Ok(d),
            _ => Err(Error::domain(format!(
                "operation needs {want} information, scenario has {}",
                self.info.name()
            ))),
        }
    }
}

/// Stage II outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageTwo {
    NoCollaboration,
    /// Collaborating user indices (ascending).
    PureSet(Vec<usize>),
    PureCount(u64),
    /// Common collaboration probability.
    Mixed(f64),
    /// Users with cost at most the threshold collaborate.
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserPayoffs {
    /// Realised payoff of every user (complete information).
    PerUser(Vec<f64>),
    /// Expected payoff of each collaborator.
    Collaborator(f64),
    /// Depends on the user's own cost; see [`asymmetric_user_payoff`].
    CostDependent { threshold: f64 },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionEquilibrium {
    pub reward: f64,
    pub stage2: StageTwo,
    pub success_prob: f64,
    pub master_profit: f64,
    pub user_payoffs: UserPayoffs,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub diagnostics: Vec<String>,
}

impl AcquisitionEquilibrium {
    fn idle() -> Self {
        Self {
            reward: 0.0,
            stage2: StageTwo::NoCollaboration,
            success_prob: 0.0,
            master_profit: 0.0,
            user_payoffs: UserPayoffs::Zero,
            diagnostics: Vec::new(),
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self.stage2 {
            StageTwo::Threshold(g) => Some(g),
            _ => None,
        }
    }
}

/// Resolution of the Stage I reward search over `[0, V]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardGrid {
    points: usize,
}

impl RewardGrid {
    pub fn new(points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::domain(format!("reward grid needs >= 2 points, got {points}")));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Equally spaced values on `[lo, hi]`, endpoints included.
    pub fn values(&self, lo: f64, hi: f64) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| if k + 1 == self.points { hi } else { lo + (hi - lo) * k as f64 / last })
            .collect()
    }

    pub fn step(&self, lo: f64, hi: f64) -> f64 {
        (hi - lo) / (self.points - 1) as f64
    }
}

impl Default for RewardGrid {
    fn default() -> Self {
        Self {
            points: DEFAULT_REWARD_GRID,
        }
    }
}

/// Expected payoff of a collaborating user with cost `cost` when each of the
/// other `N - 1` users collaborates independently with probability `prob`.
///
/// With `cost = mu` this is the mixed-strategy indifference function
/// `u(R, p)`; with `cost = gamma` and `prob = F(gamma)` it is the threshold
/// equation (`Phi` for Model A, `Psi` for Model B).
pub fn collaborator_payoff(
    model: PayoffModel,
    users: u64,
    threshold: u64,
    reward: f64,
    prob: f64,
    cost: f64,
) -> Result<f64> {
    let masses = BinomialSpec::new(users - 1, prob)?.pmf_vec();
    let share = |m: u64| {
        if m + 1 >= threshold {
            reward / (m as f64 + 1.0)
        } else {
            0.0
        }
    };
    match model {
        PayoffModel::A => expect_with_masses(&masses, |m| {
            if m + 1 >= threshold {
                share(m) - cost
            } else {
                0.0
            }
        }),
        PayoffModel::B => Ok(expect_with_masses(&masses, share)? - cost),
    }
}

/// `u(R, p)` for the symmetric scenario.
pub fn mixed_indifference(scenario: &AcquisitionScenario, reward: f64, prob: f64) -> Result<f64> {
    let mu = scenario.distribution_for("symmetric")?.mean();
    collaborator_payoff(scenario.model, scenario.users, scenario.threshold, reward, prob, mu)
}

/// Threshold equation at `gamma` for the asymmetric scenario.
pub fn threshold_equation(scenario: &AcquisitionScenario, reward: f64, gamma: f64) -> Result<f64> {
    let f = scenario.distribution_for("asymmetric")?.cdf(gamma);
    collaborator_payoff(scenario.model, scenario.users, scenario.threshold, reward, f, gamma)
}

/// Expected payoff of a user with private cost `cost` at threshold `gamma`
/// (zero if the user does not collaborate).
pub fn asymmetric_user_payoff(scenario: &AcquisitionScenario, reward: f64, gamma: f64, cost: f64) -> Result<f64> {
    if cost > gamma {
        return Ok(0.0);
    }
    let f = scenario.distribution_for("asymmetric")?.cdf(gamma);
    collaborator_payoff(scenario.model, scenario.users, scenario.threshold, reward, f, cost)
}

/// Equilibrium under complete information.
///
/// Ties between equal costs are broken by user index; the diagnostics say
/// so, since equal costs at the boundary admit several equilibria.
pub fn solve_complete(scenario: &AcquisitionScenario) -> Result<AcquisitionEquilibrium> {
    let costs = match &scenario.info {
        Information::Complete(c) => c,
        other => {
            return Err(Error::domain(format!(
                "complete-information solver given {} information",
                other.name()
            )))
        }
    };
    let n0 = scenario.threshold as usize;
    let order = costs.ascending_order();
    let c = costs.as_slice();
    let pivot = c[order[n0 - 1]];
    let required = n0 as f64 * pivot;

    let mut diagnostics = Vec::new();
    if costs.has_duplicates() {
        diagnostics.push("equal costs present; ties broken by user index".to_string());
    }
    if order.get(n0).is_some_and(|&j| c[j] == pivot) {
        diagnostics.push(format!(
            "cost tie at the n0-th position ({pivot}); other equilibria swap the tied users"
        ));
    }

    if scenario.revenue < required {
        let mut eq = AcquisitionEquilibrium::idle();
        eq.user_payoffs = UserPayoffs::PerUser(vec![0.0; c.len()]);
        eq.diagnostics = diagnostics;
        return Ok(eq);
    }

    let mut collaborators: Vec<usize> = order[..n0].to_vec();
    collaborators.sort_unstable();
    let mut payoffs = vec![0.0; c.len()];
    for &i in &collaborators {
        payoffs[i] = pivot - c[i];
    }
    Ok(AcquisitionEquilibrium {
        reward: required,
        stage2: StageTwo::PureSet(collaborators),
        success_prob: 1.0,
        master_profit: scenario.revenue - required,
        user_payoffs: UserPayoffs::PerUser(payoffs),
        diagnostics,
    })
}

/// Number of collaborators in the symmetric pure equilibrium for reward `R`.
pub fn symmetric_pure_count(reward: f64, users: u64, threshold: u64, mean_cost: f64) -> u64 {
    if reward < threshold as f64 * mean_cost {
        0
    } else if reward >= users as f64 * mean_cost {
        users
    } else {
        (reward / mean_cost).floor() as u64
    }
}

/// Stage II equilibria under symmetric information for a given reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricStageTwo {
    pub pure_count: u64,
    pub mixed_prob: Option<f64>,
}

pub fn symmetric_stage_two(scenario: &AcquisitionScenario, reward: f64) -> Result<SymmetricStageTwo> {
    let mu = scenario.distribution_for("symmetric")?.mean();
    Ok(SymmetricStageTwo {
        pure_count: symmetric_pure_count(reward, scenario.users, scenario.threshold, mu),
        mixed_prob: solve_symmetric_mixed(scenario, reward)?,
    })
}

/// Stage I under symmetric information: `R* = n0 * mu` if `V >= n0 * mu`.
pub fn solve_symmetric_pure(scenario: &AcquisitionScenario) -> Result<AcquisitionEquilibrium> {
    let mu = scenario.distribution_for("symmetric")?.mean();
    let required = scenario.threshold as f64 * mu;
    if scenario.revenue < required {
        return Ok(AcquisitionEquilibrium::idle());
    }
    Ok(AcquisitionEquilibrium {
        reward: required,
        stage2: StageTwo::PureSet((0..scenario.threshold as usize).collect()),
        success_prob: 1.0,
        master_profit: scenario.revenue - required,
        user_payoffs: UserPayoffs::Collaborator(0.0),
        diagnostics: vec![format!(
            "any {} of the {} users form an equilibrium; the lowest indices are reported",
            scenario.threshold, scenario.users
        )],
    })
}

/// Symmetric mixed equilibrium probability for reward `R`, if one exists in
/// `(0, 1)`.
///
/// Scans [`MIXED_SCAN_POINTS`] interior probabilities for a sign change of
/// `u(R, .)` and bisects it. More than one sign change is reported as an
/// error rather than resolved silently.
pub fn solve_symmetric_mixed(scenario: &AcquisitionScenario, reward: f64) -> Result<Option<f64>> {
    scenario.distribution_for("symmetric")?;
    if reward.is_nan() || reward <= 0.0 {
        return Ok(None);
    }
    let denom = (MIXED_SCAN_POINTS + 1) as f64;
    let probs: Vec<f64> = (1..=MIXED_SCAN_POINTS).map(|k| k as f64 / denom).collect();
    let values = probs
        .iter()
        .map(|&p| mixed_indifference(scenario, reward, p))
        .collect::<Result<Vec<f64>>>()?;
    let changes = sign_change_indices(&values);
    match changes.as_slice() {
        [] => Ok(None),
        [k] => {
            let p = bisect(|p| mixed_indifference(scenario, reward, p), probs[*k], probs[*k + 1])?;
            Ok(Some(p))
        }
        many => Err(Error::numerical(format!(
            "u(R = {reward}, p) changes sign {} times; brackets start at p = {:?}",
            many.len(),
            many.iter().map(|&k| probs[k]).collect::<Vec<_>>()
        ))),
    }
}

/// Equilibrium decision threshold `gamma*(R)`.
///
/// Model A: the unique root of `Phi` on `[R/N, R/n0]`, by bisection.
/// Model B: the largest root of `Psi` found on a [`MODEL_B_SCAN_POINTS`]
/// grid over `(0, R/n0]`, or `None` when there is no positive root.
pub fn solve_asymmetric_threshold(scenario: &AcquisitionScenario, reward: f64) -> Result<Option<f64>> {
    scenario.distribution_for("asymmetric")?;
    if !reward.is_finite() || reward <= 0.0 {
        return Err(Error::domain(format!("threshold needs a positive reward, got {reward}")));
    }
    let n = scenario.users as f64;
    let n0 = scenario.threshold as f64;
    let phi = |g: f64| threshold_equation(scenario, reward, g);
    match scenario.model {
        PayoffModel::A => {
            let (lo, hi) = (reward / n, reward / n0);
            let (f_lo, f_hi) = (phi(lo)?, phi(hi)?);
            if f_lo < 0.0 || f_hi > 0.0 {
                return Err(Error::numerical(format!(
                    "threshold bracket [{lo}, {hi}] has Phi = ({f_lo}, {f_hi})"
                )));
            }
            bisect_boundary(phi, lo, hi).map(Some)
        }
        PayoffModel::B => {
            let hi = reward / n0;
            let step = hi / MODEL_B_SCAN_POINTS as f64;
            let gammas: Vec<f64> = (1..=MODEL_B_SCAN_POINTS)
                .map(|k| if k == MODEL_B_SCAN_POINTS { hi } else { step * k as f64 })
                .collect();
            let values = gammas.iter().map(|&g| phi(g)).collect::<Result<Vec<f64>>>()?;
            match sign_change_indices(&values).last() {
                Some(&k) => bisect(phi, gammas[k], gammas[k + 1]).map(Some),
                None => Ok(None),
            }
        }
    }
}

/// Stage II outcome and master profit at one reward under asymmetric
/// information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardEvaluation {
    pub reward: f64,
    pub threshold: Option<f64>,
    pub success_prob: f64,
    pub expected_profit: f64,
}

/// `f(R) = (V - R) P(n >= n0)` with `n ~ B(N, F(gamma*(R)))`. `R = 0` is
/// treated as not initiating the collaboration.
pub fn evaluate_reward(scenario: &AcquisitionScenario, reward: f64) -> Result<RewardEvaluation> {
    let dist = scenario.distribution_for("asymmetric")?;
    if reward == 0.0 {
        return Ok(RewardEvaluation {
            reward,
            threshold: None,
            success_prob: 0.0,
            expected_profit: 0.0,
        });
    }
    let threshold = solve_asymmetric_threshold(scenario, reward)?;
    let success_prob = match threshold {
        Some(g) => binom_tail(&BinomialSpec::new(scenario.users, dist.cdf(g))?, scenario.threshold),
        None => 0.0,
    };
    Ok(RewardEvaluation {
        reward,
        threshold,
        success_prob,
        expected_profit: (scenario.revenue - reward) * success_prob,
    })
}

/// `f(R)` at every grid point over `[0, V]`, in grid order.
pub fn reward_profile(scenario: &AcquisitionScenario, grid: RewardGrid) -> Result<Vec<RewardEvaluation>> {
    scenario.distribution_for("asymmetric")?;
    grid.values(0.0, scenario.revenue)
        .into_par_iter()
        .map(|r| evaluate_reward(scenario, r))
        .collect()
}

/// Stage I under asymmetric information: the grid point maximising `f`,
/// ties broken toward the smaller reward; `R* = 0` when no point earns a
/// positive profit.
pub fn optimize_reward_asymmetric(scenario: &AcquisitionScenario, grid: RewardGrid) -> Result<AcquisitionEquilibrium> {
    let profile = reward_profile(scenario, grid)?;
    let mut best: Option<&RewardEvaluation> = None;
    for ev in &profile {
        if ev.expected_profit > best.map_or(0.0, |b| b.expected_profit) {
            best = Some(ev);
        }
    }
    let Some(best) = best else {
        return Ok(AcquisitionEquilibrium::idle());
    };
    let (stage2, user_payoffs) = match best.threshold {
        Some(g) => (StageTwo::Threshold(g), UserPayoffs::CostDependent { threshold: g }),
        None => (StageTwo::NoCollaboration, UserPayoffs::Zero),
    };
    Ok(AcquisitionEquilibrium {
        reward: best.reward,
        stage2,
        success_prob: best.success_prob,
        master_profit: best.expected_profit,
        user_payoffs,
        diagnostics: vec![format!(
            "grid of {} rewards, step {}",
            grid.points(),
            grid.step(0.0, scenario.revenue)
        )],
    })
}

/// Subgame-perfect equilibrium for whichever information scenario the
/// instance carries.
pub fn solve(scenario: &AcquisitionScenario, grid: RewardGrid) -> Result<AcquisitionEquilibrium> {
    match scenario.info {
        Information::Complete(_) => solve_complete(scenario),
        Information::Symmetric(_) => solve_symmetric_pure(scenario),
        Information::Asymmetric(_) => optimize_reward_asymmetric(scenario, grid),
    }
}

/// Mean Stage II collaborator count `N F(gamma*(R))`.
pub fn expected_collaborators(scenario: &AcquisitionScenario, reward: f64) -> Result<f64> {
    let dist = scenario.distribution_for("asymmetric")?;
    if reward == 0.0 {
        return Ok(0.0);
    }
    Ok(match solve_asymmetric_threshold(scenario, reward)? {
        Some(g) => scenario.users as f64 * dist.cdf(g),
        None => 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub reward: f64,
    pub mixed_prob: f64,
    pub expected_profit: f64,
}

/// Master profit when users play the symmetric mixed equilibrium, over the
/// interior grid points of `(n0 mu, N mu)`. Points without a mixed
/// equilibrium are omitted.
pub fn mixed_profit_curve(scenario: &AcquisitionScenario, grid: RewardGrid) -> Result<Vec<CurvePoint>> {
    let mu = scenario.distribution_for("symmetric")?.mean();
    let lo = scenario.threshold as f64 * mu;
    let hi = scenario.users as f64 * mu;
    let values = grid.values(lo, hi);
    let interior = &values[1..values.len() - 1];
    let points = interior
        .par_iter()
        .map(|&r| -> Result<Option<CurvePoint>> {
            let Some(p) = solve_symmetric_mixed(scenario, r)? else {
                return Ok(None);
            };
            let success = binom_tail(&BinomialSpec::new(scenario.users, p)?, scenario.threshold);
            Ok(Some(CurvePoint {
                reward: r,
                mixed_prob: p,
                expected_profit: (scenario.revenue - r) * success,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(points.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioComparison {
    pub symmetric: AcquisitionEquilibrium,
    pub asymmetric: AcquisitionEquilibrium,
    /// False when `V < n0 mu`, where no ordering is asserted.
    pub applicable: bool,
    pub ordering_holds: bool,
}

/// Compares master profit under symmetric and asymmetric information for
/// the same `(N, n0, V, F)`; the asymmetric profit should not exceed
/// `V - n0 mu`.
pub fn compare_information_scenarios(scenario: &AcquisitionScenario, grid: RewardGrid) -> Result<ScenarioComparison> {
    let dist = scenario
        .info
        .distribution()
        .ok_or_else(|| Error::domain("comparison needs a cost distribution"))?
        .clone();
    let sym = solve_symmetric_pure(&scenario.with_info(Information::Symmetric(dist.clone()))?)?;
    let asym = optimize_reward_asymmetric(&scenario.with_info(Information::Asymmetric(dist.clone()))?, grid)?;
    let applicable = scenario.revenue >= scenario.threshold as f64 * dist.mean();
    let ordering_holds = !applicable || asym.master_profit <= sym.master_profit;
    Ok(ScenarioComparison {
        symmetric: sym,
        asymmetric: asym,
        applicable,
        ordering_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn complete(costs: &[f64], n0: u64, v: f64) -> AcquisitionScenario {
        let c = KnownCosts::new(costs.to_vec()).unwrap();
        AcquisitionScenario::new(costs.len() as u64, n0, v, PayoffModel::A, Information::Complete(c)).unwrap()
    }

    fn symmetric(n: u64, n0: u64, v: f64, mu: f64) -> AcquisitionScenario {
        let d = CostDistribution::gaussian(mu, 1.0).unwrap();
        AcquisitionScenario::new(n, n0, v, PayoffModel::A, Information::Symmetric(d)).unwrap()
    }

    fn uniform_asym(n: u64, n0: u64, v: f64, b: f64, model: PayoffModel) -> AcquisitionScenario {
        let d = CostDistribution::uniform(b).unwrap();
        AcquisitionScenario::new(n, n0, v, model, Information::Asymmetric(d)).unwrap()
    }

    #[test]
    fn scenario_validation() {
        let d = CostDistribution::uniform(1.0).unwrap();
        assert!(AcquisitionScenario::new(3, 3, 1.0, PayoffModel::A, Information::Symmetric(d.clone())).is_err());
        assert!(AcquisitionScenario::new(3, 0, 1.0, PayoffModel::A, Information::Symmetric(d.clone())).is_err());
        assert!(AcquisitionScenario::new(3, 1, -1.0, PayoffModel::A, Information::Symmetric(d)).is_err());
        let c = KnownCosts::new(vec![1.0, 2.0]).unwrap();
        assert!(AcquisitionScenario::new(3, 1, 1.0, PayoffModel::A, Information::Complete(c)).is_err());
    }

    #[test]
    fn complete_examples() {
        let eq = solve_complete(&complete(&[1.0, 2.0, 3.0], 2, 3.0)).unwrap();
        assert_eq!(eq.reward, 0.0);
        assert_eq!(eq.master_profit, 0.0);
        assert_eq!(eq.stage2, StageTwo::NoCollaboration);

        let eq = solve_complete(&complete(&[1.0, 2.0, 3.0, 4.0], 2, 10.0)).unwrap();
        assert_eq!(eq.reward, 4.0);
        assert_eq!(eq.stage2, StageTwo::PureSet(vec![0, 1]));
        assert_eq!(eq.user_payoffs, UserPayoffs::PerUser(vec![1.0, 0.0, 0.0, 0.0]));
        assert_eq!(eq.master_profit, 6.0);

        let eq = solve_complete(&complete(&[2.0, 5.0], 1, 10.0)).unwrap();
        assert_eq!(eq.reward, 2.0);
        assert_eq!(eq.stage2, StageTwo::PureSet(vec![0]));
        assert_eq!(eq.master_profit, 8.0);
    }

    #[test]
    fn complete_is_model_independent_and_unsorted_input_works() {
        let s = complete(&[4.0, 1.0, 3.0, 2.0], 2, 10.0);
        let a = solve_complete(&s).unwrap();
        let b = solve_complete(&s.with_model(PayoffModel::B)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.stage2, StageTwo::PureSet(vec![1, 3]));
    }

    #[test]
    fn complete_ties_are_flagged() {
        let eq = solve_complete(&complete(&[2.0, 1.0, 2.0, 5.0], 2, 10.0)).unwrap();
        assert_eq!(eq.stage2, StageTwo::PureSet(vec![0, 1]));
        assert_eq!(eq.diagnostics.len(), 2);
    }

    #[test]
    fn symmetric_examples() {
        let eq = solve_symmetric_pure(&symmetric(5, 3, 5.0, 2.0)).unwrap();
        assert_eq!(eq.reward, 0.0);
        let eq = solve_symmetric_pure(&symmetric(5, 3, 10.0, 2.0)).unwrap();
        assert_eq!(eq.reward, 6.0);
        assert_eq!(eq.master_profit, 4.0);
        assert_eq!(eq.stage2, StageTwo::PureSet(vec![0, 1, 2]));
        assert_eq!(eq.user_payoffs, UserPayoffs::Collaborator(0.0));
        assert_eq!(symmetric_pure_count(4.7, 10, 2, 1.0), 4);
        assert_eq!(symmetric_pure_count(1.5, 10, 2, 1.0), 0);
        assert_eq!(symmetric_pure_count(12.0, 10, 2, 1.0), 10);
    }

    #[test]
    fn mixed_examples() {
        let s = symmetric(3, 2, 10.0, 1.0);
        let p = solve_symmetric_mixed(&s, 2.5).unwrap().unwrap();
        assert_abs_diff_eq!(p, 0.75, epsilon = 1e-10);
        assert!(mixed_indifference(&s, 2.5, p).unwrap().abs() <= 1e-10);
        assert_eq!(solve_symmetric_mixed(&s, 2.0).unwrap(), None);
        assert_eq!(solve_symmetric_mixed(&s, 3.0).unwrap(), None);
        assert_eq!(solve_symmetric_mixed(&s, 3.5).unwrap(), None);
    }

    #[test]
    fn model_b_mixed_needs_a_large_reward() {
        let s = symmetric(3, 2, 10.0, 1.0).with_model(PayoffModel::B);
        assert_eq!(solve_symmetric_mixed(&s, 2.5).unwrap(), None);
        let p = solve_symmetric_mixed(&s, 3.2).unwrap().unwrap();
        assert!(mixed_indifference(&s, 3.2, p).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn toy_threshold_is_eight_fifths() {
        let s = uniform_asym(2, 1, 4.0, 4.0, PayoffModel::A);
        let g = solve_asymmetric_threshold(&s, 2.0).unwrap().unwrap();
        assert_abs_diff_eq!(g, 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(expected_collaborators(&s, 2.0).unwrap(), 0.8, epsilon = 1e-12);
        assert_eq!(expected_collaborators(&s, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn uniform_threshold_near_two() {
        let s = uniform_asym(100, 40, 150.0, 4.0, PayoffModel::A);
        let g = solve_asymmetric_threshold(&s, 100.0).unwrap().unwrap();
        assert!((g - 2.0).abs() <= 0.05, "{g}");
        assert!(1.0 < g && g < 2.5);
        let n = expected_collaborators(&s, 100.0).unwrap();
        assert!((n - 50.0).abs() <= 1.5, "{n}");
    }

    #[test]
    fn zero_revenue_gives_zero_reward() {
        let s = uniform_asym(10, 3, 0.0, 4.0, PayoffModel::A);
        let eq = optimize_reward_asymmetric(&s, RewardGrid::default()).unwrap();
        assert_eq!(eq.reward, 0.0);
        assert_eq!(eq.master_profit, 0.0);
    }

    #[test]
    fn wrong_information_is_a_domain_error() {
        let s = symmetric(5, 2, 3.0, 1.0);
        assert!(matches!(solve_asymmetric_threshold(&s, 1.0), Err(Error::Domain(_))));
        assert!(matches!(solve_complete(&s), Err(Error::Domain(_))));
        let a = uniform_asym(5, 2, 3.0, 1.0, PayoffModel::A);
        assert!(matches!(solve_symmetric_pure(&a), Err(Error::Domain(_))));
        assert!(RewardGrid::new(1).is_err());
    }

    #[test]
    fn degenerate_costs_everyone_collaborates() {
        let d = CostDistribution::gaussian(3.0, 0.0).unwrap();
        let s = AcquisitionScenario::new(10, 4, 100.0, PayoffModel::A, Information::Asymmetric(d)).unwrap();
        // R / N = 4 > 3 = every cost
        let g = solve_asymmetric_threshold(&s, 40.0).unwrap().unwrap();
        assert!((g - 4.0).abs() < 1e-12);
        let ev = evaluate_reward(&s, 40.0).unwrap();
        assert_eq!(ev.success_prob, 1.0);
        // R / N < 3: nobody collaborating is the threshold equilibrium
        let ev = evaluate_reward(&s, 20.0).unwrap();
        assert_eq!(ev.success_prob, 0.0);
    }

    #[test]
    fn underflowed_payoffs_do_not_stop_the_search() {
        let d = CostDistribution::gaussian(3.0, 0.1).unwrap();
        let s = AcquisitionScenario::new(80, 55, 210.0, PayoffModel::A, Information::Asymmetric(d)).unwrap();
        let g = solve_asymmetric_threshold(&s, 199.0).unwrap().unwrap();
        assert!(g > 3.0 && g < 199.0 / 55.0, "{g}");
        assert!(threshold_equation(&s, 199.0, g + 1e-9).unwrap() < 0.0);
    }

    #[test]
    fn mixed_curve_example() {
        let s = symmetric(3, 2, 10.0, 1.0);
        let grid = RewardGrid::new(5).unwrap();
        let curve = mixed_profit_curve(&s, grid).unwrap();
        let at = curve.iter().find(|c| c.reward == 2.5).expect("2.5 is a grid point");
        assert_abs_diff_eq!(at.expected_profit, 7.5 * 0.84375, epsilon = 1e-9);
        assert!(curve.iter().all(|c| c.expected_profit <= 10.0));
    }

    #[test]
    fn comparison_when_revenue_too_small() {
        let s = uniform_asym(20, 10, 5.0, 2.0, PayoffModel::A);
        let cmp = compare_information_scenarios(&s, RewardGrid::new(101).unwrap()).unwrap();
        assert!(!cmp.applicable);
        assert_eq!(cmp.symmetric.master_profit, 0.0);
        assert!(cmp.ordering_holds);
    }
}
