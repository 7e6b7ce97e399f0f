//! `collab acq ...`: data-acquisition game.

use std::path::Path;

use clap::ValueEnum;
use collab_core::acquisition::{
    evaluate_reward, optimize_reward_asymmetric, solve, AcquisitionEquilibrium, AcquisitionScenario, Information,
    PayoffModel, RewardGrid, StageTwo, UserPayoffs,
};
use collab_core::sim::simulate_acquisition;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{emit, json, num, opt, Csv};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    #[value(name = "R")]
    Reward,
    #[value(name = "delta")]
    Delta,
    #[value(name = "N")]
    Users,
    #[value(name = "n0")]
    Threshold,
    #[value(name = "V")]
    Revenue,
}

impl SweepParam {
    fn integral(self) -> bool {
        matches!(self, SweepParam::Users | SweepParam::Threshold)
    }
}

/// `start:stop:count`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("range {text:?} is not start:stop:count"));
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(bad());
        };
        let start: f64 = start.trim().parse().map_err(|_| bad())?;
        let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if !start.is_finite() || !stop.is_finite() {
            return Err(bad());
        }
        if count == 0 {
            return Err(CliError::Config(format!("range {text:?} has no points")));
        }
        Ok(Self { start, stop, count })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * k as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Serialize)]
struct SolveReport<'a> {
    info: &'static str,
    model: PayoffModel,
    #[serde(rename = "R_star")]
    reward: f64,
    stage2: &'a StageTwo,
    gamma_star: Option<f64>,
    success_prob: f64,
    expected_profit: f64,
    user_payoffs: &'a UserPayoffs,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    diagnostics: &'a [String],
}

pub fn solve_cmd(config: &RunConfig, grid: Option<usize>, out: Option<&Path>) -> Result<(), CliError> {
    let scenario = config.scenario()?;
    let eq = solve(&scenario, config.grid(grid)?)?;
    let report = SolveReport {
        info: scenario.info().name(),
        model: scenario.model(),
        reward: eq.reward,
        stage2: &eq.stage2,
        gamma_star: eq.threshold(),
        success_prob: eq.success_prob,
        expected_profit: eq.master_profit,
        user_payoffs: &eq.user_payoffs,
        diagnostics: &eq.diagnostics,
    };
    emit(&json(&report)?, out)
}

fn with_param(base: &AcquisitionScenario, param: SweepParam, value: f64) -> Result<AcquisitionScenario, CliError> {
    let whole = || -> Result<u64, CliError> {
        if value < 0.0 || (value - value.round()).abs() > 1e-9 {
            return Err(CliError::Config(format!("{value} is not a whole number")));
        }
        Ok(value.round() as u64)
    };
    Ok(match param {
        SweepParam::Reward => base.clone(),
        SweepParam::Users => base.with_users(whole()?)?,
        SweepParam::Threshold => base.with_threshold(whole()?)?,
        SweepParam::Revenue => base.with_revenue(value)?,
        SweepParam::Delta => {
            let info = match base.info() {
                Information::Symmetric(d) => Information::Symmetric(d.with_std_dev(value)?),
                Information::Asymmetric(d) => Information::Asymmetric(d.with_std_dev(value)?),
                Information::Complete(_) => {
                    return Err(CliError::Config("a delta sweep needs a gaussian cost model".into()))
                }
            };
            base.with_info(info)?
        }
    })
}

pub fn sweep_cmd(
    config: &RunConfig,
    param: SweepParam,
    range: Range,
    grid: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let base = config.scenario()?;
    let grid = config.grid(grid)?;
    if param == SweepParam::Reward && !matches!(base.info(), Information::Asymmetric(_)) {
        return Err(CliError::Config("an R sweep needs asymmetric information".into()));
    }
    if param == SweepParam::Delta && base.info().distribution().is_none() {
        return Err(CliError::Config("a delta sweep needs a gaussian cost model".into()));
    }
    if param.integral() {
        for v in range.values() {
            if v < 0.0 || (v - v.round()).abs() > 1e-9 {
                return Err(CliError::Config(format!("{v} is not a whole number")));
            }
        }
    }
    let mut csv = Csv::new(&["param", "R_star", "gamma_star", "success_prob", "expected_profit"]);
    for value in range.values() {
        let scenario = with_param(&base, param, value)?;
        let (reward, gamma, success, profit) = if param == SweepParam::Reward {
            let ev = evaluate_reward(&scenario, value)?;
            (ev.reward, ev.threshold, ev.success_prob, ev.expected_profit)
        } else {
            let eq = solve(&scenario, grid)?;
            (eq.reward, eq.threshold(), eq.success_prob, eq.master_profit)
        };
        csv.row([num(value), num(reward), opt(gamma), num(success), num(profit)]);
    }
    emit(&csv.into_string(), out)
}

fn simulation_reward(scenario: &AcquisitionScenario, grid: RewardGrid, reward: Option<f64>) -> Result<f64, CliError> {
    if !matches!(scenario.info(), Information::Asymmetric(_)) {
        return Err(CliError::Config("simulation needs asymmetric information".into()));
    }
    match reward {
        Some(r) if !(0.0..=scenario.revenue()).contains(&r) => {
            Err(CliError::Config(format!("reward {r} outside [0, V]")))
        }
        Some(r) => Ok(r),
        None => {
            let eq: AcquisitionEquilibrium = optimize_reward_asymmetric(scenario, grid)?;
            Ok(eq.reward)
        }
    }
}

pub fn simulate_cmd(
    config: &RunConfig,
    slots: Option<u64>,
    seed: Option<u64>,
    grid: Option<usize>,
    reward: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let scenario = config.scenario()?;
    let reward = simulation_reward(&scenario, config.grid(grid)?, reward)?;
    let run = simulate_acquisition(&scenario, reward, config.slots(slots)?, config.seed(seed))?;
    let mut csv = Csv::new(&["slot", "n_collaborators", "success", "realized_profit"]);
    for r in &run.records {
        csv.row([
            r.slot.to_string(),
            r.collaborators.to_string(),
            u8::from(r.success).to_string(),
            num(r.realized_profit),
        ]);
    }
    emit(&csv.into_string(), out)
}
