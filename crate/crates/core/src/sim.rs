//! Monte Carlo replay of equilibria over independent time slots.
//!
//! Slot `s` draws from `RngHandle::with_stream(seed, s)`, so every slot has
//! its own ChaCha20 stream under the run seed. Slots are evaluated in
//! parallel and reported in slot order; a run is a pure function of its
//! inputs and seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{solve_asymmetric_threshold, AcquisitionScenario, Information};
use crate::contract::{realized_profit, solve_complete, ContractSolution, UserTypeProfile};
use crate::cost::DEFAULT_COST_FLOOR;
use crate::error::{Error, Result};
use crate::prob::{sample_type_counts, RngHandle, TypeCountVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSlot {
    pub slot: u64,
    pub collaborators: u64,
    pub success: bool,
    pub realized_profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionRun {
    pub reward: f64,
    pub threshold: Option<f64>,
    pub seed: u64,
    pub records: Vec<AcquisitionSlot>,
}

impl AcquisitionRun {
    pub fn success_frequency(&self) -> f64 {
        self.records.iter().filter(|r| r.success).count() as f64 / self.records.len() as f64
    }

    pub fn mean_profit(&self) -> f64 {
        self.records.iter().map(|r| r.realized_profit).sum::<f64>() / self.records.len() as f64
    }
}

fn check_slots(slots: u64) -> Result<()> {
    if slots == 0 {
        return Err(Error::domain("a simulation needs at least one slot"));
    }
    Ok(())
}

/// Each slot draws `N` costs (floored at [`DEFAULT_COST_FLOOR`]); users with
/// cost at most `gamma*(R)` collaborate and the master earns `V - R` if at
/// least `n0` do.
pub fn simulate_acquisition(scenario: &AcquisitionScenario, reward: f64, slots: u64, seed: u64) -> Result<AcquisitionRun> {
    check_slots(slots)?;
    let Information::Asymmetric(dist) = scenario.info() else {
        return Err(Error::domain("acquisition simulation needs asymmetric information"));
    };
    let threshold = if reward > 0.0 {
        solve_asymmetric_threshold(scenario, reward)?
    } else {
        None
    };
    let users = scenario.users() as usize;
    let records = (0..slots)
        .into_par_iter()
        .map(|slot| {
            let mut rng = RngHandle::with_stream(seed, slot);
            let costs = dist.sample_with_floor(&mut rng, users, DEFAULT_COST_FLOOR)?;
            let collaborators = match threshold {
                Some(g) => costs.as_slice().iter().filter(|&&c| c <= g).count() as u64,
                None => 0,
            };
            let success = collaborators >= scenario.threshold();
            Ok(AcquisitionSlot {
                slot,
                collaborators,
                success,
                realized_profit: if success { scenario.revenue() - reward } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AcquisitionRun {
        reward,
        threshold,
        seed,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractSlot {
    pub slot: u64,
    pub counts: TypeCountVector,
    pub incomplete_profit: f64,
    pub complete_profit: f64,
    /// `None` when the complete-information profit is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractRun {
    pub seed: u64,
    pub records: Vec<ContractSlot>,
}

impl ContractRun {
    pub fn mean_incomplete_profit(&self) -> f64 {
        self.records.iter().map(|r| r.incomplete_profit).sum::<f64>() / self.records.len() as f64
    }
}

/// Profits at one realisation of type counts: the fixed contract versus a
/// complete-information contract designed for exactly these counts.
pub fn compare_at_counts(profile: &UserTypeProfile, solution: &ContractSolution, counts: TypeCountVector) -> Result<(f64, f64, Option<f64>)> {
    let incomplete = realized_profit(&solution.contract, &counts, profile.preferences())?;
    let complete = solve_complete(&profile.with_counts(counts)?)?.expected_profit;
    let ratio = (complete > 0.0).then(|| incomplete / complete);
    Ok((incomplete, complete, ratio))
}

/// Each slot draws type counts from the profile's distribution and records
/// both realised profits and their ratio.
pub fn simulate_contract(profile: &UserTypeProfile, solution: &ContractSolution, slots: u64, seed: u64) -> Result<ContractRun> {
    check_slots(slots)?;
    let (total, q) = profile.distribution()?;
    let records = (0..slots)
        .into_par_iter()
        .map(|slot| {
            let mut rng = RngHandle::with_stream(seed, slot);
            let counts = sample_type_counts(total, q, &mut rng)?;
            let (incomplete_profit, complete_profit, ratio) = compare_at_counts(profile, solution, counts.clone())?;
            Ok(ContractSlot {
                slot,
                counts,
                incomplete_profit,
                complete_profit,
                ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContractRun { seed, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub counts: TypeCountVector,
    pub incomplete_profit: f64,
    pub complete_profit: f64,
    pub ratio: Option<f64>,
}

/// Profit ratio at every three-type composition of `N`, ordered by
/// `(n_1, n_2)`.
pub fn ratio_grid(profile: &UserTypeProfile, solution: &ContractSolution) -> Result<Vec<RatioPoint>> {
    let (total, _) = profile.distribution()?;
    if profile.types() != 3 {
        return Err(Error::domain("ratio grid is defined for three types"));
    }
    let cells: Vec<(u64, u64)> = (0..=total).flat_map(|a| (0..=total - a).map(move |b| (a, b))).collect();
    cells
        .into_par_iter()
        .map(|(a, b)| {
            let counts = TypeCountVector(vec![a, b, total - a - b]);
            let (incomplete_profit, complete_profit, ratio) = compare_at_counts(profile, solution, counts.clone())?;
            Ok(RatioPoint {
                counts,
                incomplete_profit,
                complete_profit,
                ratio,
            })
        })
        .collect()
}
