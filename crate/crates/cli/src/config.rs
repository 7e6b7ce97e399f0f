//! Run configuration: one JSON document with an `acquisition` or a
//! `contract` section plus optional `solver` settings.

use std::fs;
use std::path::{Path, PathBuf};

use collab_core::acquisition::{AcquisitionScenario, Information, PayoffModel, RewardGrid};
use collab_core::contract::{Population, ProfitMethod, UserTypeProfile};
use collab_core::cost::{CostDistribution, KnownCosts};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoKind {
    Complete,
    Symmetric,
    Asymmetric,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionSection {
    #[serde(alias = "N")]
    pub users: u64,
    #[serde(alias = "n0")]
    pub threshold: u64,
    #[serde(alias = "V")]
    pub revenue: f64,
    #[serde(default)]
    pub model: Option<PayoffModel>,
    pub info: InfoKind,
    #[serde(default)]
    pub cost_model: Option<CostDistribution>,
    /// Known costs for complete information, inline.
    #[serde(default)]
    pub costs: Option<Vec<f64>>,
    /// Known costs for complete information, read from a file relative to
    /// the config: a JSON array or numbers separated by commas/whitespace.
    #[serde(default)]
    pub costs_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSection {
    #[serde(alias = "K")]
    pub unit_costs: Vec<f64>,
    #[serde(alias = "theta")]
    pub preferences: Vec<f64>,
    /// `null` entries, or a missing field, mean uncapped.
    #[serde(default, alias = "t_bar")]
    pub capacities: Option<Vec<Option<f64>>>,
    pub population: Population,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub slots: Option<u64>,
    #[serde(default)]
    pub method: Option<ProfitMethod>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub acquisition: Option<AcquisitionSection>,
    #[serde(default)]
    pub contract: Option<ContractSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if config.acquisition.is_some() == config.contract.is_some() {
            return Err(CliError::Config(format!(
                "{}: expected exactly one of the `acquisition` and `contract` sections",
                path.display()
            )));
        }
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn grid(&self, flag: Option<usize>) -> Result<RewardGrid, CliError> {
        let points = flag.or(self.solver.grid).unwrap_or(collab_core::acquisition::DEFAULT_REWARD_GRID);
        RewardGrid::new(points).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.solver.seed).unwrap_or(0)
    }

    pub fn slots(&self, flag: Option<u64>) -> Result<u64, CliError> {
        match flag.or(self.solver.slots).unwrap_or(20) {
            0 => Err(CliError::Config("slots must be at least 1".into())),
            n => Ok(n),
        }
    }

    pub fn method(&self, flag: Option<ProfitMethod>) -> ProfitMethod {
        flag.or(self.solver.method).unwrap_or_default()
    }

    pub fn acquisition(&self) -> Result<&AcquisitionSection, CliError> {
        self.acquisition
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs an `acquisition` section".into()))
    }

    pub fn contract(&self) -> Result<&ContractSection, CliError> {
        self.contract
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a `contract` section".into()))
    }

    pub fn scenario(&self) -> Result<AcquisitionScenario, CliError> {
        let section = self.acquisition()?;
        let info = match section.info {
            InfoKind::Complete => Information::Complete(self.known_costs(section)?),
            InfoKind::Symmetric => Information::Symmetric(cost_model(section)?),
            InfoKind::Asymmetric => Information::Asymmetric(cost_model(section)?),
        };
        let model = section.model.unwrap_or(PayoffModel::A);
        Ok(AcquisitionScenario::new(section.users, section.threshold, section.revenue, model, info)?)
    }

    pub fn profile(&self) -> Result<UserTypeProfile, CliError> {
        let section = self.contract()?;
        let caps = match &section.capacities {
            None => vec![f64::INFINITY; section.unit_costs.len()],
            Some(caps) => caps.iter().map(|c| c.unwrap_or(f64::INFINITY)).collect(),
        };
        Ok(UserTypeProfile::new(
            section.unit_costs.clone(),
            caps,
            section.preferences.clone(),
            section.population.clone(),
        )?)
    }

    fn known_costs(&self, section: &AcquisitionSection) -> Result<KnownCosts, CliError> {
        let values = match (&section.costs, &section.costs_file) {
            (Some(v), None) => v.clone(),
            (None, Some(file)) => read_numbers(&self.base_dir.join(file))?,
            _ => {
                return Err(CliError::Config(
                    "complete information needs exactly one of `costs` and `costs_file`".into(),
                ))
            }
        };
        Ok(KnownCosts::new(values)?)
    }
}

fn cost_model(section: &AcquisitionSection) -> Result<CostDistribution, CliError> {
    section
        .cost_model
        .clone()
        .ok_or_else(|| CliError::Config("incomplete information needs a `cost_model`".into()))
}

/// Numbers from a JSON array or a comma/whitespace separated list.
pub fn read_numbers(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_numbers(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| e.to_string());
    }
    trimmed
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_lists() {
        assert_eq!(parse_numbers("1, 2\n3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_numbers("[1.5, 2]").unwrap(), vec![1.5, 2.0]);
        assert!(parse_numbers("1 x").is_err());
    }

    #[test]
    fn section_aliases() {
        let c: RunConfig = serde_json::from_str(
            r#"{"acquisition": {"N": 5, "n0": 3, "V": 10, "info": "symmetric",
                "cost_model": {"kind": "gaussian", "params": {"mu": 2, "delta": 0.5}}}}"#,
        )
        .unwrap();
        let s = c.scenario().unwrap();
        assert_eq!((s.users(), s.threshold(), s.revenue()), (5, 3, 10.0));
        assert_eq!(s.model(), PayoffModel::A);
    }

    #[test]
    fn capacities_default_to_uncapped() {
        let c: RunConfig = serde_json::from_str(
            r#"{"contract": {"K": [2, 1], "theta": [3, 3], "t_bar": [null, 0.5],
                "population": {"counts": [1, 2]}}}"#,
        )
        .unwrap();
        assert_eq!(c.profile().unwrap().capacities(), &[f64::INFINITY, 0.5]);
    }
}
