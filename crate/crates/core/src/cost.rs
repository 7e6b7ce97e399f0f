//! User collaboration-cost information.
//!
//! [`KnownCosts`] is the complete-information view: one positive cost per
//! user. [`CostDistribution`] is the incomplete-information view: a cdf with
//! a finite mean from which i.i.d. costs are drawn.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::prob::RngHandle;

/// Floor applied to sampled costs so realised costs stay positive.
pub const DEFAULT_COST_FLOOR: f64 = 1e-6;

/// Known per-user costs, in user-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KnownCosts(Vec<f64>);

impl KnownCosts {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::domain("cost vector is empty"));
        }
        if let Some((i, c)) = costs
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite() || **c <= 0.0)
        {
            return Err(Error::domain(format!(
                "cost of user {i} is {c}; costs must be positive"
            )));
        }
        Ok(Self(costs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// User indices ordered by ascending cost, ties kept in index order.
    pub fn ascending_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.0.len()).collect();
        idx.sort_by(|&a, &b| self.0[a].total_cmp(&self.0[b]));
        idx
    }

    pub fn has_duplicates(&self) -> bool {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        v.windows(2).any(|w| w[0] == w[1])
    }
}

impl TryFrom<Vec<f64>> for KnownCosts {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        KnownCosts::new(v)
    }
}

impl From<KnownCosts> for Vec<f64> {
    fn from(c: KnownCosts) -> Self {
        c.0
    }
}

/// Cost distribution `F(.)`.
///
/// Serialised as `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub enum CostDistribution {
    /// Uniform on `[0, b]`.
    Uniform { b: f64 },
    /// Untruncated normal; `std_dev = 0` is a point mass.
    Gaussian { mean: f64, std_dev: f64 },
    /// Right-continuous step cdf over the samples (kept sorted).
    Empirical { samples: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
enum RawDistribution {
    #[serde(alias = "uniform_on_zero_to_b")]
    Uniform { b: f64 },
    Gaussian {
        #[serde(alias = "mu")]
        mean: f64,
        #[serde(alias = "delta", alias = "std")]
        std_dev: f64,
    },
    #[serde(alias = "empirical_step")]
    Empirical { samples: Vec<f64> },
}

impl TryFrom<RawDistribution> for CostDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        match raw {
            RawDistribution::Uniform { b } => CostDistribution::uniform(b),
            RawDistribution::Gaussian { mean, std_dev } => CostDistribution::gaussian(mean, std_dev),
            RawDistribution::Empirical { samples } => CostDistribution::empirical(samples),
        }
    }
}

impl From<CostDistribution> for RawDistribution {
    fn from(d: CostDistribution) -> Self {
        match d {
            CostDistribution::Uniform { b } => RawDistribution::Uniform { b },
            CostDistribution::Gaussian { mean, std_dev } => RawDistribution::Gaussian { mean, std_dev },
            CostDistribution::Empirical { samples } => RawDistribution::Empirical { samples },
        }
    }
}

impl CostDistribution {
    pub fn uniform(b: f64) -> Result<Self> {
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::domain(format!("uniform upper bound {b} must be positive")));
        }
        Ok(CostDistribution::Uniform { b })
    }

    pub fn gaussian(mean: f64, std_dev: f64) -> Result<Self> {
        if !mean.is_finite() || !std_dev.is_finite() || std_dev < 0.0 {
            return Err(Error::domain(format!(
                "invalid gaussian parameters mean={mean}, std_dev={std_dev}"
            )));
        }
        Ok(CostDistribution::Gaussian { mean, std_dev })
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("empirical distribution needs samples"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("empirical samples must be finite"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(CostDistribution::Empirical { samples })
    }

    /// `F(gamma)`.
    pub fn cdf(&self, gamma: f64) -> f64 {
        match self {
            CostDistribution::Uniform { b } => (gamma / b).clamp(0.0, 1.0),
            CostDistribution::Gaussian { mean, std_dev } => {
                if *std_dev == 0.0 {
                    if gamma >= *mean {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    0.5 * erfc(-(gamma - mean) / (std_dev * std::f64::consts::SQRT_2))
                }
            }
            CostDistribution::Empirical { samples } => {
                samples.partition_point(|x| *x <= gamma) as f64 / samples.len() as f64
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            CostDistribution::Uniform { b } => b / 2.0,
            CostDistribution::Gaussian { mean, .. } => *mean,
            CostDistribution::Empirical { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }

    /// Same family with a different spread. Only gaussians have one.
    pub fn with_std_dev(&self, std_dev: f64) -> Result<Self> {
        match self {
            CostDistribution::Gaussian { mean, .. } => CostDistribution::gaussian(*mean, std_dev),
            _ => Err(Error::domain("only a gaussian cost model has a std_dev")),
        }
    }

    /// `count` i.i.d. draws, clamped below at `floor`.
    pub fn sample_with_floor(&self, rng: &mut RngHandle, count: usize, floor: f64) -> Result<KnownCosts> {
        if count == 0 {
            return Err(Error::domain("sample count must be at least 1"));
        }
        if floor.is_nan() || floor <= 0.0 {
            return Err(Error::domain(format!("cost floor {floor} must be positive")));
        }
        let draws: Vec<f64> = match self {
            CostDistribution::Uniform { b } => (0..count).map(|_| rng.random::<f64>() * b).collect(),
            CostDistribution::Gaussian { mean, std_dev } => {
                let normal = Normal::new(*mean, *std_dev)
                    .map_err(|e| Error::domain(format!("gaussian sampler: {e}")))?;
                (0..count).map(|_| normal.sample(rng)).collect()
            }
            CostDistribution::Empirical { samples } => (0..count)
                .map(|_| samples[rng.random_range(0..samples.len())])
                .collect(),
        };
        KnownCosts::new(draws.into_iter().map(|c| c.max(floor)).collect())
    }

    pub fn sample(&self, rng: &mut RngHandle, count: usize) -> Result<KnownCosts> {
        self.sample_with_floor(rng, count, DEFAULT_COST_FLOOR)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cdf_examples() {
        assert_eq!(CostDistribution::uniform(4.0).unwrap().cdf(2.0), 0.5);
        assert_eq!(CostDistribution::uniform(4.0).unwrap().cdf(-1.0), 0.0);
        assert_eq!(CostDistribution::uniform(4.0).unwrap().cdf(9.0), 1.0);
        assert_abs_diff_eq!(CostDistribution::gaussian(3.0, 1.0).unwrap().cdf(3.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            CostDistribution::empirical(vec![3.0, 1.0, 2.0]).unwrap().cdf(2.0),
            2.0 / 3.0,
            epsilon = 1e-15
        );
        // ties counted with multiplicity
        assert_eq!(CostDistribution::empirical(vec![1.0, 2.0, 2.0, 5.0]).unwrap().cdf(2.0), 0.75);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(CostDistribution::uniform(4.0).unwrap().mean(), 2.0);
        assert_eq!(CostDistribution::gaussian(3.0, 2.0).unwrap().mean(), 3.0);
        assert_eq!(CostDistribution::empirical(vec![1.0, 2.0, 3.0]).unwrap().mean(), 2.0);
    }

    #[test]
    fn uniform_sample_mean() {
        let d = CostDistribution::uniform(4.0).unwrap();
        let mut rng = RngHandle::new(11);
        let costs = d.sample(&mut rng, 100_000).unwrap();
        // sd of the mean is 4/sqrt(12)/sqrt(1e5) ~ 0.0037
        assert!((costs.mean() - 2.0).abs() < 0.02);
    }

    #[test]
    fn degenerate_gaussian_samples_are_constant() {
        let d = CostDistribution::gaussian(3.0, 0.0).unwrap();
        let mut rng = RngHandle::new(5);
        assert!(d.sample(&mut rng, 50).unwrap().as_slice().iter().all(|&c| c == 3.0));
        assert_eq!(d.cdf(2.999), 0.0);
        assert_eq!(d.cdf(3.0), 1.0);
    }

    #[test]
    fn sampling_is_deterministic_and_floored() {
        let d = CostDistribution::gaussian(0.5, 2.5).unwrap();
        let a = d.sample(&mut RngHandle::new(99), 1000).unwrap();
        let b = d.sample(&mut RngHandle::new(99), 1000).unwrap();
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|&c| c >= DEFAULT_COST_FLOOR));
        assert!(a.as_slice().contains(&DEFAULT_COST_FLOOR));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(CostDistribution::uniform(0.0).is_err());
        assert!(CostDistribution::gaussian(3.0, -1.0).is_err());
        assert!(CostDistribution::empirical(vec![]).is_err());
        assert!(KnownCosts::new(vec![1.0, 0.0]).is_err());
        assert!(KnownCosts::new(vec![]).is_err());
        let d = CostDistribution::uniform(1.0).unwrap();
        assert!(d.sample(&mut RngHandle::new(1), 0).is_err());
    }

    #[test]
    fn config_round_trip() {
        let d: CostDistribution =
            serde_json::from_str(r#"{"kind":"uniform","params":{"b":4}}"#).unwrap();
        assert_eq!(d, CostDistribution::Uniform { b: 4.0 });
        let g: CostDistribution =
            serde_json::from_str(r#"{"kind":"gaussian","params":{"mu":3,"delta":1.5}}"#).unwrap();
        assert_eq!(g, CostDistribution::Gaussian { mean: 3.0, std_dev: 1.5 });
        let e: CostDistribution =
            serde_json::from_str(r#"{"kind":"empirical_step","params":{"samples":[3,1]}}"#).unwrap();
        assert_eq!(e, CostDistribution::Empirical { samples: vec![1.0, 3.0] });
        assert!(serde_json::from_str::<CostDistribution>(r#"{"kind":"uniform","params":{"b":-1}}"#).is_err());
        let back = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<CostDistribution>(&back).unwrap(), g);
    }

    /// Kolmogorov distance between the empirical cdf of `n` draws and `F`.
    fn ks_distance(d: &CostDistribution, n: usize, seed: u64) -> f64 {
        let mut draws = d.sample_with_floor(&mut RngHandle::new(seed), n, f64::MIN_POSITIVE).unwrap().0;
        draws.sort_by(f64::total_cmp);
        let mut worst = 0.0f64;
        for (i, &x) in draws.iter().enumerate() {
            let f = d.cdf(x);
            worst = worst.max((f - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - f).abs());
        }
        worst
    }

    #[test]
    fn empirical_cdf_matches_analytic() {
        // the gaussian is centred well above 0, so the sampling floor never binds
        let models = [
            CostDistribution::uniform(4.0).unwrap(),
            CostDistribution::gaussian(10.0, 2.0).unwrap(),
        ];
        for (i, d) in models.iter().enumerate() {
            let ks = ks_distance(d, 1_000_000, 1000 + i as u64);
            assert!(ks < 0.005, "{d:?}: {ks}");
        }
    }

    proptest! {
        #[test]
        fn cdf_is_monotone(a in -10.0f64..20.0, b in -10.0f64..20.0, mu in 0.0f64..6.0, sd in 0.0f64..3.0, ub in 0.1f64..8.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let models = [
                CostDistribution::uniform(ub).unwrap(),
                CostDistribution::gaussian(mu, sd).unwrap(),
                CostDistribution::empirical(vec![mu, ub, sd, 1.0]).unwrap(),
            ];
            for d in &models {
                let (fl, fh) = (d.cdf(lo), d.cdf(hi));
                prop_assert!(fl <= fh);
                prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
            }
        }
    }
}
