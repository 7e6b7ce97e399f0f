//! Binomial and multinomial kernels shared by every solver.
//!
//! Probability masses are evaluated in log-space from a cached log-factorial
//! table, so populations in the hundreds never overflow. Expectations are
//! accumulated with Neumaier compensation in ascending-mass order; the
//! alternating-sign sums behind the indifference equations need it.

use std::sync::OnceLock;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Tolerance on `Σ q = 1` for type-probability vectors.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

const LOG_FACTORIAL_TABLE: usize = 1 << 14;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LOG_FACTORIAL_TABLE);
        let mut acc = NeumaierSum::new();
        table.push(0.0);
        for n in 1..LOG_FACTORIAL_TABLE {
            acc.add((n as f64).ln());
            table.push(acc.value());
        }
        table
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    match log_factorial_table().get(n as usize) {
        Some(v) => *v,
        None => ln_gamma(n as f64 + 1.0),
    }
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<T: IntoIterator<Item = f64>>(&mut self, iter: T) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.extend(values);
    acc.value()
}

/// A binomial distribution `B(trials, success_prob)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialSpec {
    trials: u64,
    success_prob: f64,
}

impl BinomialSpec {
    pub fn new(trials: u64, success_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&success_prob) {
            return Err(Error::domain(format!(
                "success probability {success_prob} outside [0, 1]"
            )));
        }
        Ok(Self {
            trials,
            success_prob,
        })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn success_prob(&self) -> f64 {
        self.success_prob
    }

    pub fn mean(&self) -> f64 {
        self.trials as f64 * self.success_prob
    }

    /// Log-mass at `k`; `k` must not exceed `trials`.
    fn ln_pmf_unchecked(&self, k: u64) -> f64 {
        let (n, p) = (self.trials, self.success_prob);
        if p == 0.0 {
            return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        if p == 1.0 {
            return if k == n { 0.0 } else { f64::NEG_INFINITY };
        }
        ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
    }

    pub fn pmf(&self, k: u64) -> Result<f64> {
        if k > self.trials {
            return Err(Error::domain(format!(
                "k = {k} outside support 0..={}",
                self.trials
            )));
        }
        Ok(self.ln_pmf_unchecked(k).exp())
    }

    /// Masses for `k = 0..=trials`.
    pub fn pmf_vec(&self) -> Vec<f64> {
        (0..=self.trials)
            .map(|k| self.ln_pmf_unchecked(k).exp())
            .collect()
    }
}

pub fn binom_pmf(spec: &BinomialSpec, k: u64) -> Result<f64> {
    spec.pmf(k)
}

/// `P(X >= threshold)`.
pub fn binom_tail(spec: &BinomialSpec, threshold: u64) -> f64 {
    if threshold == 0 {
        return 1.0;
    }
    if threshold > spec.trials {
        return 0.0;
    }
    let mut masses: Vec<f64> = (threshold..=spec.trials)
        .map(|k| spec.ln_pmf_unchecked(k).exp())
        .collect();
    masses.sort_by(f64::total_cmp);
    compensated_sum(masses).min(1.0)
}

/// `E[g(X)]`, summed in ascending order of mass with compensation.
pub fn binom_expect<F>(spec: &BinomialSpec, g: F) -> Result<f64>
where
    F: Fn(u64) -> f64,
{
    expect_with_masses(&spec.pmf_vec(), g)
}

/// Same as [`binom_expect`] for a precomputed mass vector indexed by outcome.
pub fn expect_with_masses<F>(masses: &[f64], g: F) -> Result<f64>
where
    F: Fn(u64) -> f64,
{
    let mut terms = Vec::with_capacity(masses.len());
    for (k, &mass) in masses.iter().enumerate() {
        let value = g(k as u64);
        if !value.is_finite() {
            return Err(Error::numerical(format!(
                "expectation integrand is {value} at k = {k}"
            )));
        }
        if mass > 0.0 {
            terms.push((mass, mass * value));
        }
    }
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(compensated_sum(terms.into_iter().map(|(_, t)| t)))
}

/// Realised number of users of each type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeCountVector(pub Vec<u64>);

impl TypeCountVector {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

impl From<Vec<u64>> for TypeCountVector {
    fn from(v: Vec<u64>) -> Self {
        TypeCountVector(v)
    }
}

/// Every way to write `total` as an ordered sum of `parts` nonnegative
/// integers, in lexicographic order.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<u64>>,
}

impl Iterator for Compositions {
    type Item = TypeCountVector;

    fn next(&mut self) -> Option<Self::Item> {
        let out = self.current.clone()?;
        let c = self.current.as_mut().expect("checked above");
        let last = c.len() - 1;
        match c.iter().rposition(|&x| x > 0) {
            Some(k) if k > 0 => {
                let rem = c[k] - 1;
                c[k - 1] += 1;
                c[k] = 0;
                c[last] = rem;
            }
            _ => self.current = None,
        }
        Some(TypeCountVector(out))
    }
}

/// Compositions of `total` into `parts` parts; `parts` must be at least 1.
pub fn multinomial_compositions(total: u64, parts: usize) -> Result<Compositions> {
    if parts == 0 {
        return Err(Error::domain("a composition needs at least one part"));
    }
    let mut first = vec![0; parts];
    first[parts - 1] = total;
    Ok(Compositions {
        current: Some(first),
    })
}

/// `C(total + parts - 1, parts - 1)`, saturating at `u128::MAX`.
pub fn composition_count(total: u64, parts: usize) -> u128 {
    if parts == 0 {
        return 0;
    }
    let n = total as u128 + parts as u128 - 1;
    let k = (parts as u128 - 1).min(total as u128);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Checks that `q` is a probability vector.
pub fn validate_probabilities(q: &[f64]) -> Result<()> {
    if q.is_empty() {
        return Err(Error::domain("empty probability vector"));
    }
    if let Some(bad) = q.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::domain(format!("invalid probability {bad}")));
    }
    let total = compensated_sum(q.iter().copied());
    if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(Error::domain(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Multinomial probability of `counts` under type probabilities `q`.
pub fn multinomial_pmf(counts: &[u64], q: &[f64]) -> Result<f64> {
    if counts.len() != q.len() {
        return Err(Error::domain(format!(
            "{} counts for {} types",
            counts.len(),
            q.len()
        )));
    }
    let total: u64 = counts.iter().sum();
    let mut ln_p = ln_factorial(total);
    for (&n, &qi) in counts.iter().zip(q) {
        ln_p -= ln_factorial(n);
        if n > 0 {
            if qi == 0.0 {
                return Ok(0.0);
            }
            ln_p += n as f64 * qi.ln();
        }
    }
    Ok(ln_p.exp())
}

/// Seeded generator. ChaCha20 with the 64-bit seed expanded by
/// `SeedableRng::seed_from_u64` and an explicit stream id, so a `(seed,
/// stream)` pair yields the same sequence on every platform.
#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent sub-generator: same key, ChaCha stream `stream`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngHandle {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// One multinomial draw of `total` users over type probabilities `q`, by
/// sequential conditional binomials.
pub fn sample_type_counts(total: u64, q: &[f64], rng: &mut RngHandle) -> Result<TypeCountVector> {
    validate_probabilities(q)?;
    let mut counts = vec![0u64; q.len()];
    let mut remaining = total;
    let mut mass_left = 1.0f64;
    let last = q.len() - 1;
    for (i, &qi) in q.iter().enumerate().take(last) {
        if remaining == 0 {
            break;
        }
        let p = if mass_left > 0.0 {
            (qi / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, p)
            .map_err(|e| Error::domain(format!("binomial draw: {e}")))?
            .sample(rng);
        counts[i] = draw;
        remaining -= draw;
        mass_left -= qi;
    }
    counts[last] += remaining;
    Ok(TypeCountVector(counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(n: u64, p: f64) -> BinomialSpec {
        BinomialSpec::new(n, p).unwrap()
    }

    #[test]
    fn pmf_small_cases() {
        assert_abs_diff_eq!(binom_pmf(&spec(2, 0.5), 1).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(binom_pmf(&spec(5, 0.0), 0).unwrap(), 1.0);
        assert_eq!(binom_pmf(&spec(5, 0.0), 3).unwrap(), 0.0);
        assert_eq!(binom_pmf(&spec(5, 1.0), 5).unwrap(), 1.0);
    }

    #[test]
    fn pmf_out_of_range_is_domain_error() {
        assert!(matches!(binom_pmf(&spec(3, 0.2), 4), Err(Error::Domain(_))));
        assert!(BinomialSpec::new(3, 1.5).is_err());
        assert!(BinomialSpec::new(3, f64::NAN).is_err());
    }

    #[test]
    fn tail_small_cases() {
        assert_eq!(binom_tail(&spec(3, 1.0), 3), 1.0);
        assert_abs_diff_eq!(binom_tail(&spec(2, 0.5), 1), 0.75, epsilon = 1e-12);
        assert_eq!(binom_tail(&spec(7, 0.3), 0), 1.0);
        assert_eq!(binom_tail(&spec(7, 0.3), 8), 0.0);
    }

    #[test]
    fn expectation_small_cases() {
        assert_abs_diff_eq!(
            binom_expect(&spec(10, 0.3), |k| k as f64).unwrap(),
            3.0,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(binom_expect(&spec(17, 0.41), |_| 1.0).unwrap(), 1.0, epsilon = 1e-12);
        // indifference at p = 3/4 for R = 2.5, n0 = 2, three users
        let u = binom_expect(&spec(2, 0.75), |k| {
            if k + 1 >= 2 {
                2.5 / (k as f64 + 1.0) - 1.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert_abs_diff_eq!(u, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn expectation_rejects_non_finite_integrand() {
        let err = binom_expect(&spec(3, 0.5), |k| if k == 2 { f64::INFINITY } else { 0.0 });
        assert!(matches!(err, Err(Error::Numerical(_))));
    }

    #[test]
    fn compositions_small_cases() {
        let all: Vec<Vec<u64>> = multinomial_compositions(2, 2)
            .unwrap()
            .map(|c| c.0)
            .collect();
        assert_eq!(all, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        let empty: Vec<Vec<u64>> = multinomial_compositions(0, 3)
            .unwrap()
            .map(|c| c.0)
            .collect();
        assert_eq!(empty, vec![vec![0, 0, 0]]);
        assert_eq!(multinomial_compositions(120, 3).unwrap().count(), 7381);
        assert_eq!(composition_count(120, 3), 7381);
        assert!(multinomial_compositions(3, 0).is_err());
    }

    #[test]
    fn sampling_degenerate_and_empty() {
        let mut rng = RngHandle::new(1);
        assert_eq!(sample_type_counts(5, &[1.0, 0.0], &mut rng).unwrap().0, vec![5, 0]);
        assert_eq!(sample_type_counts(0, &[0.5, 0.5], &mut rng).unwrap().0, vec![0, 0]);
        assert!(sample_type_counts(5, &[0.5, 0.6], &mut rng).is_err());
        assert!(sample_type_counts(5, &[1.5, -0.5], &mut rng).is_err());
    }

    #[test]
    fn large_multinomial_draw_is_near_mean() {
        let mut rng = RngHandle::new(20240607);
        let q = [1.0 / 3.0; 3];
        let n = 100_000u64;
        let counts = sample_type_counts(n, &q, &mut rng).unwrap();
        let sigma = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for &c in counts.as_slice() {
            assert!((c as f64 - n as f64 / 3.0).abs() < 3.0 * sigma, "{c}");
        }
        assert_eq!(counts.total(), n);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = RngHandle::with_stream(9, 4);
        let mut b = RngHandle::with_stream(9, 4);
        let mut c = RngHandle::with_stream(9, 5);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
