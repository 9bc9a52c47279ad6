//! Exact stationary law of `X^N` for `u > 0`.
//!
//! `pi(k)` is proportional to `prod_{i=1}^k lambda_{i-1} / mu_i`. Weights are
//! accumulated as logarithms and normalized after a single max shift, so
//! populations in the tens of thousands neither overflow nor underflow the
//! bulk of the distribution.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::deterministic::{equilibria, DriftFunctions};
use crate::error::{MoranError, Result};
use crate::params::{chain_rates_unchecked, ModelParams};
use crate::rng::stream_rng;
use crate::stats::{ks_distance_discrete, normal_cdf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub params: ModelParams,
    pub log_weights: Vec<f64>,
    pub probabilities: Vec<f64>,
}

pub fn stationary_distribution(params: &ModelParams) -> Result<StationaryDistribution> {
    if params.u() <= 0.0 {
        return Err(MoranError::Unsupported(
            "u = 0: states 0 and N are absorbing, no unique stationary law".into(),
        ));
    }
    let n = params.population_size();
    let mut log_weights = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    log_weights.push(acc);
    let mut prev_birth = chain_rates_unchecked(0, params).0;
    for k in 1..=n {
        let (birth, death) = chain_rates_unchecked(k, params);
        acc += prev_birth.ln() - death.ln();
        log_weights.push(acc);
        prev_birth = birth;
    }
    let shift = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probabilities: Vec<f64> = log_weights.iter().map(|l| (l - shift).exp()).collect();
    let total: f64 = probabilities.iter().sum();
    for p in &mut probabilities {
        *p /= total;
    }
    Ok(StationaryDistribution {
        params: *params,
        log_weights,
        probabilities,
    })
}

impl StationaryDistribution {
    pub fn population_size(&self) -> u64 {
        self.params.population_size()
    }

    pub fn mean_proportion(&self) -> f64 {
        let n = self.params.n();
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| p * k as f64 / n)
            .sum()
    }

    pub fn variance_proportion(&self) -> f64 {
        let n = self.params.n();
        let mean = self.mean_proportion();
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let d = k as f64 / n - mean;
                p * d * d
            })
            .sum()
    }

    /// `P(|Z - center| >= epsilon)` under the stationary law of `Z = X / N`.
    pub fn mass_outside(&self, center: f64, epsilon: f64) -> f64 {
        let n = self.params.n();
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(k, _)| (*k as f64 / n - center).abs() >= epsilon)
            .map(|(_, p)| p)
            .sum()
    }

    /// Largest relative violation of `pi(k) lambda_k = pi(k+1) mu_{k+1}` over
    /// pairs whose fluxes are both normal floats.
    pub fn detailed_balance_error(&self) -> f64 {
        let n = self.population_size();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let up = self.probabilities[k as usize] * chain_rates_unchecked(k, &self.params).0;
            let down =
                self.probabilities[k as usize + 1] * chain_rates_unchecked(k + 1, &self.params).1;
            if up < 1e-290 || down < 1e-290 {
                continue;
            }
            worst = worst.max((up - down).abs() / up.max(down));
        }
        worst
    }

    /// `max_k |(pi Q)_k|` for the tridiagonal generator.
    pub fn generator_residual(&self) -> f64 {
        let n = self.population_size() as usize;
        let pi = &self.probabilities;
        let rates: Vec<(f64, f64)> = (0..=n as u64)
            .map(|k| chain_rates_unchecked(k, &self.params))
            .collect();
        (0..=n)
            .map(|j| {
                let mut r = -pi[j] * (rates[j].0 + rates[j].1);
                if j > 0 {
                    r += pi[j - 1] * rates[j - 1].0;
                }
                if j < n {
                    r += pi[j + 1] * rates[j + 1].1;
                }
                r.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Cumulative distribution with the last entry pinned to 1.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out: Vec<f64> = self
            .probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = out.last_mut() {
            *last = 1.0;
        }
        out
    }
}

/// `n` i.i.d. states by inverse-CDF lookup.
pub fn stationary_sampler(dist: &StationaryDistribution, n: usize, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(MoranError::Domain("sample count must be at least 1".into()));
    }
    let cdf = dist.cdf();
    let top = cdf.len() - 1;
    let mut rng = stream_rng(seed, 0);
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cdf.partition_point(|&c| c <= u).min(top) as u64
        })
        .collect())
}

/// Comparison of the exact stationary law with its Gaussian limit
/// `N(0, g(x_plus) / (2 k))`, `k = -F'(x_plus)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLimitReport {
    pub population_size: u64,
    pub x_plus: f64,
    pub mean_proportion: f64,
    /// `N Var(Z)` from the exact law.
    pub empirical_var_scaled: f64,
    pub target: f64,
    pub relative_error: f64,
    /// KS distance between the law of `sqrt(N) (Z - x_plus)` and the target.
    pub ks_statistic: f64,
    pub epsilon: f64,
    /// `P(|Z - x_plus| >= epsilon)`.
    pub mass_outside: f64,
}

pub const DEFAULT_EPSILON: f64 = 0.05;

pub fn gaussian_limit_check(params: &ModelParams) -> Result<GaussianLimitReport> {
    gaussian_limit_check_with(params, DEFAULT_EPSILON)
}

pub fn gaussian_limit_check_with(
    params: &ModelParams,
    epsilon: f64,
) -> Result<GaussianLimitReport> {
    let dist = stationary_distribution(params)?;
    let drift = DriftFunctions::new(params);
    let x_plus = equilibria(params)?.x_plus;
    let target = drift.jump_activity(x_plus) / (2.0 * drift.relaxation_rate()?);
    let n = params.n();
    let scaled = n * dist.variance_proportion();
    let root = n.sqrt();
    let atoms: Vec<(f64, f64)> = dist
        .probabilities
        .iter()
        .enumerate()
        .map(|(k, &p)| (root * (k as f64 / n - x_plus), p))
        .collect();
    let ks_statistic = ks_distance_discrete(&atoms, |x| normal_cdf(x, target));
    Ok(GaussianLimitReport {
        population_size: params.population_size(),
        x_plus,
        mean_proportion: dist.mean_proportion(),
        empirical_var_scaled: scaled,
        target,
        relative_error: (scaled - target).abs() / target,
        ks_statistic,
        epsilon,
        mass_outside: dist.mass_outside(x_plus, epsilon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::chain_rates;

    fn reference(n: u64) -> ModelParams {
        ModelParams::new(n, 1.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn two_state_chain() {
        let p = ModelParams::new(1, 0.7, 0.4, 0.3).unwrap();
        let d = stationary_distribution(&p).unwrap();
        let ratio = d.probabilities[0] / d.probabilities[1];
        assert!((ratio - 0.7 / 0.3).abs() < 1e-14);
    }

    #[test]
    fn three_state_uniform_example() {
        let p = ModelParams::new(2, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(chain_rates(0, &p).unwrap().0, 1.0);
        assert_eq!(chain_rates(1, &p).unwrap(), (1.0, 1.0));
        assert_eq!(chain_rates(2, &p).unwrap().1, 1.0);
        let d = stationary_distribution(&p).unwrap();
        for q in &d.probabilities {
            assert!((q - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_mutation_is_unsupported() {
        let p = ModelParams::new(20, 1.0, 0.0, 0.5).unwrap();
        assert!(matches!(
            stationary_distribution(&p),
            Err(MoranError::Unsupported(_))
        ));
        assert!(gaussian_limit_check(&p).is_err());
    }

    #[test]
    fn normalized_and_balanced() {
        for n in [1, 7, 100, 2000, 5000] {
            let d = stationary_distribution(&reference(n)).unwrap();
            assert_eq!(d.probabilities.len(), n as usize + 1);
            let total: f64 = d.probabilities.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(d.probabilities.iter().all(|&q| q >= 0.0));
            assert!(d.detailed_balance_error() < 1e-10);
            assert!(d.generator_residual() < 1e-9);
        }
    }

    #[test]
    fn large_population_does_not_overflow() {
        let d = stationary_distribution(&reference(100_000)).unwrap();
        assert!(d.probabilities.iter().all(|q| q.is_finite()));
        assert!((d.mean_proportion() - 0.809_017).abs() < 1e-3);
    }

    #[test]
    fn mean_near_stable_point() {
        let d = stationary_distribution(&reference(5000)).unwrap();
        assert!((d.mean_proportion() - 0.809_017).abs() < 0.02);
    }

    #[test]
    fn sampler_frequencies() {
        let d = stationary_distribution(&reference(100)).unwrap();
        let n = 100_000;
        let samples = stationary_sampler(&d, n, 3).unwrap();
        assert_eq!(samples, stationary_sampler(&d, n, 3).unwrap());
        let mut counts = vec![0usize; 101];
        for &k in &samples {
            counts[k as usize] += 1;
        }
        for (k, &c) in counts.iter().enumerate() {
            let p = d.probabilities[k];
            if p > 1e-3 {
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((c as f64 / n as f64 - p).abs() < 4.0 * se, "state {k}");
            }
        }
        let one = stationary_sampler(&d, 1, 9).unwrap();
        assert!(one.len() == 1 && one[0] <= 100);
        assert!(stationary_sampler(&d, 0, 9).is_err());
    }

    #[test]
    fn gaussian_limit_reference() {
        let r = gaussian_limit_check(&reference(5000)).unwrap();
        assert!((r.target - 0.319_098).abs() < 1e-6);
        assert!(r.relative_error < 0.05, "{r:?}");
        assert!(r.mass_outside < 0.01);
        assert!(r.ks_statistic < 0.05);
    }
}
