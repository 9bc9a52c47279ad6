//! Model parameters and the density-dependent transition kernel.
//!
//! The chain `X^N` counts type-0 individuals. Its birth and death rates are
//! `N * q(k / N, +1)` and `N * q(k / N, -1)`, where `q` is the kernel below.

use serde::{Deserialize, Serialize};

use crate::error::{MoranError, Result};

/// One Moran model instance: population size, selection, mutation and the
/// probability that a mutation produces type 0.
///
/// `nu1` is never stored; it is always `1 - nu0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "N")]
    population_size: u64,
    s: f64,
    u: f64,
    nu0: f64,
}

impl ModelParams {
    pub fn new(population_size: u64, s: f64, u: f64, nu0: f64) -> Result<Self> {
        let p = Self {
            population_size,
            s,
            u,
            nu0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks the invariants. Needed after deserialization, which bypasses `new`.
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 1 {
            return Err(MoranError::InvalidParams("N must be at least 1".into()));
        }
        if !(self.s.is_finite() && self.s >= 0.0) {
            return Err(MoranError::InvalidParams(format!(
                "s must be finite and nonnegative, got {}",
                self.s
            )));
        }
        if !(self.u.is_finite() && self.u >= 0.0) {
            return Err(MoranError::InvalidParams(format!(
                "u must be finite and nonnegative, got {}",
                self.u
            )));
        }
        if !(self.nu0 > 0.0 && self.nu0 < 1.0) {
            return Err(MoranError::InvalidParams(format!(
                "nu0 must lie in (0, 1), got {}",
                self.nu0
            )));
        }
        Ok(())
    }

    /// Same rates with a different population size.
    pub fn with_population_size(&self, population_size: u64) -> Result<Self> {
        Self::new(population_size, self.s, self.u, self.nu0)
    }

    pub fn population_size(&self) -> u64 {
        self.population_size
    }

    pub fn n(&self) -> f64 {
        self.population_size as f64
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn nu1(&self) -> f64 {
        1.0 - self.nu0
    }
}

/// Direction of a jump of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Jump {
    Down,
    Up,
}

impl Jump {
    pub fn delta(self) -> i64 {
        match self {
            Jump::Down => -1,
            Jump::Up => 1,
        }
    }

    pub fn from_delta(delta: i64) -> Option<Self> {
        match delta {
            -1 => Some(Jump::Down),
            1 => Some(Jump::Up),
            _ => None,
        }
    }
}

/// A nonzero entry of the kernel: jump direction and its rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub jump: Jump,
    pub rate: f64,
}

fn check_proportion(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(MoranError::Domain(format!(
            "proportion must lie in [0, 1], got {p}"
        )))
    }
}

/// Rate of a jump of the given direction from proportion `p`.
pub fn kernel_value(p: f64, jump: Jump, params: &ModelParams) -> Result<KernelValue> {
    check_proportion(p)?;
    let rate = match jump {
        Jump::Up => (1.0 + params.s) * p * (1.0 - p) + params.u * params.nu0 * (1.0 - p),
        Jump::Down => p * (1.0 - p) + params.u * params.nu1() * p,
    };
    Ok(KernelValue { jump, rate })
}

/// The kernel `q(p, l)` for an arbitrary integer jump `l`; zero unless `|l| = 1`.
pub fn kernel_q(p: f64, jump: i64, params: &ModelParams) -> Result<f64> {
    check_proportion(p)?;
    match Jump::from_delta(jump) {
        Some(j) => kernel_value(p, j, params).map(|kv| kv.rate),
        None => Ok(0.0),
    }
}

/// Birth and death rates `(lambda_k, mu_k)` of the chain at state `k`.
pub fn chain_rates(k: u64, params: &ModelParams) -> Result<(f64, f64)> {
    let n = params.population_size;
    if k > n {
        return Err(MoranError::Domain(format!(
            "state {k} outside {{0, ..., {n}}}"
        )));
    }
    Ok(chain_rates_unchecked(k, params))
}

#[inline]
pub(crate) fn chain_rates_unchecked(k: u64, params: &ModelParams) -> (f64, f64) {
    let n = params.n();
    let kf = k as f64;
    let rest = (params.population_size - k) as f64;
    let contact = kf * rest / n;
    let birth = contact * (1.0 + params.s) + rest * params.u * params.nu0;
    let death = contact + kf * params.u * params.nu1();
    (birth, death)
}
