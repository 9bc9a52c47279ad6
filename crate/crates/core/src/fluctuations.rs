//! Gaussian fluctuations of `sqrt(N) (Z^N - z(z0, .))`.
//!
//! The limit `V` solves the linear SDE `dV = F'(z(t)) V dt + sqrt(g(z(t))) dB`
//! with `V_0 = 0`, so `Var(V_t) = S(t)` obeys
//! `dS/dt = 2 F'(z(t)) S + g(z(t))`, `S(0) = 0`. That ODE is the primary
//! evaluator. The explicit form `F(z(t))^2 \int g / F^3` is evaluated after
//! the change of variable `y = z(v)`, i.e. as
//! `F(z(t))^2 \int_0^t g(z(v)) / F(z(v))^2 dv`, and only while `z(t)` stays
//! more than [`FALLBACK_DISTANCE`] from `x_plus`; closer than that the
//! prefactor and the integral lose precision against each other and the ODE
//! value is returned instead.
//!
//! For `z0 != x_plus` the integrand `1 / F(z(v))` in the stochastic-integral
//! representation grows without bound as `z(v) -> x_plus`. Only the variance
//! and the marginal laws are used here, which stay finite.
//!
//! Everything requires `u > 0`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deterministic::{
    check_initial, check_time, equilibria, solve_deterministic, DeterministicSolution,
    DriftFunctions,
};
use crate::error::{MoranError, Result};
use crate::ode;
use crate::params::ModelParams;
use crate::quadrature;
use crate::rng::stream_rng;

pub const DEFAULT_VARIANCE_STEP: f64 = 1e-3;
pub const FALLBACK_DISTANCE: f64 = 1e-4;

fn require_mutation(params: &ModelParams) -> Result<()> {
    if params.u() > 0.0 {
        Ok(())
    } else {
        Err(MoranError::Unsupported(
            "fluctuation theory needs u > 0".into(),
        ))
    }
}

/// Which route produced a variance value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSource {
    /// Exponential form at `z0 = x_plus`.
    Equilibrium,
    /// Quadrature of the explicit integral.
    Quadrature,
    /// `z(t)` too close to `x_plus`; the variance ODE was used.
    OdeFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceValue {
    pub value: f64,
    pub source: VarianceSource,
}

/// Time-indexed Gaussian law of `V^{z0}`.
#[derive(Debug, Clone, Copy)]
pub struct FluctuationLaw {
    z0: f64,
    drift: DriftFunctions,
    path: DeterministicSolution,
    x_plus: f64,
    rate: f64,
}

impl FluctuationLaw {
    pub fn new(z0: f64, params: &ModelParams) -> Result<Self> {
        require_mutation(params)?;
        check_initial(z0)?;
        let drift = DriftFunctions::new(params);
        Ok(Self {
            z0,
            drift,
            path: solve_deterministic(z0, params)?,
            x_plus: equilibria(params)?.x_plus,
            rate: drift.relaxation_rate()?,
        })
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn deterministic(&self) -> &DeterministicSolution {
        &self.path
    }

    pub fn at_equilibrium(&self) -> bool {
        self.z0 == self.x_plus
    }

    /// `g(x_plus) / (2 k)` with `k = -F'(x_plus)`, the variance of the
    /// stationary Gaussian limit.
    pub fn limit_variance(&self) -> f64 {
        self.drift.jump_activity(self.x_plus) / (2.0 * self.rate)
    }

    fn equilibrium_variance(&self, t: f64) -> f64 {
        self.limit_variance() * -(-2.0 * self.rate * t).exp_m1()
    }

    #[inline]
    fn variance_rhs(&self, t: f64, sigma: f64) -> f64 {
        let z = self.path.at(t);
        2.0 * self.drift.drift_derivative(z) * sigma + self.drift.jump_activity(z)
    }

    /// RK4 path of the variance equation on `[0, t_end]`.
    pub fn variance_ode(&self, t_end: f64, step: f64) -> Result<Vec<(f64, f64)>> {
        check_time(t_end)?;
        let mut out = ode::integrate_fixed(|t, v| self.variance_rhs(t, v), 0.0, 0.0, t_end, step)?;
        for p in &mut out {
            p.1 = p.1.max(0.0);
        }
        Ok(out)
    }

    fn variance_ode_at(&self, t: f64) -> f64 {
        ode::integrate_to(
            |s, v| self.variance_rhs(s, v),
            0.0,
            0.0,
            t,
            DEFAULT_VARIANCE_STEP,
        )
        .max(0.0)
    }

    /// `Var(V_t)`: exact at equilibrium, otherwise from the variance ODE.
    pub fn variance(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if self.at_equilibrium() {
            Ok(self.equilibrium_variance(t))
        } else {
            Ok(self.variance_ode_at(t))
        }
    }

    /// Variance at every point of a nondecreasing grid in one ODE pass.
    pub fn variance_curve(&self, times: &[f64]) -> Result<Vec<f64>> {
        check_grid(times, false)?;
        if self.at_equilibrium() {
            return Ok(times
                .iter()
                .map(|&t| self.equilibrium_variance(t))
                .collect());
        }
        let mut out = Vec::with_capacity(times.len());
        let (mut t, mut sigma) = (0.0, 0.0);
        for &next in times {
            sigma = ode::integrate_to(
                |s, v| self.variance_rhs(s, v),
                t,
                sigma,
                next,
                DEFAULT_VARIANCE_STEP,
            );
            t = next;
            out.push(sigma.max(0.0));
        }
        Ok(out)
    }

    /// Variance through the explicit integral, with fallback near `x_plus`.
    pub fn variance_closed_form(&self, t: f64) -> Result<VarianceValue> {
        check_time(t)?;
        if self.at_equilibrium() {
            return Ok(VarianceValue {
                value: self.equilibrium_variance(t),
                source: VarianceSource::Equilibrium,
            });
        }
        if t == 0.0 {
            return Ok(VarianceValue {
                value: 0.0,
                source: VarianceSource::Quadrature,
            });
        }
        let zt = self.path.at(t);
        if (zt - self.x_plus).abs() <= FALLBACK_DISTANCE {
            return Ok(VarianceValue {
                value: self.variance_ode_at(t),
                source: VarianceSource::OdeFallback,
            });
        }
        let integral = quadrature::integrate_default(
            |v| {
                let z = self.path.at(v);
                let f = self.drift.drift(z);
                self.drift.jump_activity(z) / (f * f)
            },
            0.0,
            t,
        )?;
        let f = self.drift.drift(zt);
        Ok(VarianceValue {
            value: f * f * integral,
            source: VarianceSource::Quadrature,
        })
    }

    /// `E[exp(i theta V_t)] = exp(-theta^2 Var(V_t) / 2)`, as `(re, im)`.
    pub fn characteristic(&self, t: f64, theta: f64) -> Result<(f64, f64)> {
        let var = self.variance_closed_form(t)?.value;
        Ok(((-0.5 * theta * theta * var).exp(), 0.0))
    }

    /// `exp(\int_t0^t1 F'(z(v)) dv)`, the one-step decay of the linear SDE.
    fn transition_factor(&self, t0: f64, t1: f64) -> Result<f64> {
        if self.at_equilibrium() {
            return Ok((-self.rate * (t1 - t0)).exp());
        }
        let integral = quadrature::integrate_default(
            |v| self.drift.drift_derivative(self.path.at(v)),
            t0,
            t1,
        )?;
        Ok(integral.exp())
    }

    /// Exact Gaussian sampling of `V` along `t_grid` (which must start at 0
    /// and strictly increase). Row `p` is path `p`, drawn from stream
    /// `(seed, p)`.
    pub fn sample_paths(&self, t_grid: &[f64], n_paths: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        check_grid(t_grid, true)?;
        if t_grid[0] != 0.0 {
            return Err(MoranError::Domain("sampling grid must start at 0".into()));
        }
        if n_paths == 0 {
            return Err(MoranError::Domain("n_paths must be positive".into()));
        }
        let variance = self.variance_curve(t_grid)?;
        let mut steps = Vec::with_capacity(t_grid.len().saturating_sub(1));
        for i in 1..t_grid.len() {
            let a = self.transition_factor(t_grid[i - 1], t_grid[i])?;
            let innovation = (variance[i] - a * a * variance[i - 1]).max(0.0);
            steps.push((a, innovation.sqrt()));
        }
        Ok((0..n_paths as u64)
            .into_par_iter()
            .map(|p| {
                let mut rng = stream_rng(seed, p);
                let mut v = 0.0;
                let mut row = Vec::with_capacity(t_grid.len());
                row.push(v);
                for &(a, sd) in &steps {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    v = a * v + sd * xi;
                    row.push(v);
                }
                row
            })
            .collect())
    }
}

pub(crate) fn check_grid(times: &[f64], strict: bool) -> Result<()> {
    if times.is_empty() {
        return Err(MoranError::Domain("time grid is empty".into()));
    }
    check_time(times[0])?;
    for w in times.windows(2) {
        let ok = if strict { w[1] > w[0] } else { w[1] >= w[0] };
        if !ok {
            return Err(MoranError::Domain(format!(
                "time grid must be increasing, found {} then {}",
                w[0], w[1]
            )));
        }
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(MoranError::Domain("time grid must be finite".into()));
    }
    Ok(())
}

pub fn variance_ode(
    z0: f64,
    t_end: f64,
    step: f64,
    params: &ModelParams,
) -> Result<Vec<(f64, f64)>> {
    FluctuationLaw::new(z0, params)?.variance_ode(t_end, step)
}

pub fn variance_closed_form(z0: f64, t: f64, params: &ModelParams) -> Result<VarianceValue> {
    FluctuationLaw::new(z0, params)?.variance_closed_form(t)
}

pub fn characteristic_fn(z0: f64, t: f64, theta: f64, params: &ModelParams) -> Result<(f64, f64)> {
    FluctuationLaw::new(z0, params)?.characteristic(t, theta)
}

pub fn sample_fluctuation_paths(
    z0: f64,
    t_grid: &[f64],
    n_paths: usize,
    seed: u64,
    params: &ModelParams,
) -> Result<Vec<Vec<f64>>> {
    FluctuationLaw::new(z0, params)?.sample_paths(t_grid, n_paths, seed)
}
