//! Two-type Moran model with mutation and selection.
//!
//! * [`params`]: parameters and the density-dependent kernel.
//! * [`deterministic`]: the `N -> infinity` limit in closed form, its
//!   equilibria, and the equivalent linear mutation-selection model.
//! * [`fluctuations`]: the Gaussian fluctuation law around that limit.
//! * [`sim`]: exact simulation of the finite-N chain and ensembles.
//! * [`stationary`]: the exact stationary law and its Gaussian limit.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deterministic;
pub mod error;
pub mod export;
pub mod fluctuations;
pub mod ode;
pub mod params;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod stationary;
pub mod stats;

pub use deterministic::{
    equilibria, linear_model_solution, ode_oracle, solve_deterministic, DeterministicSolution,
    DriftFunctions, Equilibria, LinearModelSolution, Regime, Stability,
};
pub use error::{MoranError, Result};
pub use fluctuations::{
    characteristic_fn, sample_fluctuation_paths, variance_closed_form, variance_ode,
    FluctuationLaw, VarianceSource, VarianceValue,
};
pub use params::{chain_rates, kernel_q, kernel_value, Jump, KernelValue, ModelParams};
pub use sim::{
    run_ensemble, sample_z_at, simulate_grid_paths, simulate_path, EnsembleSummary, PathEvent,
    ReferenceStats, TrajectoryPath,
};
pub use stationary::{
    gaussian_limit_check, stationary_distribution, stationary_sampler, GaussianLimitReport,
    StationaryDistribution,
};
