//! Exact event-driven simulation of the birth-death chain `X^N`.
//!
//! At state `k` the chain waits an `Exp(lambda_k + mu_k)` time and then
//! jumps up with probability `lambda_k / (lambda_k + mu_k)`. With `u = 0`
//! the boundary states have total rate zero and the path stops there.
//!
//! Ensembles keep only the states on a time grid, never the event list;
//! paths are generated in parallel and reduced in path order, so summaries
//! are bit-identical for any thread count.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deterministic::DeterministicSolution;
use crate::error::{MoranError, Result};
use crate::fluctuations::check_grid;
use crate::params::{chain_rates_unchecked, ModelParams};
use crate::rng::{stream_rng, StreamRng};
use crate::stats::mean_variance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEvent {
    pub time: f64,
    pub state: u64,
}

/// A full sample path on `[0, final_time]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPath {
    pub params: ModelParams,
    pub initial_state: u64,
    pub events: Vec<PathEvent>,
    pub final_time: f64,
    /// Total rate hit zero before `final_time` (only possible with `u = 0`).
    pub absorbed: bool,
}

impl TrajectoryPath {
    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Result<u64> {
        if !(0.0..=self.final_time).contains(&t) {
            return Err(MoranError::Domain(format!(
                "time {t} outside [0, {}]",
                self.final_time
            )));
        }
        let idx = self.events.partition_point(|e| e.time <= t);
        Ok(if idx == 0 {
            self.initial_state
        } else {
            self.events[idx - 1].state
        })
    }

    pub fn final_state(&self) -> u64 {
        self.events.last().map_or(self.initial_state, |e| e.state)
    }
}

/// Proportions `X_t / N` of a stored path at the requested times.
pub fn sample_z_at(times: &[f64], path: &TrajectoryPath) -> Result<Vec<f64>> {
    let n = path.params.n();
    times
        .iter()
        .map(|&t| path.state_at(t).map(|k| k as f64 / n))
        .collect()
}

/// Initial state for a target proportion: `round(N z0)`.
pub fn initial_state(z0: f64, params: &ModelParams) -> Result<u64> {
    crate::deterministic::check_initial(z0)?;
    Ok((params.n() * z0).round() as u64)
}

/// Gillespie stepper holding the next pending event.
struct Gillespie<'a, R: Rng> {
    params: &'a ModelParams,
    rng: R,
    state: u64,
    next: Option<PathEvent>,
}

impl<'a, R: Rng> Gillespie<'a, R> {
    fn new(k0: u64, params: &'a ModelParams, rng: R) -> Self {
        let mut g = Self {
            params,
            rng,
            state: k0,
            next: None,
        };
        g.draw(0.0);
        g
    }

    fn draw(&mut self, now: f64) {
        let (birth, death) = chain_rates_unchecked(self.state, self.params);
        let total = birth + death;
        if total <= 0.0 {
            self.next = None;
            return;
        }
        let wait: f64 = Exp1.sample(&mut self.rng);
        let up = self.rng.random::<f64>() * total < birth;
        let state = if up { self.state + 1 } else { self.state - 1 };
        self.next = Some(PathEvent {
            time: now + wait / total,
            state,
        });
    }

    /// Applies every event with time `<= horizon`.
    fn advance_to<F: FnMut(PathEvent)>(&mut self, horizon: f64, mut on_event: F) {
        while let Some(ev) = self.next {
            if ev.time > horizon {
                break;
            }
            self.state = ev.state;
            on_event(ev);
            self.draw(ev.time);
        }
    }

    fn absorbed(&self) -> bool {
        self.next.is_none()
    }
}

fn check_state(k0: u64, params: &ModelParams) -> Result<()> {
    if k0 > params.population_size() {
        return Err(MoranError::Domain(format!(
            "initial state {k0} outside {{0, ..., {}}}",
            params.population_size()
        )));
    }
    Ok(())
}

fn simulate_with_rng(
    k0: u64,
    t_end: f64,
    rng: StreamRng,
    params: &ModelParams,
) -> Result<TrajectoryPath> {
    check_state(k0, params)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(MoranError::Domain(format!(
            "t_end must be positive and finite, got {t_end}"
        )));
    }
    let mut sim = Gillespie::new(k0, params, rng);
    let mut events = Vec::new();
    sim.advance_to(t_end, |ev| events.push(ev));
    Ok(TrajectoryPath {
        params: *params,
        initial_state: k0,
        events,
        final_time: t_end,
        absorbed: sim.absorbed(),
    })
}

/// Simulates one path up to `t_end`, keeping every event. Uses stream 0 of
/// `seed`, the same stream as path 0 of an ensemble.
pub fn simulate_path(
    k0: u64,
    t_end: f64,
    seed: u64,
    params: &ModelParams,
) -> Result<TrajectoryPath> {
    simulate_with_rng(k0, t_end, stream_rng(seed, 0), params)
}

/// Streams one path and records its state at each grid time.
fn grid_states(k0: u64, t_grid: &[f64], rng: StreamRng, params: &ModelParams) -> Vec<u64> {
    let mut sim = Gillespie::new(k0, params, rng);
    t_grid
        .iter()
        .map(|&t| {
            sim.advance_to(t, |_| {});
            sim.state
        })
        .collect()
}

/// States of `n_paths` independent paths on a nondecreasing grid; row `p`
/// comes from stream `(seed, p)`.
pub fn simulate_grid_paths(
    k0: u64,
    t_grid: &[f64],
    n_paths: usize,
    seed: u64,
    params: &ModelParams,
) -> Result<Vec<Vec<u64>>> {
    check_state(k0, params)?;
    check_grid(t_grid, false)?;
    if n_paths == 0 {
        return Err(MoranError::Domain("n_paths must be at least 1".into()));
    }
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|p| grid_states(k0, t_grid, stream_rng(seed, p), params))
        .collect())
}

/// Statistics against the deterministic limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    /// `z(z0, t)` on the grid, with `z0 = k0 / N`.
    pub z: Vec<f64>,
    /// Per path, `max_t |Z_t - z(t)|` over the grid.
    pub sup_deviation: Vec<f64>,
    /// Per grid time, mean and variance of `sqrt(N) (Z_t - z(t))`.
    pub fluctuation_mean: Vec<f64>,
    pub fluctuation_variance: Vec<f64>,
    /// `[time][path]` values of `sqrt(N) (Z_t - z(t))`.
    #[serde(skip)]
    pub fluctuations: Vec<Vec<f64>>,
}

impl ReferenceStats {
    pub fn fraction_exceeding(&self, threshold: f64) -> f64 {
        let hits = self
            .sup_deviation
            .iter()
            .filter(|&&d| d > threshold)
            .count();
        hits as f64 / self.sup_deviation.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub params: ModelParams,
    pub initial_state: u64,
    pub seed: u64,
    pub n_paths: usize,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub reference: Option<ReferenceStats>,
}

/// Reduces grid states (row per path) in path order.
pub fn summarize(
    states: &[Vec<u64>],
    k0: u64,
    t_grid: &[f64],
    seed: u64,
    params: &ModelParams,
    reference: Option<&DeterministicSolution>,
) -> Result<EnsembleSummary> {
    if states.is_empty() {
        return Err(MoranError::Domain("no paths to summarize".into()));
    }
    let n = params.n();
    let column = |i: usize| -> Vec<f64> { states.iter().map(|row| row[i] as f64 / n).collect() };
    let (mean, variance): (Vec<f64>, Vec<f64>) =
        (0..t_grid.len()).map(|i| mean_variance(&column(i))).unzip();

    let reference = match reference {
        None => None,
        Some(sol) => {
            let z = sol
                .trajectory(t_grid)?
                .into_iter()
                .map(|(_, z)| z)
                .collect::<Vec<_>>();
            let sup_deviation = states
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&z)
                        .map(|(&k, &zt)| (k as f64 / n - zt).abs())
                        .fold(0.0, f64::max)
                })
                .collect();
            let scale = n.sqrt();
            let fluctuations: Vec<Vec<f64>> = (0..t_grid.len())
                .map(|i| column(i).into_iter().map(|x| scale * (x - z[i])).collect())
                .collect();
            let (fluctuation_mean, fluctuation_variance) =
                fluctuations.iter().map(|col| mean_variance(col)).unzip();
            Some(ReferenceStats {
                z,
                sup_deviation,
                fluctuation_mean,
                fluctuation_variance,
                fluctuations,
            })
        }
    };

    Ok(EnsembleSummary {
        params: *params,
        initial_state: k0,
        seed,
        n_paths: states.len(),
        times: t_grid.to_vec(),
        mean,
        variance,
        reference,
    })
}

pub fn run_ensemble(
    k0: u64,
    t_grid: &[f64],
    n_paths: usize,
    seed: u64,
    params: &ModelParams,
    reference: Option<&DeterministicSolution>,
) -> Result<EnsembleSummary> {
    let states = simulate_grid_paths(k0, t_grid, n_paths, seed, params)?;
    summarize(&states, k0, t_grid, seed, params, reference)
}
