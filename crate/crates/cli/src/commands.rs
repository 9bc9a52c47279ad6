//! Subcommand implementations. Each writes its artifacts into `out` and
//! returns the JSON report it wrote. Reports carry the resolved config and
//! seed and contain no timestamps, so reruns are byte-identical.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use moran_core::deterministic::DriftFunctions;
use moran_core::export;
use moran_core::fluctuations::FluctuationLaw;
use moran_core::quadrature::integrate_default;
use moran_core::sim::{initial_state, simulate_grid_paths, summarize};
use moran_core::stationary::{gaussian_limit_check_with, GaussianLimitReport};
use moran_core::stats::{ks_statistic, normal_cdf};
use moran_core::{
    equilibria, linear_model_solution, ode_oracle, solve_deterministic, stationary_distribution,
    EnsembleSummary, Equilibria, ModelParams, Regime, VarianceSource,
};
use serde::Serialize;

use crate::config::{uniform_grid, ExperimentConfig, SCHEMA_VERSION};
use crate::error::CliError;

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    result: T,
}

fn prepare_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_csv<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(path)?;
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

fn write_report<T: Serialize>(
    out: &Path,
    file: &str,
    command: &'static str,
    cfg: &ExperimentConfig,
    result: T,
) -> Result<PathBuf, CliError> {
    let path = out.join(file);
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        seed: cfg.seed,
        config: cfg,
        result,
    };
    let mut text = serde_json::to_string_pretty(&env)
        .map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[derive(Debug, Serialize)]
pub struct OdeResult {
    pub regime: Regime,
    pub equilibria: Option<Equilibria>,
    pub rows: usize,
    pub max_abs_diff: f64,
    pub trajectory_csv: String,
}

/// Closed-form trajectory against the RK4 oracle, plus equilibria.
pub fn cmd_ode(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    prepare_dir(out)?;
    let o = &cfg.ode;
    let params = &cfg.model;
    let sol = solve_deterministic(o.z0, params)?;
    let grid = uniform_grid(o.t_end, o.grid_step);
    let mut rows = Vec::with_capacity(grid.len());
    let mut oracle = o.z0;
    let mut prev_t = 0.0;
    for &t in &grid {
        if t > prev_t {
            // F is autonomous, so restarting the oracle from the last value is exact.
            oracle = ode_oracle(oracle, t - prev_t, o.oracle_step, params)?
                .last()
                .expect("oracle path is nonempty")
                .1;
        }
        prev_t = t;
        let closed = sol.evaluate(t)?;
        rows.push((t, closed, oracle, (closed - oracle).abs()));
    }
    let max_abs_diff = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let csv = "ode_trajectory.csv";
    write_csv(&out.join(csv), |w| {
        writeln!(w, "t,z_closed,z_oracle,abs_diff")?;
        for (t, a, b, d) in &rows {
            writeln!(w, "{t},{a},{b},{d}")?;
        }
        Ok(())
    })?;
    let result = OdeResult {
        regime: sol.regime(),
        equilibria: equilibria(params).ok(),
        rows: rows.len(),
        max_abs_diff,
        trajectory_csv: csv.into(),
    };
    write_report(out, "ode_report.json", "ode", cfg, result)
}

#[derive(Debug, Serialize)]
pub struct SimulateResult {
    pub initial_state: u64,
    pub deviation_threshold: f64,
    pub fraction_exceeding: f64,
    pub max_sup_deviation: f64,
    pub summary: EnsembleSummary,
    pub paths_csv: Option<String>,
}

/// Ensemble of exact paths against the deterministic limit.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    prepare_dir(out)?;
    let s = &cfg.simulate;
    let params = &cfg.model;
    let k0 = initial_state(s.z0, params)?;
    let grid = uniform_grid(s.t_end, s.grid_step);
    let reference = solve_deterministic(s.z0, params)?;
    let states = simulate_grid_paths(k0, &grid, s.n_paths, cfg.seed, params)?;
    let summary = summarize(&states, k0, &grid, cfg.seed, params, Some(&reference))?;
    let paths_csv = if s.write_paths {
        let name = "paths.csv";
        write_csv(&out.join(name), |w| {
            export::write_state_paths_csv(w, &grid, &states)
        })?;
        Some(name.to_string())
    } else {
        None
    };
    let stats = summary.reference.as_ref().expect("reference supplied");
    let result = SimulateResult {
        initial_state: k0,
        deviation_threshold: s.deviation_threshold,
        fraction_exceeding: stats.fraction_exceeding(s.deviation_threshold),
        max_sup_deviation: stats.sup_deviation.iter().copied().fold(0.0, f64::max),
        paths_csv,
        summary,
    };
    write_report(out, "ensemble_summary.json", "simulate", cfg, result)
}

#[derive(Debug, Clone, Serialize)]
pub struct CltRow {
    pub t: f64,
    pub empirical_mean: f64,
    pub empirical_var: f64,
    pub sigma2: f64,
    pub variance_ratio: Option<f64>,
    pub ks_stat: f64,
}

#[derive(Debug, Serialize)]
pub struct CltResult {
    pub initial_state: u64,
    /// `sqrt(N) (k0 / N - z0)`, the embedding offset at `t = 0`.
    pub initial_offset: f64,
    pub rows: Vec<CltRow>,
    pub table_csv: String,
}

pub(crate) fn clt_rows(cfg: &ExperimentConfig) -> Result<(u64, Vec<CltRow>), CliError> {
    let c = &cfg.clt;
    let params = &cfg.model;
    let law = FluctuationLaw::new(c.z0, params)?;
    let k0 = initial_state(c.z0, params)?;
    let states = simulate_grid_paths(k0, &c.times, c.n_paths, cfg.seed, params)?;
    let summary = summarize(
        &states,
        k0,
        &c.times,
        cfg.seed,
        params,
        Some(law.deterministic()),
    )?;
    let sigma = law.variance_curve(&c.times)?;
    let stats = summary.reference.expect("reference supplied");
    let rows = c
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| CltRow {
            t,
            empirical_mean: stats.fluctuation_mean[i],
            empirical_var: stats.fluctuation_variance[i],
            sigma2: sigma[i],
            variance_ratio: (sigma[i] > 0.0).then(|| stats.fluctuation_variance[i] / sigma[i]),
            ks_stat: ks_statistic(&stats.fluctuations[i], |x| normal_cdf(x, sigma[i])),
        })
        .collect();
    Ok((k0, rows))
}

/// Empirical law of `sqrt(N) (Z_t - z(t))` against `N(0, Var(V_t))`.
pub fn cmd_clt(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    prepare_dir(out)?;
    let (k0, rows) = clt_rows(cfg)?;
    let csv = "clt_table.csv";
    write_csv(&out.join(csv), |w| {
        writeln!(w, "t,empirical_var,sigma2,ks_stat")?;
        for r in &rows {
            writeln!(w, "{},{},{},{}", r.t, r.empirical_var, r.sigma2, r.ks_stat)?;
        }
        Ok(())
    })?;
    let n = cfg.model.n();
    let result = CltResult {
        initial_state: k0,
        initial_offset: n.sqrt() * (k0 as f64 / n - cfg.clt.z0),
        rows,
        table_csv: csv.into(),
    };
    write_report(out, "clt_report.json", "clt", cfg, result)
}

#[derive(Debug, Serialize)]
pub struct StationaryResult {
    pub reports: Vec<GaussianLimitReport>,
    pub ks_decreasing: bool,
    pub variance_error_decreasing: bool,
    pub mass_outside_decreasing: bool,
    pub csv_files: Vec<String>,
}

fn decreasing(values: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = values.collect();
    v.windows(2).all(|w| w[1] <= w[0])
}

fn sweep_sizes(cfg: &ExperimentConfig) -> Vec<u64> {
    if cfg.stationary.sizes.is_empty() {
        vec![cfg.model.population_size()]
    } else {
        cfg.stationary.sizes.clone()
    }
}

/// Exact stationary laws over a sweep of population sizes.
pub fn cmd_stationary(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    prepare_dir(out)?;
    let st = &cfg.stationary;
    let mut reports = Vec::new();
    let mut csv_files = Vec::new();
    for n in sweep_sizes(cfg) {
        let params = cfg.model.with_population_size(n)?;
        let dist = stationary_distribution(&params)?;
        reports.push(gaussian_limit_check_with(&params, st.epsilon)?);
        if st.write_csv {
            let name = format!("stationary_N{n}.csv");
            write_csv(&out.join(&name), |w| export::write_stationary_csv(w, &dist))?;
            csv_files.push(name);
        }
    }
    let result = StationaryResult {
        ks_decreasing: decreasing(reports.iter().map(|r| r.ks_statistic)),
        variance_error_decreasing: decreasing(reports.iter().map(|r| r.relative_error)),
        mass_outside_decreasing: decreasing(reports.iter().map(|r| r.mass_outside)),
        reports,
        csv_files,
    };
    write_report(out, "stationary_report.json", "stationary", cfg, result)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value < threshold,
        }
    }

    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SelfcheckResult {
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn selfcheck_checks(cfg: &ExperimentConfig) -> Result<Vec<Check>, CliError> {
    let params = &cfg.model;
    if params.u() <= 0.0 {
        return Err(CliError::Config("selfcheck needs u > 0".into()));
    }
    let drift = DriftFunctions::new(params);
    let rate = drift.relaxation_rate()?;
    let x_plus = equilibria(params)?.x_plus;
    let mut checks = Vec::new();

    let grid = uniform_grid(10.0, 0.01);
    let mut worst: f64 = 0.0;
    for z0 in [0.0, 0.1, 0.5, 1.0] {
        let sol = solve_deterministic(z0, params)?;
        for (t, z) in ode_oracle(z0, 10.0, 1e-3, params)?.into_iter().step_by(10) {
            worst = worst.max((sol.evaluate(t)? - z).abs());
        }
    }
    checks.push(Check::below("closed_form_vs_rk4", worst, 1e-6));

    if params.s() > 0.0 {
        let lin = linear_model_solution(0.3, params)?;
        let sol = solve_deterministic(0.3, params)?;
        let (mut prop_err, mut mass_err): (f64, f64) = (0.0, 0.0);
        for &t in grid.iter().filter(|&&t| t <= 5.0).step_by(10) {
            let (y0, y1) = lin.evaluate(t)?;
            prop_err = prop_err.max((y0 / (y0 + y1) - sol.evaluate(t)?).abs());
            let integral = integrate_default(|v| sol.at(v), 0.0, t)?;
            let mass = y0 + y1;
            mass_err = mass_err.max((mass - (t + params.s() * integral).exp()).abs() / mass);
        }
        checks.push(Check::below("linear_model_proportion", prop_err, 1e-10));
        checks.push(Check::below("linear_model_mass", mass_err, 1e-8));
    }

    let stab = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&z0| Ok((solve_deterministic(z0, params)?.evaluate(20.0 / rate)? - x_plus).abs()))
        .collect::<Result<Vec<f64>, CliError>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::below("stability", stab, 1e-6));

    let mut var_err: f64 = 0.0;
    for z0 in [0.0, 0.1, 0.5, 1.0] {
        let law = FluctuationLaw::new(z0, params)?;
        if law.at_equilibrium() {
            continue;
        }
        for (t, ode) in law.variance_ode(5.0 / rate, 1e-3)?.into_iter().step_by(50) {
            let cf = law.variance_closed_form(t)?;
            if cf.source != VarianceSource::OdeFallback {
                var_err = var_err.max((ode - cf.value).abs() / ode.max(1e-12));
            }
        }
    }
    checks.push(Check::below("variance_ode_vs_closed_form", var_err, 1e-5));
    let law = FluctuationLaw::new(x_plus, params)?;
    let eq_err = law
        .variance_ode(5.0, 1e-3)?
        .into_iter()
        .map(|(t, v)| (v - law.limit_variance() * (1.0 - (-2.0 * rate * t).exp())).abs())
        .fold(0.0, f64::max);
    checks.push(Check::below("variance_at_equilibrium", eq_err, 1e-8));

    if cfg.selfcheck.monte_carlo {
        let k0 = initial_state(cfg.simulate.z0, params)?;
        let lln_grid = uniform_grid(cfg.simulate.t_end, cfg.simulate.grid_step);
        let sol = solve_deterministic(cfg.simulate.z0, params)?;
        let states = simulate_grid_paths(k0, &lln_grid, cfg.simulate.n_paths, cfg.seed, params)?;
        let summary = summarize(&states, k0, &lln_grid, cfg.seed, params, Some(&sol))?;
        let frac = summary
            .reference
            .expect("reference supplied")
            .fraction_exceeding(cfg.simulate.deviation_threshold);
        checks.push(Check::at_most("lln_fraction_exceeding", frac, 0.05));

        for row in clt_rows(cfg)?.1 {
            if let Some(ratio) = row.variance_ratio {
                checks.push(Check::below(
                    &format!("clt_variance_rel_error_t{}", row.t),
                    (ratio - 1.0).abs(),
                    0.1,
                ));
                checks.push(Check::below(
                    &format!("clt_ks_t{}", row.t),
                    row.ks_stat,
                    0.05,
                ));
            }
        }
    }

    let big = params.with_population_size(5000)?;
    let dist = stationary_distribution(&big)?;
    checks.push(Check::below(
        "detailed_balance",
        dist.detailed_balance_error(),
        1e-10,
    ));
    let report = gaussian_limit_check_with(&big, 0.05)?;
    checks.push(Check::below(
        "stationary_variance_rel_error",
        report.relative_error,
        0.05,
    ));
    checks.push(Check::below(
        "stationary_mass_outside",
        report.mass_outside,
        0.01,
    ));
    Ok(checks)
}

/// Runs the built-in checks; writes the report, then fails with exit code 3
/// if any check is violated.
pub fn cmd_selfcheck(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    prepare_dir(out)?;
    let checks = selfcheck_checks(cfg)?;
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {:e} (threshold {:e})", c.name, c.value, c.threshold))
        .collect();
    let path = write_report(
        out,
        "selfcheck_report.json",
        "selfcheck",
        cfg,
        SelfcheckResult {
            passed: failed.is_empty(),
            checks,
        },
    )?;
    if failed.is_empty() {
        Ok(path)
    } else {
        Err(CliError::Threshold(failed.join("; ")))
    }
}

/// Reference-model helper for callers building configs in code.
pub fn config_for(model: ModelParams, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        model,
        seed,
        ..ExperimentConfig::reference()
    }
}
