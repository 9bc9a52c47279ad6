//! Python bindings for `moran-core`.

use moran_core as core;
use moran_core::{MoranError, Regime, Stability, VarianceSource};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: MoranError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Neutral => "NEUTRAL",
        Regime::MutationOnly => "MUTATION_ONLY",
        Regime::Selection => "SELECTION",
    }
}

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::AsymptoticallyStable => "asymptotically_stable",
        Stability::Unstable => "unstable",
    }
}

fn source_name(s: VarianceSource) -> &'static str {
    match s {
        VarianceSource::Equilibrium => "equilibrium",
        VarianceSource::Quadrature => "quadrature",
        VarianceSource::OdeFallback => "ode_fallback",
    }
}

/// Population size `N`, selection `s`, mutation rate `u` and type-0 mutation
/// probability `nu0`.
#[pyclass(name = "ModelParams", module = "moran", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyModelParams {
    inner: core::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (n, s, u, nu0))]
    fn new(n: u64, s: f64, u: f64, nu0: f64) -> PyResult<Self> {
        Ok(Self {
            inner: core::ModelParams::new(n, s, u, nu0).py_err()?,
        })
    }

    #[getter(N)]
    fn population_size(&self) -> u64 {
        self.inner.population_size()
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s()
    }

    #[getter]
    fn u(&self) -> f64 {
        self.inner.u()
    }

    #[getter]
    fn nu0(&self) -> f64 {
        self.inner.nu0()
    }

    #[getter]
    fn nu1(&self) -> f64 {
        self.inner.nu1()
    }

    #[getter]
    fn regime(&self) -> &'static str {
        regime_name(Regime::of(&self.inner))
    }

    fn with_population_size(&self, n: u64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_population_size(n).py_err()?,
        })
    }

    fn drift(&self, x: f64) -> f64 {
        core::DriftFunctions::new(&self.inner).drift(x)
    }

    fn drift_derivative(&self, x: f64) -> f64 {
        core::DriftFunctions::new(&self.inner).drift_derivative(x)
    }

    fn jump_activity(&self, x: f64) -> f64 {
        core::DriftFunctions::new(&self.inner).jump_activity(x)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ModelParams(N={}, s={}, u={}, nu0={})",
            p.population_size(),
            p.s(),
            p.u(),
            p.nu0()
        )
    }
}

/// Jump kernel `q(p, jump)` for `jump` in `{-1, +1}`.
#[pyfunction]
fn kernel_q(p: f64, jump: i64, params: &PyModelParams) -> PyResult<f64> {
    core::kernel_q(p, jump, &params.inner).py_err()
}

/// `(birth, death)` rates of the chain in state `k`.
#[pyfunction]
fn chain_rates(k: u64, params: &PyModelParams) -> PyResult<(f64, f64)> {
    core::chain_rates(k, &params.inner).py_err()
}

#[pyfunction]
fn equilibria<'py>(py: Python<'py>, params: &PyModelParams) -> PyResult<Bound<'py, PyDict>> {
    let e = core::equilibria(&params.inner).py_err()?;
    let d = PyDict::new(py);
    d.set_item("regime", regime_name(e.regime))?;
    d.set_item("discriminant", e.discriminant)?;
    d.set_item("x_plus", e.x_plus)?;
    d.set_item("x_minus", e.x_minus)?;
    d.set_item("slope_plus", e.slope_plus)?;
    d.set_item("slope_minus", e.slope_minus)?;
    d.set_item("stability_plus", stability_name(e.stability_plus))?;
    d.set_item("stability_minus", e.stability_minus.map(stability_name))?;
    Ok(d)
}

/// Closed-form deterministic limit started at `z0`.
#[pyclass(name = "DeterministicSolution", module = "moran", frozen)]
struct PyDeterministicSolution {
    inner: core::DeterministicSolution,
}

#[pymethods]
impl PyDeterministicSolution {
    #[getter]
    fn z0(&self) -> f64 {
        self.inner.z0()
    }

    #[getter]
    fn regime(&self) -> &'static str {
        regime_name(self.inner.regime())
    }

    fn __call__(&self, t: f64) -> PyResult<f64> {
        self.inner.evaluate(t).py_err()
    }

    fn trajectory(&self, times: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
        self.inner.trajectory(&times).py_err()
    }
}

#[pyfunction]
fn solve_deterministic(z0: f64, params: &PyModelParams) -> PyResult<PyDeterministicSolution> {
    Ok(PyDeterministicSolution {
        inner: core::solve_deterministic(z0, &params.inner).py_err()?,
    })
}

/// Fixed-step RK4 reference trajectory `[(t, z)]`.
#[pyfunction]
#[pyo3(signature = (z0, t_end, params, step = 1e-3))]
fn ode_oracle(z0: f64, t_end: f64, params: &PyModelParams, step: f64) -> PyResult<Vec<(f64, f64)>> {
    core::ode_oracle(z0, t_end, step, &params.inner).py_err()
}

/// Linear mutation-selection model whose normalised solution is the
/// deterministic limit.
#[pyclass(name = "LinearModelSolution", module = "moran", frozen)]
struct PyLinearModelSolution {
    inner: core::LinearModelSolution,
}

#[pymethods]
impl PyLinearModelSolution {
    fn matrix(&self) -> [[f64; 2]; 2] {
        self.inner.matrix()
    }

    fn eigenvalues(&self) -> (f64, f64) {
        self.inner.eigenvalues()
    }

    fn eigenvectors(&self) -> ([f64; 2], [f64; 2]) {
        self.inner.eigenvectors()
    }

    fn __call__(&self, t: f64) -> PyResult<(f64, f64)> {
        self.inner.evaluate(t).py_err()
    }

    fn proportion(&self, t: f64) -> PyResult<f64> {
        self.inner.proportion(t).py_err()
    }
}

#[pyfunction]
fn linear_model_solution(z0: f64, params: &PyModelParams) -> PyResult<PyLinearModelSolution> {
    Ok(PyLinearModelSolution {
        inner: core::linear_model_solution(z0, &params.inner).py_err()?,
    })
}

/// Gaussian law of the rescaled fluctuations around the deterministic limit.
#[pyclass(name = "FluctuationLaw", module = "moran", frozen)]
struct PyFluctuationLaw {
    inner: core::FluctuationLaw,
}

#[pymethods]
impl PyFluctuationLaw {
    #[new]
    fn new(z0: f64, params: &PyModelParams) -> PyResult<Self> {
        Ok(Self {
            inner: core::FluctuationLaw::new(z0, &params.inner).py_err()?,
        })
    }

    #[getter]
    fn z0(&self) -> f64 {
        self.inner.z0()
    }

    fn limit_variance(&self) -> f64 {
        self.inner.limit_variance()
    }

    fn variance(&self, t: f64) -> PyResult<f64> {
        self.inner.variance(t).py_err()
    }

    fn variance_curve(&self, times: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.variance_curve(&times).py_err()
    }

    fn characteristic(&self, t: f64, theta: f64) -> PyResult<(f64, f64)> {
        self.inner.characteristic(t, theta).py_err()
    }

    fn sample_paths(
        &self,
        py: Python<'_>,
        times: Vec<f64>,
        n_paths: usize,
        seed: u64,
    ) -> PyResult<Vec<Vec<f64>>> {
        py.detach(|| self.inner.sample_paths(&times, n_paths, seed))
            .py_err()
    }
}

/// `[(t, Sigma(t))]` from the variance ODE.
#[pyfunction]
#[pyo3(signature = (z0, t_end, params, step = core::fluctuations::DEFAULT_VARIANCE_STEP))]
fn variance_ode(
    z0: f64,
    t_end: f64,
    params: &PyModelParams,
    step: f64,
) -> PyResult<Vec<(f64, f64)>> {
    core::variance_ode(z0, t_end, step, &params.inner).py_err()
}

/// `(value, source)` where `source` names the evaluation route.
#[pyfunction]
fn variance_closed_form(z0: f64, t: f64, params: &PyModelParams) -> PyResult<(f64, &'static str)> {
    let v = core::variance_closed_form(z0, t, &params.inner).py_err()?;
    Ok((v.value, source_name(v.source)))
}

#[pyfunction]
fn characteristic_fn(z0: f64, t: f64, theta: f64, params: &PyModelParams) -> PyResult<(f64, f64)> {
    core::characteristic_fn(z0, t, theta, &params.inner).py_err()
}

/// `[path][time]` exact samples of the Gaussian fluctuation process.
#[pyfunction]
fn sample_fluctuation_paths(
    py: Python<'_>,
    z0: f64,
    times: Vec<f64>,
    n_paths: usize,
    seed: u64,
    params: &PyModelParams,
) -> PyResult<Vec<Vec<f64>>> {
    let p = params.inner;
    py.detach(|| core::sample_fluctuation_paths(z0, &times, n_paths, seed, &p))
        .py_err()
}

/// One exact path of the chain as a list of jump events.
#[pyclass(name = "TrajectoryPath", module = "moran", frozen)]
struct PyTrajectoryPath {
    inner: core::TrajectoryPath,
}

#[pymethods]
impl PyTrajectoryPath {
    #[getter]
    fn initial_state(&self) -> u64 {
        self.inner.initial_state
    }

    #[getter]
    fn final_time(&self) -> f64 {
        self.inner.final_time
    }

    #[getter]
    fn absorbed(&self) -> bool {
        self.inner.absorbed
    }

    /// `[(time, state)]` after each jump.
    #[getter]
    fn events(&self) -> Vec<(f64, u64)> {
        self.inner
            .events
            .iter()
            .map(|e| (e.time, e.state))
            .collect()
    }

    fn state_at(&self, t: f64) -> PyResult<u64> {
        self.inner.state_at(t).py_err()
    }

    fn final_state(&self) -> u64 {
        self.inner.final_state()
    }

    fn __len__(&self) -> usize {
        self.inner.events.len()
    }
}

#[pyfunction]
fn simulate_path(
    py: Python<'_>,
    k0: u64,
    t_end: f64,
    seed: u64,
    params: &PyModelParams,
) -> PyResult<PyTrajectoryPath> {
    let p = params.inner;
    let inner = py
        .detach(|| core::simulate_path(k0, t_end, seed, &p))
        .py_err()?;
    Ok(PyTrajectoryPath { inner })
}

/// `Z = k / N` of `path` at each time.
#[pyfunction]
fn sample_z_at(times: Vec<f64>, path: &PyTrajectoryPath) -> PyResult<Vec<f64>> {
    core::sample_z_at(&times, &path.inner).py_err()
}

/// Initial chain state `round(N z0)`.
#[pyfunction]
fn initial_state(z0: f64, params: &PyModelParams) -> PyResult<u64> {
    core::sim::initial_state(z0, &params.inner).py_err()
}

/// Ensemble mean and variance of `Z` on a grid. With `reference=True` the
/// deterministic limit from `k0 / N` is compared as well.
#[pyfunction]
#[pyo3(signature = (k0, times, n_paths, seed, params, reference = true))]
fn run_ensemble<'py>(
    py: Python<'py>,
    k0: u64,
    times: Vec<f64>,
    n_paths: usize,
    seed: u64,
    params: &PyModelParams,
    reference: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let summary = py
        .detach(|| {
            let sol = if reference {
                Some(core::solve_deterministic(k0 as f64 / p.n(), &p)?)
            } else {
                None
            };
            core::run_ensemble(k0, &times, n_paths, seed, &p, sol.as_ref())
        })
        .py_err()?;
    let d = PyDict::new(py);
    d.set_item("initial_state", summary.initial_state)?;
    d.set_item("seed", summary.seed)?;
    d.set_item("n_paths", summary.n_paths)?;
    d.set_item("times", &summary.times)?;
    d.set_item("mean", &summary.mean)?;
    d.set_item("variance", &summary.variance)?;
    if let Some(r) = &summary.reference {
        let rd = PyDict::new(py);
        rd.set_item("z", &r.z)?;
        rd.set_item("sup_deviation", &r.sup_deviation)?;
        rd.set_item("fluctuation_mean", &r.fluctuation_mean)?;
        rd.set_item("fluctuation_variance", &r.fluctuation_variance)?;
        d.set_item("reference", rd)?;
    } else {
        d.set_item("reference", py.None())?;
    }
    Ok(d)
}

/// Exact stationary law of the chain on `{0, ..., N}`.
#[pyclass(name = "StationaryDistribution", module = "moran", frozen)]
struct PyStationaryDistribution {
    inner: core::StationaryDistribution,
}

#[pymethods]
impl PyStationaryDistribution {
    #[getter]
    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities.clone()
    }

    #[getter]
    fn log_weights(&self) -> Vec<f64> {
        self.inner.log_weights.clone()
    }

    #[getter(N)]
    fn population_size(&self) -> u64 {
        self.inner.population_size()
    }

    fn mean_proportion(&self) -> f64 {
        self.inner.mean_proportion()
    }

    fn variance_proportion(&self) -> f64 {
        self.inner.variance_proportion()
    }

    fn mass_outside(&self, center: f64, epsilon: f64) -> f64 {
        self.inner.mass_outside(center, epsilon)
    }

    fn detailed_balance_error(&self) -> f64 {
        self.inner.detailed_balance_error()
    }

    fn generator_residual(&self) -> f64 {
        self.inner.generator_residual()
    }

    fn cdf(&self) -> Vec<f64> {
        self.inner.cdf()
    }

    fn __len__(&self) -> usize {
        self.inner.probabilities.len()
    }
}

#[pyfunction]
fn stationary_distribution(
    py: Python<'_>,
    params: &PyModelParams,
) -> PyResult<PyStationaryDistribution> {
    let p = params.inner;
    let inner = py.detach(|| core::stationary_distribution(&p)).py_err()?;
    Ok(PyStationaryDistribution { inner })
}

/// I.i.d. draws of the chain state from the stationary law.
#[pyfunction]
fn stationary_sampler(dist: &PyStationaryDistribution, n: usize, seed: u64) -> PyResult<Vec<u64>> {
    core::stationary_sampler(&dist.inner, n, seed).py_err()
}

/// Compares the stationary law with its Gaussian limit.
#[pyfunction]
#[pyo3(signature = (params, epsilon = core::stationary::DEFAULT_EPSILON))]
fn gaussian_limit_check<'py>(
    py: Python<'py>,
    params: &PyModelParams,
    epsilon: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let r = py
        .detach(|| core::stationary::gaussian_limit_check_with(&p, epsilon))
        .py_err()?;
    let d = PyDict::new(py);
    d.set_item("N", r.population_size)?;
    d.set_item("x_plus", r.x_plus)?;
    d.set_item("mean_proportion", r.mean_proportion)?;
    d.set_item("empirical_var_scaled", r.empirical_var_scaled)?;
    d.set_item("target", r.target)?;
    d.set_item("relative_error", r.relative_error)?;
    d.set_item("ks_statistic", r.ks_statistic)?;
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("mass_outside", r.mass_outside)?;
    Ok(d)
}

#[pymodule]
fn moran(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyDeterministicSolution>()?;
    m.add_class::<PyLinearModelSolution>()?;
    m.add_class::<PyFluctuationLaw>()?;
    m.add_class::<PyTrajectoryPath>()?;
    m.add_class::<PyStationaryDistribution>()?;
    m.add_function(wrap_pyfunction!(kernel_q, m)?)?;
    m.add_function(wrap_pyfunction!(chain_rates, m)?)?;
    m.add_function(wrap_pyfunction!(equilibria, m)?)?;
    m.add_function(wrap_pyfunction!(solve_deterministic, m)?)?;
    m.add_function(wrap_pyfunction!(ode_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(linear_model_solution, m)?)?;
    m.add_function(wrap_pyfunction!(variance_ode, m)?)?;
    m.add_function(wrap_pyfunction!(variance_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(characteristic_fn, m)?)?;
    m.add_function(wrap_pyfunction!(sample_fluctuation_paths, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(sample_z_at, m)?)?;
    m.add_function(wrap_pyfunction!(initial_state, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_sampler, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_limit_check, m)?)?;
    Ok(())
}
