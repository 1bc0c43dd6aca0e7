//! Python bindings for the `hopwalk` toolkit.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use hopwalk::asym::{predicted_exponents, rate_eval, solve_h};
use hopwalk::exact::transient_distribution;
use hopwalk::experiments::{
    bracket_cell, planted_estimate as core_planted, run_annealed_experiment, run_asymptotics, run_quenched_experiment,
    run_sample_env, run_speed, run_tail_check, run_validation, ExperimentConfig, OracleConfig,
};
use hopwalk::rng::replica_rng;
use hopwalk::sim::{estimate_slowdown as core_slowdown, estimate_speed as core_speed, simulate_x as core_simulate, SpeedMode};
use hopwalk::stats::EstimateCI;
use hopwalk::{Holding, TailClass};

fn err(e: hopwalk::Error) -> PyErr {
    match e {
        hopwalk::Error::Io(e) => PyIOError::new_err(e.to_string()),
        hopwalk::Error::Numeric(m) => PyRuntimeError::new_err(format!("numeric error: {m}")),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Converts any serializable value into plain Python objects through JSON.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Law of the right-jump probabilities `omega(x)`.
#[pyclass(name = "OmegaLaw", module = "hopwalk_py", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyOmegaLaw(hopwalk::OmegaLaw);

#[pymethods]
impl PyOmegaLaw {
    #[staticmethod]
    fn deterministic(p: f64) -> PyResult<Self> {
        Self::checked(hopwalk::OmegaLaw::Deterministic { p })
    }

    #[staticmethod]
    fn uniform(a: f64, b: f64) -> PyResult<Self> {
        Self::checked(hopwalk::OmegaLaw::Uniform { a, b })
    }

    #[staticmethod]
    fn two_point(p1: f64, p2: f64, q: f64) -> PyResult<Self> {
        Self::checked(hopwalk::OmegaLaw::TwoPoint { p1, p2, q })
    }

    /// `E[(1 - omega)/omega]`.
    fn rho_mean(&self) -> f64 {
        self.0.rho_mean()
    }

    /// Asymptotic speed `v_P`.
    fn speed(&self) -> f64 {
        self.0.solomon_speed()
    }

    fn __repr__(&self) -> String {
        format!("OmegaLaw({:?})", self.0)
    }
}

impl PyOmegaLaw {
    fn checked(law: hopwalk::OmegaLaw) -> PyResult<Self> {
        law.validate().map_err(err)?;
        Ok(PyOmegaLaw(law))
    }
}

/// Mean-one holding-time law.
#[pyclass(name = "TailLaw", module = "hopwalk_py", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyTailLaw(hopwalk::TailLaw);

#[pymethods]
impl PyTailLaw {
    #[staticmethod]
    fn pareto(alpha: f64) -> PyResult<Self> {
        hopwalk::TailLaw::pareto(alpha).map(PyTailLaw).map_err(err)
    }

    #[staticmethod]
    fn log_pow(beta: f64) -> PyResult<Self> {
        hopwalk::TailLaw::log_pow(beta).map(PyTailLaw).map_err(err)
    }

    #[staticmethod]
    fn log_log() -> PyResult<Self> {
        hopwalk::TailLaw::log_log().map(PyTailLaw).map_err(err)
    }

    #[staticmethod]
    fn weibull(alpha: f64) -> PyResult<Self> {
        hopwalk::TailLaw::weibull(alpha).map(PyTailLaw).map_err(err)
    }

    /// `g(r) = -log P(mu > r)`.
    fn g(&self, r: f64) -> PyResult<f64> {
        self.0.g_eval(r).map_err(err)
    }

    fn g_inv(&self, y: f64) -> PyResult<f64> {
        self.0.g_inv(y).map_err(err)
    }

    /// `P(mu > r)`.
    fn tail(&self, r: f64) -> f64 {
        self.0.tail(r)
    }

    /// Scale `m` making the law mean one.
    #[getter]
    fn scale(&self) -> f64 {
        self.0.scale_m()
    }

    #[getter]
    fn alpha(&self) -> Option<f64> {
        self.0.alpha()
    }

    /// `"polynomial"`, `"intermediate"` or `"weibull"`.
    #[getter]
    fn class_name(&self) -> &'static str {
        match self.0.class() {
            TailClass::Polynomial => "polynomial",
            TailClass::Intermediate => "intermediate",
            TailClass::Weibull => "weibull",
        }
    }

    fn __repr__(&self) -> String {
        format!("TailLaw({})", self.0.label())
    }
}

/// A lazily sampled environment `(omega(x), mu(x))`.
#[pyclass(name = "Environment", module = "hopwalk_py")]
struct PyEnvironment(hopwalk::Environment);

#[pymethods]
impl PyEnvironment {
    #[new]
    fn new(omega: PyOmegaLaw, tail: PyTailLaw, seed: u64) -> PyResult<Self> {
        hopwalk::Environment::new(omega.0, tail.0, seed).map(PyEnvironment).map_err(err)
    }

    /// Every site has `omega = p` and `mu = mu`.
    #[staticmethod]
    fn homogeneous(p: f64, mu: f64) -> PyResult<Self> {
        hopwalk::Environment::homogeneous(p, mu).map(PyEnvironment).map_err(err)
    }

    /// `(omega(x), mu(x))`.
    fn site(&self, x: i64) -> (f64, f64) {
        self.0.get(x)
    }

    /// `[(x, omega(x), mu(x)) for x in lo..=hi]`.
    fn sites(&mut self, lo: i64, hi: i64) -> PyResult<Vec<(i64, f64, f64)>> {
        if lo > hi {
            return Err(PyValueError::new_err(format!("empty range {lo}..={hi}")));
        }
        self.0.extend(lo, hi + 1);
        Ok((lo..=hi).map(|x| {
            let (w, m) = self.0.get(x);
            (x, w, m)
        })
        .collect())
    }

    /// Overrides the mean holding time at `x`.
    fn plant_mu(&mut self, x: i64, mu: f64) -> PyResult<()> {
        self.0.plant_mu(x, mu).map_err(err)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed()
    }

    fn __repr__(&self) -> String {
        format!("Environment(seed={})", self.0.seed())
    }
}

/// Point estimate with a 95% interval.
#[pyclass(name = "Estimate", module = "hopwalk_py", frozen, get_all)]
struct PyEstimate {
    estimate: f64,
    ci_lo: f64,
    ci_hi: f64,
    std_error: f64,
    replicas: u64,
    seed: u64,
}

impl From<EstimateCI> for PyEstimate {
    fn from(e: EstimateCI) -> Self {
        PyEstimate {
            estimate: e.estimate,
            ci_lo: e.ci_lo,
            ci_hi: e.ci_hi,
            std_error: e.std_error,
            replicas: e.replicas,
            seed: e.seed,
        }
    }
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!("Estimate({} [{}, {}], se={}, n={})", self.estimate, self.ci_lo, self.ci_hi, self.std_error, self.replicas)
    }
}

/// Position `X_t` of one walk started at 0, replica `replica` of `seed`.
#[pyfunction]
#[pyo3(signature = (env, t, seed, replica = 0))]
fn simulate_x(env: &PyEnvironment, t: f64, seed: u64, replica: u64) -> PyResult<i64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PyValueError::new_err(format!("t must be finite and >= 0, got {t}")));
    }
    Ok(core_simulate(&env.0, t, &mut replica_rng(seed, replica)).position)
}

/// Monte Carlo estimate of `P(X_t < vt)` in a fixed environment.
#[pyfunction]
fn estimate_slowdown(py: Python<'_>, env: &PyEnvironment, t: f64, v: f64, replicas: u64, seed: u64) -> PyResult<PyEstimate> {
    py.detach(|| core_slowdown(&env.0, t, v, replicas, seed)).map(Into::into).map_err(err)
}

/// Mean of `X_t / t` in a fixed environment.
#[pyfunction]
fn estimate_speed(py: Python<'_>, env: &PyEnvironment, t: f64, replicas: u64, seed: u64) -> PyResult<PyEstimate> {
    py.detach(|| core_speed(SpeedMode::Quenched(&env.0), t, replicas, seed)).map(Into::into).map_err(err)
}

/// Mean of `X_t / t` with a fresh environment per replica.
#[pyfunction]
fn estimate_speed_annealed(
    py: Python<'_>,
    omega: PyOmegaLaw,
    tail: PyTailLaw,
    t: f64,
    replicas: u64,
    seed: u64,
) -> PyResult<PyEstimate> {
    let mode = SpeedMode::Annealed { omega_law: omega.0, holding: Holding::Law(tail.0) };
    py.detach(|| core_speed(mode, t, replicas, seed)).map(Into::into).map_err(err)
}

/// Law of `X_t` absorbed at `lo` and `hi`: `(lo, probs, series_error)` with
/// `probs[i] = P(X_t = lo + i)`.
#[pyfunction]
#[pyo3(signature = (env, t, lo, hi, tol = 1e-10))]
fn transient(env: &PyEnvironment, t: f64, lo: i64, hi: i64, tol: f64) -> PyResult<(i64, Vec<f64>, f64)> {
    let d = transient_distribution(&env.0, t, lo, hi, tol).map_err(err)?;
    Ok((d.lo, d.probs, d.series_error))
}

/// Lower bound, upper bound, exact value and optional Monte Carlo estimate
/// of the quenched `P(X_t < v t)` with `v = v_fraction * v_P`, as a dict.
#[pyfunction]
#[pyo3(signature = (env, tail, t, v_fraction, tol = 1e-8, max_sites = 200, mc_replicas = 0, mc_seed = 0, eps = 0.3))]
#[allow(clippy::too_many_arguments)]
fn slowdown_bracket<'py>(
    py: Python<'py>,
    env: &PyEnvironment,
    tail: PyTailLaw,
    t: f64,
    v_fraction: f64,
    tol: f64,
    max_sites: usize,
    mc_replicas: u64,
    mc_seed: u64,
    eps: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let oracle = OracleConfig { enabled: true, tol, max_sites };
    let record = py
        .detach(|| bracket_cell(&env.0, &tail.0, t, v_fraction, &oracle, mc_replicas, mc_seed, eps))
        .map_err(err)?;
    to_py(py, &record)
}

/// Importance-sampling estimate of the annealed `P(X_t < v t)`, as a dict.
#[pyfunction]
#[pyo3(signature = (omega, tail, t, v, replicas, seed, level = None, beta = 0.5))]
#[allow(clippy::too_many_arguments)]
fn planted_estimate<'py>(
    py: Python<'py>,
    omega: PyOmegaLaw,
    tail: PyTailLaw,
    t: f64,
    v: f64,
    replicas: u64,
    seed: u64,
    level: Option<f64>,
    beta: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let level = match level {
        Some(l) => l,
        None => solve_h(&tail.0, t).map_err(err)?,
    };
    let est = py.detach(|| core_planted(omega.0, tail.0, t, v, level, beta, replicas, seed)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("estimate", PyEstimate::from(est.estimate))?;
    out.set_item("level", est.level)?;
    out.set_item("planted_fraction", est.planted_fraction)?;
    out.set_item("min_weight", est.min_weight)?;
    out.set_item("max_weight", est.max_weight)?;
    Ok(out.into_any())
}

/// The annealed scale `h(t)`.
#[pyfunction(name = "solve_h")]
fn py_solve_h(tail: PyTailLaw, t: f64) -> PyResult<f64> {
    solve_h(&tail.0, t).map_err(err)
}

/// `(quenched lower, quenched upper, annealed)` predicted exponents.
#[pyfunction(name = "predicted_exponents")]
#[pyo3(signature = (tail, t, eps = 0.3))]
fn py_predicted_exponents(tail: PyTailLaw, t: f64, eps: f64) -> PyResult<(f64, f64, f64)> {
    predicted_exponents(&tail.0, t, eps).map_err(err)
}

/// One row of the rate table, as a dict.
#[pyfunction(name = "rate_eval")]
#[pyo3(signature = (tail, t, eps = 0.3, rho = 0.1, c = 0.5))]
fn py_rate_eval<'py>(py: Python<'py>, tail: PyTailLaw, t: f64, eps: f64, rho: f64, c: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &rate_eval(&tail.0, t, eps, rho, c).map_err(err)?)
}

/// Runs a CLI subcommand on a TOML configuration and returns its records
/// keyed by output stem.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, subcommand: &str, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_toml(config).map_err(err)?;
    let out = PyDict::new(py);
    match subcommand {
        "sample-env" => out.set_item("environment", to_py(py, &py.detach(|| run_sample_env(&cfg)).map_err(err)?)?)?,
        "speed" => out.set_item("speed", to_py(py, &py.detach(|| run_speed(&cfg)).map_err(err)?)?)?,
        "slowdown-quenched" => {
            out.set_item("quenched", to_py(py, &py.detach(|| run_quenched_experiment(&cfg)).map_err(err)?)?)?
        }
        "slowdown-annealed" => {
            out.set_item("annealed", to_py(py, &py.detach(|| run_annealed_experiment(&cfg)).map_err(err)?)?)?
        }
        "asymptotics" => {
            let (rates, max) = py.detach(|| run_asymptotics(&cfg)).map_err(err)?;
            out.set_item("rates", to_py(py, &rates)?)?;
            out.set_item("running_max", to_py(py, &max)?)?;
        }
        "tail-check" => {
            let (records, summary) = py.detach(|| run_tail_check(&cfg)).map_err(err)?;
            out.set_item("tail", to_py(py, &records)?)?;
            out.set_item("tail_summary", to_py(py, &summary)?)?;
        }
        "validate" => out.set_item("validation", to_py(py, &py.detach(|| run_validation(&cfg)).map_err(err)?)?)?,
        other => return Err(PyValueError::new_err(format!("unknown subcommand {other:?}"))),
    }
    Ok(out.into_any())
}

#[pymodule]
fn hopwalk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOmegaLaw>()?;
    m.add_class::<PyTailLaw>()?;
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(simulate_x, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_slowdown, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_speed, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_speed_annealed, m)?)?;
    m.add_function(wrap_pyfunction!(transient, m)?)?;
    m.add_function(wrap_pyfunction!(slowdown_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(planted_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(py_solve_h, m)?)?;
    m.add_function(wrap_pyfunction!(py_predicted_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(py_rate_eval, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", hopwalk::experiments::TOOLKIT_VERSION)?;
    Ok(())
}
