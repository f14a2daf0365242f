//! Python bindings for the intersection simulator.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use aif_traffic::config::Config;
use aif_traffic::kinematics::{self, ControlInput, VehicleGeometry};
use aif_traffic::model::{bernoulli_entropy, AgentId};
use aif_traffic::policy;
use aif_traffic::simulation::{self, Regime};
use aif_traffic::stats::{self, BatchOptions, ConditionGrid};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Resolved simulation configuration.
#[pyclass(name = "Config", module = "aif_traffic_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: Config,
}

#[pymethods]
impl PyConfig {
    /// Parses TOML text on top of the defaults and applies `KEY=VALUE` overrides.
    #[new]
    #[pyo3(signature = (toml = "", overrides = Vec::new()))]
    fn new(toml: &str, overrides: Vec<String>) -> PyResult<Self> {
        Config::from_toml_str(toml, &overrides).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Copy with further overrides applied.
    fn with_overrides(&self, overrides: Vec<String>) -> PyResult<Self> {
        Self::new(&self.inner.to_toml(), overrides)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn regime(&self) -> String {
        self.inner.scenario.regime.name().to_string()
    }

    #[getter]
    fn delta_d0(&self) -> f64 {
        self.inner.scenario.delta_d0
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.scenario.seed
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.scene.dt
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(regime={}, delta_d0={}, seed={})",
            self.inner.scenario.regime, self.inner.scenario.delta_d0, self.inner.scenario.seed
        )
    }
}

/// Kinematic state of one vehicle.
#[pyclass(name = "VehicleState", module = "aif_traffic_py", get_all, set_all, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PyVehicleState {
    x: f64,
    y: f64,
    theta: f64,
    delta: f64,
    v: f64,
}

impl From<kinematics::VehicleState> for PyVehicleState {
    fn from(s: kinematics::VehicleState) -> Self {
        Self { x: s.x, y: s.y, theta: s.theta, delta: s.delta, v: s.v }
    }
}

impl From<PyVehicleState> for kinematics::VehicleState {
    fn from(s: PyVehicleState) -> Self {
        kinematics::VehicleState::new(s.x, s.y, s.theta, s.delta, s.v)
    }
}

#[pymethods]
impl PyVehicleState {
    #[new]
    #[pyo3(signature = (x = 0.0, y = 0.0, theta = 0.0, delta = 0.0, v = 0.0))]
    fn new(x: f64, y: f64, theta: f64, delta: f64, v: f64) -> Self {
        Self { x, y, theta, delta, v }
    }

    /// State after one bicycle-model step with acceleration `a` and steering rate `omega`.
    #[pyo3(signature = (a, omega, dt = 0.2))]
    fn step(&self, a: f64, omega: f64, dt: f64) -> PyResult<Self> {
        kinematics::step_bicycle(&(*self).into(), ControlInput::new(a, omega), dt, &VehicleGeometry::default())
            .map(Into::into)
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "VehicleState(x={:.3}, y={:.3}, theta={:.4}, delta={:.4}, v={:.3})",
            self.x, self.y, self.theta, self.delta, self.v
        )
    }
}

/// Result of one simulation.
#[pyclass(name = "RunResult", module = "aif_traffic_py")]
pub struct PyRunResult {
    inner: simulation::RunResult,
}

#[pymethods]
impl PyRunResult {
    /// One of `a_first`, `b_first`, `deadlock`, `collision`.
    #[getter]
    fn kind(&self) -> String {
        self.inner.outcome.kind.name().to_string()
    }

    #[getter]
    fn t_cross_a(&self) -> Option<f64> {
        self.inner.outcome.t_cross_a
    }

    #[getter]
    fn t_cross_b(&self) -> Option<f64> {
        self.inner.outcome.t_cross_b
    }

    #[getter]
    fn min_gap(&self) -> f64 {
        self.inner.outcome.min_gap
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.outcome.t_end
    }

    #[getter]
    fn replan_times(&self) -> (Vec<f64>, Vec<f64>) {
        (self.inner.replan_times[0].clone(), self.inner.replan_times[1].clone())
    }

    /// Final world state as `(agent_a, agent_b)`.
    fn final_states(&self) -> (PyVehicleState, PyVehicleState) {
        let w = self.inner.world.last().expect("trajectory has the initial state");
        (w[AgentId::A].kin.into(), w[AgentId::B].kin.into())
    }

    /// Per-tick log as a list of dicts.
    fn log<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let text = serde_json::to_string(&self.inner.log).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        json_loads(py, &text)
    }

    fn __repr__(&self) -> String {
        format!("RunResult(kind={}, t_end={:.1})", self.kind(), self.t_end())
    }
}

/// Runs one interaction.
#[pyfunction]
fn run_simulation(py: Python<'_>, config: PyRef<'_, PyConfig>) -> PyResult<PyRunResult> {
    let cfg = config.inner.clone();
    py.detach(|| simulation::run_simulation(&cfg))
        .map(|inner| PyRunResult { inner })
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Runs a grid of conditions and returns `(table_rows, run_records)` as lists of dicts.
#[pyfunction]
#[pyo3(signature = (config, regimes, deltas, reps, base_seed = 0, jobs = 1))]
fn run_batch<'py>(
    py: Python<'py>,
    config: PyRef<'_, PyConfig>,
    regimes: Vec<String>,
    deltas: Vec<f64>,
    reps: usize,
    base_seed: u64,
    jobs: usize,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let regimes: Vec<Regime> = regimes.iter().map(|r| r.parse()).collect::<Result<_, _>>().map_err(PyValueError::new_err)?;
    let grid = ConditionGrid { regimes, delta_d0: deltas, reps };
    let cfg = config.inner.clone();
    let opts = BatchOptions { base_seed, jobs, stop: None };
    let batch = py.detach(|| stats::run_batch(&cfg, &grid, opts, |_| {})).map_err(value_err)?;
    let rows: Vec<serde_json::Value> = batch
        .table
        .rows
        .iter()
        .flat_map(|row| {
            simulation::OutcomeKind::ALL.into_iter().map(move |k| {
                let (lo, hi) = row.interval(k).unwrap_or((f64::NAN, f64::NAN));
                serde_json::json!({
                    "regime": row.regime.name(),
                    "delta_d0": row.delta_d0,
                    "kind": k.name(),
                    "count": row.count(k),
                    "prop": row.proportion(k),
                    "wilson_lo": lo,
                    "wilson_hi": hi,
                    "n": row.n,
                    "failed": row.failed,
                })
            })
        })
        .collect();
    let rows = serde_json::to_string(&rows).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let recs = serde_json::to_string(&batch.records).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((json_loads(py, &rows)?, json_loads(py, &recs)?))
}

/// Wilson score interval for `k` successes out of `n`.
#[pyfunction]
#[pyo3(signature = (k, n, z = 1.96))]
fn wilson_interval(k: usize, n: usize, z: f64) -> PyResult<(f64, f64)> {
    stats::wilson_interval(k, n, z).map_err(value_err)
}

/// Net epistemic benefit of prompting at yield-belief mean `p`.
#[pyfunction]
#[pyo3(signature = (p, g_gamma = -0.125))]
fn g_prompt(p: f64, g_gamma: f64) -> f64 {
    policy::g_prompt(p, g_gamma)
}

/// Bernoulli entropy in nats.
#[pyfunction(name = "bernoulli_entropy")]
fn py_bernoulli_entropy(p: f64) -> f64 {
    bernoulli_entropy(p)
}

#[pymodule]
fn aif_traffic_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyVehicleState>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(g_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(py_bernoulli_entropy, m)?)?;
    Ok(())
}
