//! Python bindings: load and run scenarios, inspect trajectories, compare runs,
//! and reach the small numerical helpers (Routh-Hurwitz, Lyapunov, φ).

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lbsgain_core::engine::{compare_runs as core_compare, Relation, RunMetrics, RunStatus, TrajectoryRecord};
use lbsgain_core::io::write_trajectory_csv;
use lbsgain_core::linalg::{self, HurwitzCoeffs, LyapunovForm};
use lbsgain_core::scenario::{self, ScenarioFile, PRESET_NAMES};
use lbsgain_core::speedreg::{self, SpeedRegParams};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Scenario", module = "lbsgain", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: lbsgain_core::Scenario,
}

#[pymethods]
impl PyScenario {
    /// A built-in preset such as `"example1"` or `"example2-case6"`.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        scenario::preset(name).map(|inner| Self { inner }).ok_or_else(|| value_err(format!("unknown preset '{name}'")))
    }

    /// A preset name or a path to a JSON scenario file.
    #[staticmethod]
    fn load(name_or_path: &str) -> PyResult<Self> {
        scenario::parse_scenario(name_or_path).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = ScenarioFile::from_json(text).map_err(value_err)?;
        file.into_scenario().map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn step(&self) -> f64 {
        self.inner.sim.step_h
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.sim.horizon
    }

    #[getter]
    fn x0(&self) -> Vec<f64> {
        self.inner.x0.clone()
    }

    /// Copy with a different integration step.
    fn with_step(&self, h: f64) -> PyResult<Self> {
        let inner = self.inner.clone().with_step(h);
        inner.sim.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Copy with a different horizon.
    fn with_horizon(&self, horizon: f64) -> PyResult<Self> {
        let inner = self.inner.clone().with_horizon(horizon);
        inner.sim.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Copy with a different initial plant state.
    fn with_x0(&self, x0: Vec<f64>) -> PyResult<Self> {
        if x0.len() != self.inner.n() {
            return Err(value_err(format!("x0 has {} entries, expected {}", x0.len(), self.inner.n())));
        }
        let mut inner = self.inner.clone();
        inner.x0 = x0;
        Ok(Self { inner })
    }

    /// Simulates the scenario. The GIL is released while integrating.
    fn run(&self, py: Python<'_>) -> PyResult<PyRun> {
        let s = self.inner.clone();
        let record = py.detach(move || s.run()).map_err(value_err)?;
        Ok(PyRun { name: self.inner.name.clone(), record })
    }

    fn __repr__(&self) -> String {
        format!("Scenario({})", self.inner)
    }
}

#[pyclass(name = "Run", module = "lbsgain", from_py_object)]
#[derive(Clone)]
struct PyRun {
    name: String,
    record: TrajectoryRecord,
}

fn metrics_dict<'py>(py: Python<'py>, m: &RunMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("peak_abs_x1", m.peak_abs_x1)?;
    d.set_item("convergence_time", m.convergence_time)?;
    d.set_item("switch_count", m.switch_count)?;
    d.set_item("final_gain", m.final_gain)?;
    d.set_item("all_bounded", m.all_bounded)?;
    Ok(d)
}

impl PyRun {
    fn column(&self, f: impl Fn(&lbsgain_core::engine::Row) -> f64) -> Vec<f64> {
        self.record.rows.iter().map(f).collect()
    }
}

#[pymethods]
impl PyRun {
    #[getter]
    fn name(&self) -> String {
        self.name.clone()
    }

    #[getter]
    fn n(&self) -> usize {
        self.record.n
    }

    #[getter]
    fn t(&self) -> Vec<f64> {
        self.column(|r| r.t)
    }

    /// Plant states, one list per recorded row.
    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        self.record.rows.iter().map(|r| r.x.clone()).collect()
    }

    #[getter]
    fn xhat(&self) -> Vec<Vec<f64>> {
        self.record.rows.iter().map(|r| r.xhat.clone()).collect()
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.column(|r| r.u)
    }

    #[getter]
    fn r(&self) -> Vec<f64> {
        self.column(|r| r.r)
    }

    #[getter]
    fn m(&self) -> Vec<u64> {
        self.record.rows.iter().map(|r| r.m).collect()
    }

    #[getter]
    fn chi(&self) -> Vec<f64> {
        self.column(|r| r.chi)
    }

    #[getter]
    fn omega(&self) -> Vec<f64> {
        self.column(|r| r.omega)
    }

    /// `(m, t_m, r_m)` for every interval, starting with `m = 1`.
    #[getter]
    fn switches(&self) -> Vec<(u64, f64, f64)> {
        self.record.switches.iter().map(|s| (s.m, s.t_m, s.r_m)).collect()
    }

    #[getter]
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        metrics_dict(py, &self.record.metrics)
    }

    #[getter]
    fn diverged(&self) -> bool {
        self.record.diverged()
    }

    /// Divergence time, or `None` for a completed run.
    #[getter]
    fn diverged_at(&self) -> Option<f64> {
        match self.record.status {
            RunStatus::Completed => None,
            RunStatus::Diverged { t } => Some(t),
        }
    }

    #[getter]
    fn gain_capped(&self) -> bool {
        self.record.gain_capped
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        write_trajectory_csv(&self.record, std::io::BufWriter::new(file)).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.record.rows.len()
    }

    fn __repr__(&self) -> String {
        let m = &self.record.metrics;
        format!(
            "Run({}, rows={}, switches={}, final_gain={:.4}, diverged={})",
            self.name,
            self.record.rows.len(),
            m.switch_count,
            m.final_gain,
            if self.record.diverged() { "True" } else { "False" }
        )
    }
}

/// `(first, second, convergence_time, peak_abs_x1)`.
type OrderingRow = (String, String, String, String);

fn relation(r: Relation) -> String {
    match r {
        Relation::Less => "less",
        Relation::Equal => "equal",
        Relation::Greater => "greater",
    }
    .into()
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

/// Tabulates runs of one plant. Returns `(table_text, orderings)` where each
/// ordering is `(first, second, convergence_time, peak_abs_x1)` with
/// relations spelled `"less"`, `"equal"` or `"greater"`.
#[pyfunction]
fn compare(runs: Vec<PyRun>) -> PyResult<(String, Vec<OrderingRow>)> {
    let pairs: Vec<(&str, &TrajectoryRecord)> = runs.iter().map(|r| (r.name.as_str(), &r.record)).collect();
    let report = core_compare(&pairs).map_err(value_err)?;
    let orderings = report
        .orderings
        .iter()
        .map(|o| (o.first.clone(), o.second.clone(), relation(o.convergence_time), relation(o.peak_abs_x1)))
        .collect();
    Ok((report.to_string(), orderings))
}

/// Polynomial coefficients highest power first.
#[pyfunction]
fn routh_hurwitz(coeffs: Vec<f64>) -> bool {
    linalg::routh_hurwitz(&coeffs)
}

/// Certificate for the closed-loop matrix built from `a` and `b`.
#[pyfunction]
#[pyo3(signature = (a, b, transposed = false))]
fn lyapunov<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>, transposed: bool) -> PyResult<Bound<'py, PyDict>> {
    let coeffs = HurwitzCoeffs::new(a, b).map_err(value_err)?;
    let xi = linalg::build_closed_loop_matrices(&coeffs).map_err(value_err)?.xi;
    let form = if transposed { LyapunovForm::Transposed } else { LyapunovForm::Standard };
    let cert = linalg::solve_lyapunov_form(&xi, form).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("lambda_min", cert.lambda_min)?;
    d.set_item("lambda_max", cert.lambda_max)?;
    d.set_item("residual", cert.residual_norm)?;
    d.set_item("p", cert.p.to_rows())?;
    d.set_item("xi", xi.to_rows())?;
    Ok(d)
}

#[pyfunction]
fn phi(t: f64, mu: f64) -> PyResult<f64> {
    let params = SpeedRegParams::new(mu).map_err(value_err)?;
    speedreg::phi(t, params).map_err(value_err)
}

#[pyfunction]
fn phi_rate(t: f64, mu: f64) -> PyResult<f64> {
    let params = SpeedRegParams::new(mu).map_err(value_err)?;
    speedreg::phi_rate(t, params).map_err(value_err)
}

#[pymodule]
fn lbsgain(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(routh_hurwitz, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(phi_rate, m)?)?;
    Ok(())
}
