use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cutinit::bench::{Experiment, ExperimentConfig};
use cutinit::cstr::{self, ScheduleInstance};
use cutinit::gbd::select_initial_cuts;
use cutinit::policy::InitPolicy;
use cutinit::surrogate::{self, ModelKind, ModelOptions, Nu};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn config(json: Option<&str>) -> PyResult<ExperimentConfig> {
    let cfg = match json {
        Some(s) => ExperimentConfig::from_json(s).map_err(value_err)?,
        None => ExperimentConfig::default(),
    };
    cfg.validate().map_err(value_err)?;
    Ok(cfg)
}

fn instance(json: &str) -> PyResult<ScheduleInstance> {
    ScheduleInstance::from_json(json).map_err(value_err)
}

/// Cost surrogate: "gp", "dt", "rf" or "mlp".
#[pyclass(name = "Surrogate", module = "cutinit_py")]
struct PySurrogate {
    inner: surrogate::Surrogate,
}

#[pymethods]
impl PySurrogate {
    #[staticmethod]
    fn fit(kind: &str, x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<Self> {
        let kind: ModelKind = kind.parse().map_err(value_err)?;
        let inner = surrogate::Surrogate::fit(kind, &x, &y, &ModelOptions::default()).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self {
            inner: surrogate::Surrogate::from_json(s).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.predict(&x).map_err(value_err)
    }

    /// Mean and standard deviation; GP only.
    fn predict_with_std(&self, x: Vec<f64>) -> PyResult<(f64, f64)> {
        match &self.inner {
            surrogate::Surrogate::Gp(m) => m.predict(&x).map_err(value_err),
            _ => Err(PyValueError::new_err("predictive std needs a gp surrogate")),
        }
    }
}

#[pyclass(name = "Policy", module = "cutinit_py")]
struct PyPolicy {
    inner: InitPolicy,
}

#[pymethods]
impl PyPolicy {
    #[new]
    fn new(model: &PySurrogate, n_max: usize) -> PyResult<Self> {
        Ok(Self {
            inner: InitPolicy::new(model.inner.clone(), n_max).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self {
            inner: InitPolicy::from_json(s).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn candidates(&self) -> Vec<usize> {
        self.inner.candidates.clone()
    }

    fn optimal_cuts(&self, instance_json: &str) -> PyResult<usize> {
        self.inner.optimal_cuts(&instance(instance_json)?).map_err(value_err)
    }

    fn scores(&self, instance_json: &str) -> PyResult<Vec<(usize, f64)>> {
        self.inner.scores(&instance(instance_json)?).map_err(value_err)
    }
}

#[pyfunction]
#[pyo3(signature = (a, b, length, sigma_f=1.0, nu=1.5))]
fn matern_kernel(a: Vec<f64>, b: Vec<f64>, length: f64, sigma_f: f64, nu: f64) -> PyResult<f64> {
    let nu = Nu::from_value(nu).map_err(value_err)?;
    surrogate::matern_kernel(&a, &b, length, sigma_f, nu).map_err(value_err)
}

#[pyfunction]
fn default_config() -> String {
    ExperimentConfig::default().to_json()
}

#[pyfunction]
fn config_hash(config_json: &str) -> PyResult<String> {
    Ok(config(Some(config_json))?.hash())
}

#[pyfunction]
fn instance_features(instance_json: &str, n_cuts: usize) -> PyResult<Vec<f64>> {
    Ok(cstr::instance_features(&instance(instance_json)?, n_cuts))
}

/// `k` feasible held-out instances as JSON strings.
#[pyfunction]
#[pyo3(signature = (k, config_json=None))]
fn held_out_instances(k: usize, config_json: Option<&str>) -> PyResult<Vec<String>> {
    let exp = Experiment::new(config(config_json)?).map_err(runtime_err)?;
    Ok(exp.held_out(k).iter().map(|i| i.to_json()).collect())
}

/// Solves one instance from `n_cuts` library cuts (0 for none).
#[pyfunction]
#[pyo3(signature = (instance_json, n_cuts=0, config_json=None))]
fn solve<'py>(
    py: Python<'py>,
    instance_json: &str,
    n_cuts: usize,
    config_json: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let inst = instance(instance_json)?;
    let exp = Experiment::new(config(config_json)?).map_err(runtime_err)?;
    let cuts = select_initial_cuts(&exp.library, n_cuts).map_err(value_err)?;
    let r = exp.case.solve(&inst, &cuts, exp.gbd()).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("objective", r.upper)?;
    d.set_item("lower_bound", r.lower)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    d.set_item("work_units", r.work_units)?;
    d.set_item("wall_seconds", r.wall_seconds)?;
    Ok(d)
}

#[pymodule]
fn cutinit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySurrogate>()?;
    m.add_class::<PyPolicy>()?;
    m.add_function(wrap_pyfunction!(matern_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(config_hash, m)?)?;
    m.add_function(wrap_pyfunction!(instance_features, m)?)?;
    m.add_function(wrap_pyfunction!(held_out_instances, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    Ok(())
}
