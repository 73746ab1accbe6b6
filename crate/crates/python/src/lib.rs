use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use cislunar_ssa::cli::{self, pipeline::Timings, SolverConfig};
use cislunar_ssa::dynamics::{build_catalog, Cr3bpSystem};
use cislunar_ssa::illumination;
use cislunar_ssa::lagrangean::{self, LmConfig};
use cislunar_ssa::model::MpsVariant;
use cislunar_ssa::oracle::{brute_force_optimum, random_instance, MicroDims};
use cislunar_ssa::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::DomainError { .. } => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &cli::RunResult) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Orbit catalog as a list of dicts.
#[pyfunction]
#[pyo3(signature = (spacing_hours = 12.0))]
fn catalog(py: Python<'_>, spacing_hours: f64) -> PyResult<Bound<'_, PyList>> {
    let system = Cr3bpSystem::earth_moon();
    let records = build_catalog(&system, spacing_hours).map_err(to_py)?;
    let list = PyList::empty(py);
    for r in records {
        let d = PyDict::new(py);
        d.set_item("label", r.label())?;
        d.set_item("resonance", (r.resonance.m, r.resonance.n))?;
        d.set_item("period_days", system.tu_to_hours(r.period) / 24.0)?;
        d.set_item("stability", r.stability)?;
        d.set_item("slots", r.slots)?;
        list.append(d)?;
    }
    Ok(list)
}

#[pyfunction]
fn diffuse_phase_function(phi: f64) -> PyResult<f64> {
    illumination::diffuse_phase_function(phi).map_err(to_py)
}

/// Run a scenario file; keyword overrides mirror the command-line flags.
#[pyfunction]
#[pyo3(signature = (path, p = None, fov = None, m_crit = None, time_limit = None, threads = None, output = None))]
#[allow(clippy::too_many_arguments)]
fn run_scenario<'py>(
    py: Python<'py>,
    path: PathBuf,
    p: Option<usize>,
    fov: Option<f64>,
    m_crit: Option<f64>,
    time_limit: Option<f64>,
    threads: Option<usize>,
    output: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = cli::load_config(&path).map_err(to_py)?;
    if let Some(p) = p {
        config.p = p;
    }
    if let Some(fov) = fov {
        config.observer.fov_deg = fov;
    }
    if let Some(m) = m_crit {
        config.observer.m_crit = m;
    }
    if let (Some(limit), SolverConfig::Lm { lm }) = (time_limit, &mut config.solver) {
        lm.time_limit_s = Some(limit);
    }
    if threads.is_some() {
        config.threads = threads;
    }
    if output.is_some() {
        config.output = output;
    }
    let result = py.detach(|| cli::run_scenario(&config)).map_err(to_py)?;
    json_to_py(py, &result)
}

/// Build a scenario and write its MPS model without solving.
#[pyfunction]
fn export_mps(py: Python<'_>, path: PathBuf, variant: &str, out: PathBuf) -> PyResult<()> {
    let variant = match variant {
        "aggregate" => MpsVariant::Aggregate,
        "time-robust" => MpsVariant::TimeRobust,
        "target-robust" => MpsVariant::TargetRobust,
        other => return Err(PyValueError::new_err(format!("unknown MPS variant {other:?}"))),
    };
    let config = cli::load_config(&path).map_err(to_py)?;
    py.detach(|| {
        let scenario = cli::build_scenario(&config, &mut Timings::default())?;
        cislunar_ssa::model::export_mps(&scenario.instance, variant, &out)
    })
    .map_err(to_py)
}

/// Seeded micro instance solved both exactly and by the Lagrangean method.
#[pyfunction]
#[pyo3(signature = (seed, m = 2, n = 4, ell = 2, q = 4, p = 2, density = 0.4))]
#[allow(clippy::too_many_arguments)]
fn micro_check<'py>(
    py: Python<'py>,
    seed: u64,
    m: usize,
    n: usize,
    ell: usize,
    q: usize,
    p: usize,
    density: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let instance = random_instance(seed, MicroDims { m, n, ell, q, p }, density)
        .to_instance()
        .map_err(to_py)?;
    let ((z_star, exact), outcome) = py
        .detach(|| -> cislunar_ssa::Result<_> {
            Ok((brute_force_optimum(&instance)?, lagrangean::run(&instance, &LmConfig::default())?))
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("z_star", z_star)?;
    d.set_item("optimal_slots", exact.slots)?;
    d.set_item("lower", outcome.solution.objective)?;
    d.set_item("upper", outcome.best_upper)?;
    d.set_item("slots", outcome.solution.slots.clone())?;
    Ok(d)
}

#[pymodule(name = "cislunar_ssa")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(diffuse_phase_function, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(export_mps, m)?)?;
    m.add_function(wrap_pyfunction!(micro_check, m)?)?;
    Ok(())
}
