//! Python bindings. Reports come back as plain dicts with the same keys as
//! the CLI JSON; infinities are real floats rather than the string "inf".

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use qlst_core::cli::{self, SolveFor};
use qlst_core::config::RunConfig;
use qlst_core::{Error, Resolution};
use serde_json::Value;

create_exception!(qlst, QlstError, PyException, "Raised for invalid input, solver failure or an unreachable target.");

fn py_err(e: Error) -> PyErr {
    QlstError::new_err((e.kind(), e.to_string(), e.exit_code()))
}

/// Accepts an int, or "inf" / float('inf') / None for an unquantized branch.
fn resolution(obj: Option<&Bound<'_, PyAny>>) -> PyResult<Resolution> {
    let Some(obj) = obj else {
        return Ok(Resolution::Infinite);
    };
    if obj.is_none() {
        return Ok(Resolution::Infinite);
    }
    if let Ok(b) = obj.extract::<u32>() {
        return format!("{b}").parse().map_err(py_err);
    }
    obj.str()?.to_str()?.parse().map_err(py_err)
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) if s == "inf" => f64::INFINITY.into_pyobject(py)?.into_any(),
        Value::String(s) if s == "-inf" => f64::NEG_INFINITY.into_pyobject(py)?.into_any(),
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn run_config(
    rho_db: f64,
    alpha: f64,
    beta: f64,
    tau: Option<f64>,
    tau_prime: Option<f64>,
    a: Option<&Bound<'_, PyAny>>,
    b: Option<&Bound<'_, PyAny>>,
    mse_g: Option<f64>,
) -> PyResult<RunConfig> {
    let cfg = RunConfig {
        rho_db,
        alpha,
        beta,
        tau,
        tau_prime,
        a: resolution(a)?,
        b: resolution(b)?,
        mse_g,
        ..Default::default()
    };
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

/// Quantizer step that gives each extreme level probability 2^-b.
#[pyfunction]
fn calibrate_step(bits: u32, rho: f64) -> PyResult<f64> {
    qlst_core::calibrate_step(Resolution::Bits(bits), rho).map_err(py_err)
}

/// QPSK symbol-error rate of the decoupled channel with SNR `qtilde`.
#[pyfunction]
fn ser_qpsk_theory(qtilde: f64) -> PyResult<f64> {
    qlst_core::ser::ser_qpsk_theory(qtilde).map_err(py_err)
}

/// Fixed points, equivalent system and mutual information per receiver.
#[pyfunction]
#[pyo3(signature = (rho_db, alpha, tau=None, tau_prime=None, beta=40.0, a=None, b=None, mse_g=None))]
#[allow(clippy::too_many_arguments)]
fn analyze<'py>(
    py: Python<'py>,
    rho_db: f64,
    alpha: f64,
    tau: Option<f64>,
    tau_prime: Option<f64>,
    beta: f64,
    a: Option<&Bound<'py, PyAny>>,
    b: Option<&Bound<'py, PyAny>>,
    mse_g: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = run_config(rho_db, alpha, beta, tau, tau_prime, a, b, mse_g)?;
    let v = py.detach(|| cli::analyze(&cfg)).map_err(py_err)?;
    to_py(py, &v)
}

/// Optimal training fraction and rate, or the α that reaches `target`.
#[pyfunction]
#[pyo3(signature = (rho_db, alpha=4.0, beta=40.0, a=None, b=None, target=None, known=false))]
#[allow(clippy::too_many_arguments)]
fn optimize<'py>(
    py: Python<'py>,
    rho_db: f64,
    alpha: f64,
    beta: f64,
    a: Option<&Bound<'py, PyAny>>,
    b: Option<&Bound<'py, PyAny>>,
    target: Option<f64>,
    known: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = run_config(rho_db, alpha, beta, None, None, a, b, None)?;
    let v = py.detach(|| cli::optimize(&cfg, target, known)).map_err(py_err)?;
    to_py(py, &v)
}

/// QPSK SER with training load τ′. With `target`, solves for α instead.
#[pyfunction]
#[pyo3(signature = (rho_db, alpha, tau_prime=2.0, b=None, target=None))]
fn ser<'py>(
    py: Python<'py>,
    rho_db: f64,
    alpha: f64,
    tau_prime: f64,
    b: Option<&Bound<'py, PyAny>>,
    target: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = run_config(rho_db, alpha, 40.0, None, Some(tau_prime), None, b, None)?;
    let cfg = RunConfig { a: Resolution::Bits(1), ..cfg };
    let v = py.detach(|| cli::ser(&cfg, target, SolveFor::Alpha)).map_err(py_err)?;
    to_py(py, &v)
}

/// GAMP2 Monte Carlo SER with M transmitters.
#[pyfunction]
#[pyo3(signature = (rho_db, alpha, tau_prime=2.0, b=None, m=50, n_trials=100, seed=0))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    rho_db: f64,
    alpha: f64,
    tau_prime: f64,
    b: Option<&Bound<'py, PyAny>>,
    m: usize,
    n_trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = run_config(rho_db, alpha, 40.0, None, Some(tau_prime), None, b, None)?;
    cfg.a = Resolution::Bits(1);
    cfg.simulation.m = m;
    cfg.simulation.n_trials = n_trials;
    cfg.simulation.seed = seed;
    let v = py.detach(|| cli::simulate(&cfg)).map_err(py_err)?;
    to_py(py, &v)
}

/// Runs the command line with `args` (without the program name) and
/// returns (exit_code, stdout, stderr).
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String, String) {
    let argv = std::iter::once("qlst".to_owned()).chain(args);
    let out = py.detach(|| cli::main_with_args(argv));
    (out.code, out.stdout, out.stderr)
}

#[pymodule]
#[pyo3(name = "qlst")]
fn qlst_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QlstError", m.py().get_type::<QlstError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(calibrate_step, m)?)?;
    m.add_function(wrap_pyfunction!(ser_qpsk_theory, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(ser, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
