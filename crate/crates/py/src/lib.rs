//! Python bindings: ground states, intrinsic suprema, the sharpness probe,
//! IU bounds and the command-line pipeline.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use ultracontract::cli::{execute, Subcommand};
use ultracontract::geometry::{ExampleModel, ModelManifold, Potential, RadialGrid};
use ultracontract::heat::resolved_intrinsic_sup;
use ultracontract::profiles::{iu_upper_bound_ln, sectional_rate, BoundConstants, RateFunction};
use ultracontract::spectral::{discretize, lowest_eigenpair};
use ultracontract::verify::{sharpness_probe, ExampleKind, SharpnessThresholds};
use ultracontract::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Invalid(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn kind(name: &str) -> PyResult<ExampleKind> {
    match name {
        "e1" => Ok(ExampleKind::E1),
        "e2" => Ok(ExampleKind::E2),
        _ => Err(PyValueError::new_err(format!("unknown example {name:?}, expected \"e1\" or \"e2\""))),
    }
}

fn model(example: &str, delta: f64, theta: f64, d: usize, r_max: f64, n: usize) -> PyResult<(RadialGrid, ExampleModel)> {
    let grid = RadialGrid::new(r_max, n).map_err(py_err)?;
    let m = kind(example)?.build(d, delta, theta, grid).map_err(py_err)?;
    Ok((grid, m))
}

/// `(λ₀, r, φ₀)` for an example model.
#[pyfunction]
#[pyo3(signature = (example, delta, theta=1.0, d=3, r_max=20.0, n=2048))]
fn ground_state(example: &str, delta: f64, theta: f64, d: usize, r_max: f64, n: usize) -> PyResult<(f64, Vec<f64>, Vec<f64>)> {
    let (grid, m) = model(example, delta, theta, d, r_max, n)?;
    let op = discretize(&m.manifold, &m.potential, 0.0).map_err(py_err)?;
    let p = lowest_eigenpair(&op).map_err(py_err)?;
    Ok((p.lambda, grid.nodes(), p.phi))
}

/// Lowest Dirichlet eigenvalue of the hyperbolic ball of radius `r_max`.
#[pyfunction]
#[pyo3(signature = (d, r_max=30.0, n=4096))]
fn hyperbolic_lambda0(d: usize, r_max: f64, n: usize) -> PyResult<f64> {
    let grid = RadialGrid::new(r_max, n).map_err(py_err)?;
    let m = ModelManifold::hyperbolic(d, grid).map_err(py_err)?;
    let op = discretize(&m, &Potential::zero(), 0.0).map_err(py_err)?;
    Ok(lowest_eigenpair(&op).map_err(py_err)?.lambda)
}

/// One dict per time with `t`, `log_s`, `log_s_pole`, `modes`,
/// `truncation_bound` and `resolved`.
#[pyfunction]
#[pyo3(signature = (example, delta, times, theta=1.0, d=3, r_max=20.0, n=2048))]
fn intrinsic_sup<'py>(
    py: Python<'py>,
    example: &str,
    delta: f64,
    times: Vec<f64>,
    theta: f64,
    d: usize,
    r_max: f64,
    n: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let (grid, m) = model(example, delta, theta, d, r_max, n)?;
    let op = discretize(&m.manifold, &m.potential, 0.0).map_err(py_err)?;
    let (_, reports) = py.detach(|| resolved_intrinsic_sup(&op, &grid.nodes(), &times)).map_err(py_err)?;
    reports
        .iter()
        .map(|r| {
            let row = PyDict::new(py);
            row.set_item("t", r.t)?;
            row.set_item("log_s", r.log_s_empirical)?;
            row.set_item("log_s_pole", r.s_pole.ln())?;
            row.set_item("modes", r.modes_used)?;
            row.set_item("truncation_bound", r.truncation_bound)?;
            row.set_item("resolved", r.is_resolved())?;
            Ok(row)
        })
        .collect()
}

/// `(verdict, ladder, log_s, ratios)` from the domain-growth probe.
#[pyfunction]
#[pyo3(signature = (example, delta, theta=1.0, t=0.5, ladder=vec![10.0, 15.0, 20.0], n=2048, d=3))]
fn sharpness(
    py: Python<'_>,
    example: &str,
    delta: f64,
    theta: f64,
    t: f64,
    ladder: Vec<f64>,
    n: usize,
    d: usize,
) -> PyResult<(String, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let k = kind(example)?;
    let rep = py
        .detach(|| sharpness_probe(k, d, delta, theta, t, &ladder, n, SharpnessThresholds::default()))
        .map_err(py_err)?;
    Ok((rep.verdict.name().to_string(), rep.ladder, rep.log_s, rep.ratios))
}

/// `ln` of the IU bound at time `t` for the pinched-curvature rate of an
/// example with parameter `theta`, or for `exp[θ(1 + r^{-ε'})]` when
/// `rate_epsilon` is given.
#[pyfunction]
#[pyo3(signature = (t, theta, delta=3.0, epsilon=0.5, rate_epsilon=None, d=3))]
fn log_iu_bound(t: f64, theta: f64, delta: f64, epsilon: f64, rate_epsilon: Option<f64>, d: usize) -> PyResult<f64> {
    let beta = match rate_epsilon {
        Some(e) => RateFunction::exp_power(theta, e),
        None => {
            let (_, m) = model("e1", delta, 1.0, d, 20.0, 64)?;
            sectional_rate(m.growth, m.big_k, BoundConstants::default().with_theta(theta), d)
        }
    };
    iu_upper_bound_ln(&beta, epsilon, t).map_err(py_err)
}

/// Runs a command-line subcommand and returns its exit code.
#[pyfunction]
#[pyo3(signature = (subcommand, config, out=None, seed=None, quiet=true))]
fn run(subcommand: &str, config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, quiet: bool) -> PyResult<i32> {
    let cmd = Subcommand::parse(subcommand).ok_or_else(|| PyValueError::new_err(format!("unknown subcommand {subcommand:?}")))?;
    Ok(execute(cmd, &config, out.as_deref(), seed, quiet))
}

#[pymodule]
#[pyo3(name = "ultracontract")]
pub fn ultracontract_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(hyperbolic_lambda0, m)?)?;
    m.add_function(wrap_pyfunction!(intrinsic_sup, m)?)?;
    m.add_function(wrap_pyfunction!(sharpness, m)?)?;
    m.add_function(wrap_pyfunction!(log_iu_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
