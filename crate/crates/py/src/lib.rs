//! Python bindings: scalar bound formulas, pointwise identity residuals,
//! the 1D eigensolver, and the JSON scenario harness.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use wplap::bounds::{self, PiPMode};
use wplap::chart::Chart;
use wplap::eigen::{self, MinimizeOpts, ShootOpts};
use wplap::field::ScalarField;
use wplap::harness;
use wplap::identities::{self, QuadSpec};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// pi_p = 2 pi / (p sin(pi / p)), by closed form or by quadrature.
#[pyfunction]
#[pyo3(signature = (p, mode = "closed_form"))]
fn pi_p(p: f64, mode: &str) -> PyResult<f64> {
    let mode = match mode {
        "closed_form" => PiPMode::ClosedForm,
        "quadrature" => PiPMode::Quadrature,
        other => return Err(err(format!("unknown mode {other:?}"))),
    };
    bounds::pi_p(p, mode).map_err(err)
}

/// Lichnerowicz-type lower bound; `m = None` means m = infinity.
#[pyfunction]
#[pyo3(signature = (p, m, k))]
fn bound_lichnerowicz(p: f64, m: Option<f64>, k: f64) -> PyResult<f64> {
    bounds::bound_lichnerowicz(p, m, k).map_err(err)
}

/// Li-Yau-type diameter bound (p - 1) (pi_p / 2D)^p.
#[pyfunction]
fn bound_liyau(p: f64, d: f64) -> PyResult<f64> {
    bounds::bound_liyau(p, d).map_err(err)
}

/// Negative-curvature bound C(p, m) D^{-p} e^{-sqrt((m-1)K) D}.
#[pyfunction]
fn bound_negative(p: f64, m: f64, k: f64, d: f64) -> PyResult<f64> {
    bounds::bound_negative(p, Some(m), k, d).map_err(err)
}

/// Pointwise Bochner identity residuals (res22, res23) at chart point `x`.
#[pyfunction]
fn bochner_residual(chart: &str, u: &str, f: &str, p: f64, x: Vec<f64>) -> PyResult<(f64, f64)> {
    let chart = Chart::by_id(chart).map_err(err)?;
    let u = ScalarField::parse(u, chart.dim).map_err(err)?;
    let f = ScalarField::parse(f, chart.dim).map_err(err)?;
    let res = identities::bochner_residual(&chart, &f, p, &u, &x).map_err(err)?;
    Ok((res.res22, res.res23))
}

/// Reilly formula residual on a chart with boundary.
#[pyfunction]
#[pyo3(signature = (chart, u, f, p, interior_nodes = 64, boundary_nodes = 256))]
fn reilly_residual(
    chart: &str,
    u: &str,
    f: &str,
    p: f64,
    interior_nodes: usize,
    boundary_nodes: usize,
) -> PyResult<(f64, f64, f64)> {
    let chart = Chart::by_id(chart).map_err(err)?;
    let u = ScalarField::parse(u, chart.dim).map_err(err)?;
    let f = ScalarField::parse(f, chart.dim).map_err(err)?;
    let quad = QuadSpec {
        interior_nodes_per_axis: interior_nodes,
        boundary_nodes,
    };
    let res = identities::reilly_residual(&chart, &f, p, &u, &quad).map_err(err)?;
    Ok((res.interior_lhs, res.boundary_rhs, res.residual))
}

/// First eigenvalue of the weighted p-Laplacian on a 1D model space.
///
/// `space` is the JSON space description used by scenario configs, e.g.
/// `{"kind": "interval", "length": 3.14159, "f": "0", "bc": "dirichlet"}`.
/// Returns `(lambda, converged, eq34_residual)`.
#[pyfunction]
#[pyo3(signature = (space, p = 2.0, n = 1024, seed = 0))]
fn eigensolve(space: &str, p: f64, n: usize, seed: u64) -> PyResult<(f64, bool, f64)> {
    let space = harness::space_from_json(space).map_err(err)?;
    let model = space.build().map_err(err)?;
    let problem = eigen::build_problem(&model, p, n).map_err(err)?;
    let opts = MinimizeOpts {
        seed,
        ..MinimizeOpts::default()
    };
    let result = eigen::minimize_eig(&problem, &opts).map_err(err)?;
    Ok((result.lambda, result.converged, result.weak_residual))
}

/// Independent shooting/bisection eigenvalue oracle for the same spaces.
#[pyfunction]
#[pyo3(signature = (space, p = 2.0))]
fn shooting_eig(space: &str, p: f64) -> PyResult<f64> {
    let space = harness::space_from_json(space).map_err(err)?;
    let model = space.build().map_err(err)?;
    eigen::shooting_eig(&model, p, model.bc, &ShootOpts::default()).map_err(err)
}

/// Run one scenario config (JSON document) and return the report as JSON.
#[pyfunction]
#[pyo3(signature = (config, seed = 0))]
fn run_scenario(config: &str, seed: u64) -> PyResult<String> {
    let config = harness::scenario_from_json(config).map_err(err)?;
    let report = harness::run_scenario(&config, seed).map_err(err)?;
    harness::to_json(&report).map_err(err)
}

/// Run the built-in acceptance suite and return the report as JSON.
#[pyfunction]
#[pyo3(signature = (seed = 0, canonical = true))]
fn run_suite(seed: u64, canonical: bool) -> PyResult<String> {
    let report = harness::run_suite(seed, canonical).map_err(err)?;
    harness::to_json(&report).map_err(err)
}

#[pymodule]
fn wplap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(pi_p, m)?)?;
    m.add_function(wrap_pyfunction!(bound_lichnerowicz, m)?)?;
    m.add_function(wrap_pyfunction!(bound_liyau, m)?)?;
    m.add_function(wrap_pyfunction!(bound_negative, m)?)?;
    m.add_function(wrap_pyfunction!(bochner_residual, m)?)?;
    m.add_function(wrap_pyfunction!(reilly_residual, m)?)?;
    m.add_function(wrap_pyfunction!(eigensolve, m)?)?;
    m.add_function(wrap_pyfunction!(shooting_eig, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
