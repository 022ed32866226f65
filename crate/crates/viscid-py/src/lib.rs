//! Python bindings for the core types and operations: profile evaluation,
//! corrector fields, blow-up coordinates, viscous runs, measurement tools,
//! and the experiment driver.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use viscid::analysis;
use viscid::assembly;
use viscid::cli;
use viscid::hyperbolic::{self, InviscidSolution, NonshockData};
use viscid::model::SystemSpec;
use viscid::parabolic::{self, Grid1D, ViscousRunConfig};
use viscid::profile::{self, CubicParams, SpacetimePoint};

fn err(e: viscid::ViscidError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Self-similar profile value u(t, x) for the standard normalization.
#[pyfunction]
fn cubic_root(t: f64, x: f64) -> PyResult<f64> {
    profile::cubic_root(SpacetimePoint::new(t, x), CubicParams::standard()).map_err(err)
}

/// Profile companions (u, m, d, e) at one spacetime point.
#[pyfunction]
fn profile_eval(t: f64, x: f64) -> PyResult<(f64, f64, f64, f64)> {
    let ev = profile::profile_eval(SpacetimePoint::new(t, x), CubicParams::standard())
        .map_err(err)?;
    Ok((ev.u, ev.m, ev.d, ev.e))
}

/// First outer corrector psi1(t, x) for scalar Burgers with data at t0.
#[pyfunction]
fn psi1(t: f64, x: f64, t0: f64) -> PyResult<f64> {
    let sol =
        InviscidSolution::new(SystemSpec::burgers(), t0, NonshockData::Zero).map_err(err)?;
    hyperbolic::outer_corrector_psi1(&sol, SpacetimePoint::new(t, x)).map_err(err)
}

/// Zeroth-column grid term sigma_{1,0}(t, x).
#[pyfunction]
fn sigma10(t: f64, x: f64) -> PyResult<f64> {
    hyperbolic::grid_sigma10(SpacetimePoint::new(t, x), CubicParams::standard()).map_err(err)
}

/// Matching radius R of a system given by label ("burgers" or
/// "burgers-transport").
#[pyfunction]
#[pyo3(signature = (label, b_cross = 1.0))]
fn matching_radius(label: &str, b_cross: f64) -> PyResult<f64> {
    let sys = SystemSpec::from_label(label, b_cross).map_err(err)?;
    assembly::compute_matching_radius(&sys).map_err(err)
}

/// Smooth cutoff transition theta(s).
#[pyfunction]
fn theta(s: f64) -> f64 {
    assembly::theta(s)
}

/// Blow-up coordinates (T, X, Psi).
#[pyfunction]
fn blowup(t: f64, x: f64, psi: Vec<f64>, nu: f64) -> PyResult<(f64, f64, Vec<f64>)> {
    parabolic::blowup(t, x, &psi, nu).map_err(err)
}

/// Inverse of blowup.
#[pyfunction]
fn blowdown(t_inner: f64, x_inner: f64, psi_inner: Vec<f64>, nu: f64) -> PyResult<(f64, f64, Vec<f64>)> {
    parabolic::blowdown(t_inner, x_inner, &psi_inner, nu).map_err(err)
}

/// Log-log OLS fit; returns (slope, intercept, r_squared).
#[pyfunction]
fn fit_rate(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let f = analysis::fit_rate(&xs, &ys).map_err(err)?;
    Ok((f.slope, f.intercept, f.r_squared))
}

/// Dyadic-separation Hölder seminorm estimate of uniformly gridded data.
#[pyfunction]
#[pyo3(signature = (values, dx, alpha, window = None))]
fn holder_seminorm(values: Vec<f64>, dx: f64, alpha: f64, window: Option<f64>) -> PyResult<f64> {
    Ok(analysis::holder_seminorm(&values, dx, alpha, window).map_err(err)?.seminorm)
}

/// A completed viscous Burgers run: snapshot times, cell centers, and the
/// shocking-component snapshots.
#[pyclass]
struct BurgersRun {
    #[pyo3(get)]
    times: Vec<f64>,
    #[pyo3(get)]
    cell_centers: Vec<f64>,
    #[pyo3(get)]
    snapshots: Vec<Vec<f64>>,
    #[pyo3(get)]
    max_step: f64,
}

/// Runs viscous Burgers with self-similar data on [-half_width, half_width].
#[pyfunction]
#[pyo3(signature = (nu, t0, half_width, n_cells, store_times))]
fn run_burgers(
    nu: f64,
    t0: f64,
    half_width: f64,
    n_cells: usize,
    store_times: Vec<f64>,
) -> PyResult<BurgersRun> {
    let sol =
        InviscidSolution::new(SystemSpec::burgers(), t0, NonshockData::Zero).map_err(err)?;
    let grid = Grid1D::symmetric(half_width, n_cells).map_err(err)?;
    let mut cfg = ViscousRunConfig::new(SystemSpec::burgers(), nu, t0, 0.0, grid);
    cfg.store_times = store_times;
    let slab = parabolic::run_viscous_from_inviscid(&cfg, &sol).map_err(err)?;
    let centers = (0..slab.grid.n_cells).map(|i| slab.grid.cell_center(i)).collect();
    let snaps = (0..slab.times.len()).map(|k| slab.component(k, 0).to_vec()).collect();
    Ok(BurgersRun {
        times: slab.times.clone(),
        cell_centers: centers,
        snapshots: snaps,
        max_step: slab.max_step,
    })
}

/// Runs an experiment from config text, writing artifacts to out_dir.
/// Returns the process exit code (0 success, 2 audit failure).
#[pyfunction]
#[pyo3(signature = (config_text, out_dir, workers = 1, plot = false))]
fn run_experiment(config_text: &str, out_dir: &str, workers: usize, plot: bool) -> PyResult<i32> {
    let cfg = cli::parse_config(config_text).map_err(err)?;
    cli::run_experiment(&cfg, std::path::Path::new(out_dir), workers, plot).map_err(err)
}

#[pymodule]
fn viscid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(cubic_root, m)?)?;
    m.add_function(wrap_pyfunction!(profile_eval, m)?)?;
    m.add_function(wrap_pyfunction!(psi1, m)?)?;
    m.add_function(wrap_pyfunction!(sigma10, m)?)?;
    m.add_function(wrap_pyfunction!(matching_radius, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(blowup, m)?)?;
    m.add_function(wrap_pyfunction!(blowdown, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(holder_seminorm, m)?)?;
    m.add_function(wrap_pyfunction!(run_burgers, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<BurgersRun>()?;
    Ok(())
}
