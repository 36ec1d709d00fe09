//! Python bindings: cylinder functions, the mode solver, scattering delays and packet reports.

use curvewave::barrier1d;
use curvewave::corefn;
use curvewave::scenario::{self, Preset, ScenarioConfig};
use curvewave::spectrum::{self, EigenMode, PotentialSpec};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: curvewave::Error) -> PyErr {
    use curvewave::Error::*;
    match e {
        Domain(_) | Range(_) | Singular(_) | Parse(_) | Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn potential(radius: f64, v0: f64) -> PyResult<PotentialSpec> {
    PotentialSpec::new(radius, v0, 1.0, 1.0).map_err(py_err)
}

type ModeRow = (u32, u32, Complex64, &'static str);

fn rows(modes: Vec<EigenMode>) -> Vec<ModeRow> {
    modes.into_iter().map(|md| (md.m, md.n, md.k, md.class.as_str())).collect()
}

#[pyfunction]
fn bessel_j(m: u32, z: Complex64) -> PyResult<Complex64> {
    corefn::bessel_j(m, z).map_err(py_err)
}

#[pyfunction]
fn hankel1(m: u32, z: Complex64) -> PyResult<Complex64> {
    corefn::hankel1(m, z).map_err(py_err)
}

#[pyfunction]
fn bessel_k(m: u32, x: f64) -> PyResult<f64> {
    corefn::bessel_k(m, x).map_err(py_err)
}

/// Bound modes of angular number `m` as `(m, n, k, class)`.
#[pyfunction]
#[pyo3(signature = (m, radius = 2.0, v0 = 5000.0))]
fn bound_modes(py: Python<'_>, m: u32, radius: f64, v0: f64) -> PyResult<Vec<ModeRow>> {
    let pot = potential(radius, v0)?;
    py.detach(|| spectrum::find_bound_modes(&pot, m)).map(rows).map_err(py_err)
}

/// Resonances with `Re k` in `[k_lo, k_hi]`.
#[pyfunction]
#[pyo3(signature = (m, k_lo, k_hi, radius = 2.0, v0 = 5000.0))]
fn resonances(py: Python<'_>, m: u32, k_lo: f64, k_hi: f64, radius: f64, v0: f64) -> PyResult<Vec<ModeRow>> {
    let pot = potential(radius, v0)?;
    py.detach(|| spectrum::find_resonances(&pot, m, (k_lo, k_hi), 1)).map(|r| rows(r.modes)).map_err(py_err)
}

#[pyfunction]
fn step_phase(e: f64, v0: f64) -> PyResult<f64> {
    barrier1d::step_phase(e, v0).map_err(py_err)
}

#[pyfunction]
fn wigner_delay(e: f64, v0: f64) -> PyResult<f64> {
    barrier1d::wigner_delay(e, v0).map_err(py_err)
}

/// `(l_gh, delay_s0)` for a packet of angular momentum `m0` and wavenumber `k0`.
#[pyfunction]
#[pyo3(signature = (m0, k0, sigma = 100.0, radius = 2.0, v0 = 5000.0))]
fn gh_theory(m0: f64, k0: f64, sigma: f64, radius: f64, v0: f64) -> PyResult<(f64, f64)> {
    let spec = curvewave::packet::PacketSpec::new(potential(radius, v0)?, m0, k0, sigma).map_err(py_err)?;
    let g = barrier1d::gh_theory(&spec).map_err(py_err)?;
    Ok((g.l_gh, g.delay_s0))
}

/// Full graded report for a preset (`"A"`..`"D"`) as JSON text. Solves the mode table.
#[pyfunction]
fn report(py: Python<'_>, preset: &str) -> PyResult<String> {
    let p: Preset = preset.parse().map_err(py_err)?;
    py.detach(|| {
        let prep = scenario::Prepared::new(&ScenarioConfig::preset(p), None)?;
        let (report, _) = scenario::run_report(&prep, 1.0)?;
        serde_json::to_string_pretty(&report).map_err(|e| curvewave::Error::Parse(e.to_string()))
    })
    .map_err(py_err)
}

#[pymodule]
fn curvewave_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(hankel1, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_k, m)?)?;
    m.add_function(wrap_pyfunction!(bound_modes, m)?)?;
    m.add_function(wrap_pyfunction!(resonances, m)?)?;
    m.add_function(wrap_pyfunction!(step_phase, m)?)?;
    m.add_function(wrap_pyfunction!(wigner_delay, m)?)?;
    m.add_function(wrap_pyfunction!(gh_theory, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    Ok(())
}
