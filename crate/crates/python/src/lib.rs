//! Python bindings for `cfill`.
//!
//! Structured results (profiles, reports) are returned as plain dicts.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use cfill::convex_roof::{convex_roof_f4, MixedState, RoofOptions};
use cfill::geometry::{export_mesh, shape_for, MeshFormat, MeshMeta};
use cfill::measures::{fill4_from_profile, rank_symbol};
use cfill::verify::{run_suite, Suite, SuiteSettings};
use cfill::{ConcurrenceProfile, DensityMatrix, Error, PureState, SolverOptions};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. }
        | Error::Internal(_)
        | Error::InfeasibleProfile(_)
        | Error::NegativeSigma(_)
        | Error::DegenerateShape => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn solver_options(tol: f64, max_iter: usize, restarts: usize, seed: u64) -> SolverOptions {
    SolverOptions {
        tol,
        max_iter,
        restarts,
        seed,
    }
}

/// A normalized 3- or 4-qubit pure state (qubit 1 is the most significant bit).
#[pyclass(name = "State", module = "cfill_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: PureState,
}

#[pymethods]
impl PyState {
    #[new]
    fn new(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        let n = match amplitudes.len() {
            8 => 3,
            16 => 4,
            len => return Err(PyValueError::new_err(format!("expected 8 or 16 amplitudes, got {len}"))),
        };
        PureState::new(n, amplitudes).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn named(name: &str) -> PyResult<Self> {
        cfill::named_state(name).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (seed, n_qubits=4))]
    fn haar(seed: u64, n_qubits: usize) -> PyResult<Self> {
        cfill::haar_random_state(n_qubits, seed)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        PureState::from_json_str(text).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_json()).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn reduced_purity(&self, keep: Vec<usize>) -> PyResult<f64> {
        self.inner.reduced_purity(&keep).map_err(py_err)
    }

    /// Qubit `q` of the result is qubit `perm[q - 1]` of this state.
    fn permute(&self, perm: Vec<usize>) -> PyResult<Self> {
        self.inner.permute_qubits(&perm).map(|inner| Self { inner }).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("State(n_qubits={})", self.inner.n_qubits())
    }
}

#[pyfunction]
fn named_state(name: &str) -> PyResult<PyState> {
    PyState::named(name)
}

#[pyfunction]
#[pyo3(signature = (seed, n_qubits=4))]
fn haar_random_state(seed: u64, n_qubits: usize) -> PyResult<PyState> {
    PyState::haar(seed, n_qubits)
}

#[pyfunction]
fn concurrence_profile<'py>(py: Python<'py>, state: &PyState) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &cfill::concurrence_profile(&state.inner).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (state, tol=1e-12, max_iter=200, restarts=16, seed=0))]
fn f4(state: &PyState, tol: f64, max_iter: usize, restarts: usize, seed: u64) -> PyResult<f64> {
    cfill::measures::concurrence_fill_4_with(&state.inner, &solver_options(tol, max_iter, restarts, seed))
        .map_err(py_err)
}

#[pyfunction]
fn f3(state: &PyState) -> PyResult<f64> {
    cfill::concurrence_fill_3(&state.inner).map_err(py_err)
}

#[pyfunction]
fn gmc(state: &PyState) -> PyResult<f64> {
    cfill::gmc(&state.inner).map_err(py_err)
}

#[pyfunction]
fn gbc(state: &PyState) -> PyResult<f64> {
    cfill::gbc(&state.inner).map_err(py_err)
}

/// Solves for the six split areas and the multiplier from a concurrence
/// profile given as four one-to-other and three two-to-other values
/// (cuts 12|34, 13|24, 14|23).
#[pyfunction]
#[pyo3(signature = (one_to_other, two_to_other, tol=1e-12, max_iter=200, restarts=16, seed=0))]
fn solve_sigma<'py>(
    py: Python<'py>,
    one_to_other: [f64; 4],
    two_to_other: [f64; 3],
    tol: f64,
    max_iter: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let profile = ConcurrenceProfile::new(one_to_other, two_to_other);
    let opts = solver_options(tol, max_iter, restarts, seed);
    to_py(py, &cfill::solve_sigma(&profile, &opts).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (state, tol=1e-12, max_iter=200, restarts=16, seed=0))]
fn measure<'py>(
    py: Python<'py>,
    state: &PyState,
    tol: f64,
    max_iter: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = solver_options(tol, max_iter, restarts, seed);
    to_py(py, &cfill::measure(&state.inner, &opts).map_err(py_err)?)
}

/// `[(measure, value_a, value_b, symbol)]` for GMC, GBC and F4.
#[pyfunction]
#[pyo3(signature = (a, b, tol=1e-6))]
fn compare(a: &PyState, b: &PyState, tol: f64) -> PyResult<Vec<(&'static str, f64, f64, char)>> {
    let opts = SolverOptions::default();
    let ra = cfill::measure(&a.inner, &opts).map_err(py_err)?;
    let rb = cfill::measure(&b.inner, &opts).map_err(py_err)?;
    Ok([("gmc", ra.gmc, rb.gmc), ("gbc", ra.gbc, rb.gbc), ("f4", ra.f4, rb.f4)]
        .into_iter()
        .map(|(m, x, y)| (m, x, y, rank_symbol(x, y, tol)))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (suite, samples=100, seed=0, restarts=10, unitaries=50))]
fn verify<'py>(
    py: Python<'py>,
    suite: &str,
    samples: usize,
    seed: u64,
    restarts: usize,
    unitaries: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = suite.parse().map_err(py_err)?;
    if samples == 0 {
        return Err(PyValueError::new_err("samples must be at least 1"));
    }
    let settings = SuiteSettings {
        starts: restarts,
        local_unitaries: unitaries,
        ..SuiteSettings::default()
    };
    let report = py.detach(|| run_suite(suite, samples, seed, &settings));
    to_py(py, &report)
}

/// Mesh of the concurrence tetrahedron as OBJ or JSON text.
#[pyfunction]
#[pyo3(signature = (state, format="obj"))]
fn export_geometry(state: &PyState, format: &str) -> PyResult<String> {
    let format: MeshFormat = format.parse().map_err(py_err)?;
    let profile = cfill::concurrence_profile(&state.inner).map_err(py_err)?;
    let fill = fill4_from_profile(&profile, &SolverOptions::default()).map_err(py_err)?;
    let meta = MeshMeta {
        volume: fill.volume,
        f4: fill.f4,
        degeneracy: fill.degeneracy,
    };
    let shape = shape_for(&fill.solution).map_err(py_err)?;
    let bytes = export_mesh(&shape, meta, format).map_err(py_err)?;
    String::from_utf8(bytes).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[derive(Serialize)]
struct RoofReport {
    value: f64,
    rank: usize,
    start_values: Vec<f64>,
    spread: f64,
    weights: Vec<f64>,
}

/// Upper bound on the convex-roof F4 of a 16x16 density matrix given as
/// nested lists of complex numbers.
#[pyfunction]
#[pyo3(signature = (rho, budget=200, starts=4, seed=0, ensemble_size=None))]
fn convex_roof<'py>(
    py: Python<'py>,
    rho: Vec<Vec<Complex64>>,
    budget: usize,
    starts: usize,
    seed: u64,
    ensemble_size: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let state = MixedState::new(DensityMatrix::from_rows(&rho).map_err(py_err)?).map_err(py_err)?;
    let opts = RoofOptions {
        ensemble_size,
        budget,
        starts,
        seed,
    };
    let r = py.detach(|| convex_roof_f4(&state, &opts)).map_err(py_err)?;
    to_py(
        py,
        &RoofReport {
            value: r.value,
            rank: state.rank(),
            start_values: r.start_values,
            spread: r.spread,
            weights: r.best.weights,
        },
    )
}

#[pymodule]
fn cfill_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(named_state, m)?)?;
    m.add_function(wrap_pyfunction!(haar_random_state, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_profile, m)?)?;
    m.add_function(wrap_pyfunction!(f4, m)?)?;
    m.add_function(wrap_pyfunction!(f3, m)?)?;
    m.add_function(wrap_pyfunction!(gmc, m)?)?;
    m.add_function(wrap_pyfunction!(gbc, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(export_geometry, m)?)?;
    m.add_function(wrap_pyfunction!(convex_roof, m)?)?;
    Ok(())
}
