//! Python bindings. Structured results cross the boundary as plain dicts and lists.

use ::korobov_ibc as core;
use core::asymptotics::{classify as kz_classify, predicted_n as kz_predicted_n, Classification};
use core::complexity::{ComplexityOptions, Criterion, PathChoice};
use core::oracle::OracleOutcome;
use core::spectrum::EigenStream;
use core::{Error, ParameterFamily, Rule};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::ToleranceUnattainable { .. } | Error::BudgetExceeded { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn criterion(s: &str) -> PyResult<Criterion> {
    s.parse().map_err(PyValueError::new_err)
}

fn path_choice(s: &str) -> PyResult<PathChoice> {
    match s {
        "auto" => Ok(PathChoice::Auto),
        "heap" => Ok(PathChoice::Heap),
        "level_set" | "level-set" => Ok(PathChoice::LevelSet),
        _ => Err(PyValueError::new_err(format!("unknown path {s:?}"))),
    }
}

/// Sequences `alpha_j`, `beta_j`, `sigma_j` defining an additive Korobov field.
#[pyclass(name = "ParameterFamily", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFamily {
    inner: ParameterFamily,
}

#[pymethods]
impl PyFamily {
    /// Parses the JSON descriptor `{"alpha": {...}, "beta": {...}, "sigma": {...}}`.
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(json).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyFamily { inner })
    }

    #[staticmethod]
    fn from_dict(py: Python<'_>, spec: &Bound<'_, PyDict>) -> PyResult<Self> {
        let text: String = py.import("json")?.call_method1("dumps", (spec,))?.extract()?;
        Self::new(&text)
    }

    /// `alpha = 0`, `beta = 1`, `sigma = 2` for every coordinate.
    #[staticmethod]
    fn unit() -> Self {
        PyFamily {
            inner: ParameterFamily::new(Rule::constant(0.0), Rule::constant(1.0), Rule::constant(2.0)),
        }
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("serializable")
    }

    fn alpha(&self, j: u64) -> PyResult<f64> {
        self.inner.alpha(j).map_err(err)
    }

    fn beta(&self, j: u64) -> PyResult<f64> {
        self.inner.beta(j).map_err(err)
    }

    fn sigma(&self, j: u64) -> PyResult<f64> {
        self.inner.sigma(j).map_err(err)
    }

    /// Raises `ValueError` with the violated clause if the family is invalid up to `d`.
    fn validate(&self, d: u64) -> PyResult<()> {
        self.inner.ensure_valid(d).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ParameterFamily({})", self.to_json())
    }
}

/// Riemann zeta as `(value, abs_error)`.
#[pyfunction]
#[pyo3(signature = (s, tol = 1e-14))]
fn zeta(s: f64, tol: f64) -> PyResult<(f64, f64)> {
    let z = core::zeta(s, tol).map_err(err)?;
    Ok((z.value, z.abs_error))
}

/// Trace of the covariance operator as `(value, abs_error)`.
#[pyfunction]
#[pyo3(signature = (family, d, tol = 1e-14))]
fn trace(family: &PyFamily, d: u64, tol: f64) -> PyResult<(f64, f64)> {
    let t = core::trace(&family.inner, d, tol).map_err(err)?;
    Ok((t.value, t.abs_error))
}

/// The `n` largest eigenvalues as `(value, label)` pairs.
#[pyfunction]
fn top_eigenvalues<'py>(py: Python<'py>, family: &PyFamily, d: u64, n: usize) -> PyResult<Vec<(f64, Bound<'py, PyAny>)>> {
    let stream = EigenStream::new(&family.inner, d).map_err(err)?;
    stream.take(n).map(|(v, label)| Ok((v, to_py(py, &label)?))).collect()
}

#[pyfunction]
#[pyo3(signature = (family, d, eps, crit = "nor", path = "auto", tol = 1e-14))]
fn info_complexity<'py>(
    py: Python<'py>,
    family: &PyFamily,
    d: u64,
    eps: f64,
    crit: &str,
    path: &str,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let crit = criterion(crit)?;
    let opts = ComplexityOptions {
        tol,
        path: path_choice(path)?,
        ..Default::default()
    };
    let fam = &family.inner;
    let r = py.detach(|| core::info_complexity(fam, d, eps, crit, &opts)).map_err(err)?;
    to_py(py, &r)
}

/// Error of the best rank-`n` approximation as `(value, abs_error)`.
#[pyfunction]
#[pyo3(signature = (family, d, n, tol = 1e-14))]
fn minimal_error(family: &PyFamily, d: u64, n: u64, tol: f64) -> PyResult<(f64, f64)> {
    let e = core::minimal_error(&family.inner, d, n, tol).map_err(err)?;
    Ok((e.value, e.abs_error))
}

/// Brute-force complexity on the spectrum truncated at frequency `depth`; `None` when inconclusive.
#[pyfunction]
#[pyo3(signature = (family, d, depth, eps, crit = "nor", tol = 1e-14))]
fn oracle_info_complexity<'py>(
    py: Python<'py>,
    family: &PyFamily,
    d: u64,
    depth: u64,
    eps: f64,
    crit: &str,
    tol: f64,
) -> PyResult<Option<Bound<'py, PyAny>>> {
    let crit = criterion(crit)?;
    let spec = core::materialize(&family.inner, d, depth, tol).map_err(err)?;
    match core::oracle_info_complexity(&spec, eps, crit).map_err(err)? {
        OracleOutcome::Conclusive(r) => Ok(Some(to_py(py, &r)?)),
        OracleOutcome::Inconclusive { .. } => Ok(None),
    }
}

#[pyfunction]
#[pyo3(signature = (family, crit = "abs"))]
fn spt_verdict<'py>(py: Python<'py>, family: &PyFamily, crit: &str) -> PyResult<Bound<'py, PyAny>> {
    let crit = criterion(crit)?;
    let fam = &family.inner;
    let v = py.detach(|| core::spt_verdict(fam, crit)).map_err(err)?;
    to_py(py, &v)
}

/// Large-`d` regime of the normalized complexity, as a dict with a `status` key.
#[pyfunction]
fn classify<'py>(py: Python<'py>, family: &PyFamily) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &kz_classify(&family.inner))
}

/// Predicted normalized complexity at `(d, eps)`; `None` in the bounded regime.
#[pyfunction]
fn predicted_n(family: &PyFamily, d: u64, eps: f64) -> PyResult<Option<f64>> {
    match kz_classify(&family.inner) {
        Classification::Applicable(r) => Ok(kz_predicted_n(&r, d, eps).map_err(err)?.value()),
        Classification::NotApplicable { reason } => Err(PyValueError::new_err(reason)),
    }
}

/// Monte Carlo estimate of the rank-`n` projection error against its analytic bracket.
#[pyfunction]
#[pyo3(signature = (family, d = 1, depth = 1000, n = 2, samples = 10_000, seed = 0))]
fn verify_mc<'py>(
    py: Python<'py>,
    family: &PyFamily,
    d: u64,
    depth: u64,
    n: u64,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let fam = &family.inner;
    let r = py.detach(|| core::montecarlo::verify(fam, d, depth, n, samples, seed)).map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
fn korobov_ibc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(top_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(info_complexity, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_error, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_info_complexity, m)?)?;
    m.add_function(wrap_pyfunction!(spt_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_n, m)?)?;
    m.add_function(wrap_pyfunction!(verify_mc, m)?)?;
    Ok(())
}
