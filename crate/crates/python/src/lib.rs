//! Python bindings: couplings, bounds, closed forms, exact averages and fits.

#![allow(clippy::useless_conversion)]

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use csm_core::bound::{self, Backend, BoundProblem};
use csm_core::descriptor::parse_list;
use csm_core::extrapolation::{self, Series};
use csm_core::{ed, tables, Error, FieldStrength, Normalization, Quantity};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Parse(_) | Error::DegenerateCouplings(..) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn quantity(name: &str) -> PyResult<Quantity> {
    name.parse().map_err(py_err)
}

#[pyclass(name = "CouplingSet", module = "csm_bounds")]
#[derive(Clone)]
pub struct PyCouplingSet {
    inner: csm_core::CouplingSet,
}

#[pymethods]
impl PyCouplingSet {
    #[new]
    fn new(values: Vec<f64>) -> PyResult<Self> {
        Ok(PyCouplingSet { inner: csm_core::CouplingSet::from_f64(values).map_err(py_err)? })
    }

    /// `J_k = exp(-k x / N)`, by default rescaled to unit second moment.
    #[staticmethod]
    #[pyo3(signature = (n, x, normalization = "sigma2"))]
    fn exponential(n: usize, x: f64, normalization: &str) -> PyResult<Self> {
        let norm: Normalization = normalization.parse().map_err(py_err)?;
        Ok(PyCouplingSet { inner: csm_core::CouplingSet::exponential(n, x, norm).map_err(py_err)? })
    }

    /// Exact couplings from integers, e.g. `[1, 2, 4]`.
    #[staticmethod]
    fn integers(values: Vec<i64>) -> PyResult<Self> {
        Ok(PyCouplingSet { inner: csm_core::CouplingSet::from_integers(&values).map_err(py_err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn x(&self) -> Option<f64> {
        self.inner.x()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn sigma(&self, m: u32) -> f64 {
        self.inner.sigma(m)
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        match self.inner.x() {
            Some(x) => format!("CouplingSet(N={}, x={x})", self.inner.n()),
            None => format!("CouplingSet({:?})", self.inner.values()),
        }
    }
}

#[pyclass(name = "BoundResult", module = "csm_bounds", get_all)]
#[derive(Clone)]
pub struct PyBoundResult {
    value: f64,
    rank: usize,
    residual: f64,
    backend: String,
    flags: Vec<String>,
}

#[pymethods]
impl PyBoundResult {
    fn __repr__(&self) -> String {
        format!("BoundResult(value={}, rank={}, flags={:?})", self.value, self.rank, self.flags)
    }
}

impl From<bound::BoundResult> for PyBoundResult {
    fn from(r: bound::BoundResult) -> Self {
        PyBoundResult {
            value: r.value,
            rank: r.rank,
            residual: r.residual,
            backend: r.backend.to_string(),
            flags: r.flags.iter().map(ToString::to_string).collect(),
        }
    }
}

/// Quantity list for a named set.
#[pyfunction]
#[pyo3(signature = (name, n = 0))]
fn named_set(name: &str, n: usize) -> PyResult<Vec<String>> {
    Ok(bound::named_set(name, n).map_err(py_err)?.iter().map(ToString::to_string).collect())
}

/// Mazur bound of `target` from `quantities` (names, or one comma-separated string).
#[pyfunction]
#[pyo3(signature = (quantities, couplings, h = 0.0, target = "S0z", backend = "tables"))]
fn solve_bound(
    py: Python<'_>,
    quantities: Bound<'_, PyAny>,
    couplings: &PyCouplingSet,
    h: f64,
    target: &str,
    backend: &str,
) -> PyResult<PyBoundResult> {
    let qs: Vec<Quantity> = if let Ok(s) = quantities.extract::<String>() {
        parse_list(&s).map_err(py_err)?
    } else {
        quantities.extract::<Vec<String>>()?.iter().map(|s| quantity(s)).collect::<PyResult<_>>()?
    };
    let backend: Backend = backend.parse().map_err(py_err)?;
    let p =
        BoundProblem::new(quantity(target)?, qs, couplings.inner.clone(), FieldStrength::from_f64(h).map_err(py_err)?)
            .with_backend(backend);
    let r = py.allow_threads(|| bound::solve_bound(&p)).map_err(py_err)?;
    Ok(r.into())
}

#[pyfunction]
fn simple_bound(couplings: &PyCouplingSet) -> f64 {
    bound::simple_bound(&couplings.inner)
}

#[pyfunction]
fn simple_bound_limit(x: f64) -> PyResult<f64> {
    bound::simple_bound_limit(x).map_err(py_err)
}

/// Overhauser-field bound from `{I^z, H_l^z}`; flagged approximate.
#[pyfunction]
fn field_field_bound(py: Python<'_>, couplings: &PyCouplingSet) -> PyResult<PyBoundResult> {
    let c = couplings.inner.clone();
    Ok(py.allow_threads(|| bound::field_field_bound(&c, None, Backend::Tables)).map_err(py_err)?.into())
}

#[pyfunction]
fn infinite_field_bound(x: f64, h: f64) -> PyResult<f64> {
    bound::infinite_field_bound(x, h).map_err(py_err)
}

#[pyfunction]
fn gaussian_asymptotic_bound(couplings: &PyCouplingSet, m_max: u32) -> PyResult<PyBoundResult> {
    Ok(bound::gaussian_asymptotic_bound(&couplings.inner, m_max).map_err(py_err)?.into())
}

/// Scalar product `(lhs|rhs)` from the element tables.
#[pyfunction]
#[pyo3(signature = (lhs, rhs, couplings, h = 0.0))]
fn element(lhs: &str, rhs: &str, couplings: &PyCouplingSet, h: f64) -> PyResult<f64> {
    let field = FieldStrength::from_f64(h).map_err(py_err)?;
    tables::element(quantity(lhs)?, quantity(rhs)?, &couplings.inner, &field).map_err(py_err)
}

/// Exact long-time average of `S0z` from full diagonalization.
#[pyfunction]
#[pyo3(signature = (couplings, h = 0.0, deg_tol = ed::DEFAULT_DEG_TOL))]
fn ed_persisting_correlation(couplings: &PyCouplingSet, h: f64, deg_tol: f64) -> PyResult<f64> {
    let field = FieldStrength::from_f64(h).map_err(py_err)?;
    ed::ed_persisting_correlation_strict(&couplings.inner, &field, deg_tol).map_err(py_err)
}

/// `(intercept, uncertainty)` of the 1/N extrapolation.
#[pyfunction]
fn extrapolate_inv_n(points: Vec<(usize, f64)>, x: f64) -> PyResult<(f64, f64)> {
    let s = Series::new(x, points).map_err(py_err)?;
    let f = extrapolation::extrapolate_inv_n(&s).map_err(py_err)?;
    Ok((f.intercept, f.uncertainties[0]))
}

/// `((A, dA), (B, dB))` of the `A ln(x/B)/x` fit.
#[pyfunction]
#[pyo3(signature = (points, x_start = 6.0, x_end = 64.0))]
fn fit_log_over_x(points: Vec<(f64, f64)>, x_start: f64, x_end: f64) -> PyResult<((f64, f64), (f64, f64))> {
    let f = extrapolation::fit_log_over_x(&points, x_start, x_end).map_err(py_err)?;
    Ok(((f.coefficients[0], f.uncertainties[0]), (f.coefficients[1], f.uncertainties[1])))
}

#[pymodule]
fn csm_bounds(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCouplingSet>()?;
    m.add_class::<PyBoundResult>()?;
    m.add_function(wrap_pyfunction!(named_set, m)?)?;
    m.add_function(wrap_pyfunction!(solve_bound, m)?)?;
    m.add_function(wrap_pyfunction!(simple_bound, m)?)?;
    m.add_function(wrap_pyfunction!(simple_bound_limit, m)?)?;
    m.add_function(wrap_pyfunction!(field_field_bound, m)?)?;
    m.add_function(wrap_pyfunction!(infinite_field_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_asymptotic_bound, m)?)?;
    m.add_function(wrap_pyfunction!(element, m)?)?;
    m.add_function(wrap_pyfunction!(ed_persisting_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(extrapolate_inv_n, m)?)?;
    m.add_function(wrap_pyfunction!(fit_log_over_x, m)?)?;
    Ok(())
}
