//! Python bindings: term tables, coefficient vectors with exact and Taylor
//! probabilities, the decoders, and the experiment commands as dict-returning calls.

use std::sync::Arc;

use geolocal::geometry::{sample_coeffs, sampler_stats};
use geolocal::hamiltonian::{
    exact_spectral_norm, hiding_identity_residual, output_probability, spectral_norm_bound, taylor_error_bound,
    taylor_probability, worst_case_coeffs, CoeffVector, EvolutionSpec, WorstCaseSpec,
};
use geolocal::interp::{classic_berlekamp_welch, remez_extrapolation_bound, robust_berlekamp_welch};
use geolocal::lattice::{BitString, Lattice};
use geolocal::rng::SeedSource;
use geolocal_cli::commands::{self, ReduceConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn mask(s: Option<&str>, n: usize) -> PyResult<BitString> {
    match s {
        Some(s) => BitString::parse(s).map_err(value_err),
        None => Ok(BitString::zeros(n)),
    }
}

#[pyclass(frozen, name = "TermTable")]
pub struct PyTermTable {
    inner: Arc<geolocal::lattice::TermTable>,
}

#[pymethods]
impl PyTermTable {
    /// `spec` is `RxC`, with a trailing `p` for periodic boundaries.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let lattice = Lattice::parse(spec).map_err(value_err)?;
        Ok(Self { inner: Arc::new(geolocal::lattice::TermTable::build(lattice)) })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    #[getter]
    fn lattice(&self) -> String {
        self.inner.lattice().to_string()
    }

    /// Labels such as `X0Z1`, in coefficient order.
    fn terms(&self) -> Vec<String> {
        self.inner.terms().iter().map(|t| t.to_string()).collect()
    }

    /// Coefficients drawn from the Gaussian ensemble.
    fn sample(&self, seed: u64) -> PyCoeffs {
        let g = sample_coeffs(&self.inner, &mut SeedSource::new(seed).stream("python", "sample", 0));
        PyCoeffs { inner: g }
    }

    fn coeffs(&self, values: Vec<f64>) -> PyResult<PyCoeffs> {
        Ok(PyCoeffs { inner: CoeffVector::new(self.inner.clone(), values).map_err(value_err)? })
    }

    /// Ising instance with unit couplings and fields, extra field on `subset`.
    #[pyo3(signature = (subset=None, tau=1.0))]
    fn worst_case(&self, subset: Option<&str>, tau: f64) -> PyResult<PyCoeffs> {
        let n = self.inner.num_qubits();
        let s = match subset {
            Some(_) => mask(subset, n)?,
            None => BitString::from_bits((0..n).map(|i| i == 0).collect()),
        };
        let spec = WorstCaseSpec::uniform(&self.inner, s, tau);
        Ok(PyCoeffs { inner: worst_case_coeffs(&spec, self.inner.clone()).map_err(value_err)? })
    }

    fn __repr__(&self) -> String {
        format!("TermTable('{}', l={})", self.inner.lattice(), self.inner.len())
    }
}

#[pyclass(frozen, name = "Coeffs")]
pub struct PyCoeffs {
    inner: CoeffVector,
}

impl PyCoeffs {
    fn spec(&self, tau: f64, input: Option<&str>) -> PyResult<EvolutionSpec> {
        let m = mask(input, self.inner.table().num_qubits())?;
        EvolutionSpec::new(self.inner.clone(), tau, m).map_err(value_err)
    }
}

#[pymethods]
impl PyCoeffs {
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn norm(&self) -> f64 {
        self.inner.norm2()
    }

    fn scaled(&self, factor: f64) -> Self {
        Self { inner: self.inner.scaled(factor) }
    }

    /// Coefficients after conjugation by `Z^mask`.
    fn conjugated(&self, mask_bits: &str) -> PyResult<Self> {
        let m = BitString::parse(mask_bits).map_err(value_err)?;
        Ok(Self { inner: self.inner.conjugated(&m).map_err(value_err)? })
    }

    fn spectral_norm(&self) -> PyResult<f64> {
        exact_spectral_norm(&self.inner).map_err(value_err)
    }

    fn spectral_norm_bound(&self) -> f64 {
        spectral_norm_bound(&self.inner)
    }

    /// `|<+| exp(-i H tau) Z^input |+>|^2`.
    #[pyo3(signature = (tau=1.0, input=None))]
    fn output_probability(&self, tau: f64, input: Option<&str>) -> PyResult<f64> {
        output_probability(&self.spec(tau, input)?).map_err(value_err)
    }

    /// Same with the exponential truncated at order `m`.
    #[pyo3(signature = (m, tau=1.0, input=None))]
    fn taylor_probability(&self, m: usize, tau: f64, input: Option<&str>) -> PyResult<f64> {
        taylor_probability(&self.spec(tau, input)?, m).map_err(value_err)
    }

    #[pyo3(signature = (x, y, tau=1.0))]
    fn hiding_residual(&self, x: &str, y: &str, tau: f64) -> PyResult<f64> {
        let x = BitString::parse(x).map_err(value_err)?;
        let y = BitString::parse(y).map_err(value_err)?;
        hiding_identity_residual(&self.inner, &x, &y, tau).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Coeffs(l={}, norm={:.6})", self.inner.len(), self.inner.norm2())
    }
}

#[pyfunction]
#[pyo3(name = "taylor_error_bound")]
fn py_taylor_error_bound(h_norm: f64, tau: f64, m: usize) -> PyResult<f64> {
    taylor_error_bound(h_norm, tau, m).map_err(value_err)
}

#[pyfunction]
#[pyo3(name = "remez_extrapolation_bound")]
fn py_remez_extrapolation_bound(delta: f64, d: usize, reach: f64) -> PyResult<f64> {
    remez_extrapolation_bound(delta, d, reach).map_err(value_err)
}

/// Monomial coefficients of the exact decoder's output.
#[pyfunction]
#[pyo3(name = "classic_berlekamp_welch")]
fn py_classic_berlekamp_welch(points: Vec<(f64, f64)>, k: usize, degree: usize) -> PyResult<Vec<f64>> {
    Ok(classic_berlekamp_welch(&points, k, degree).map_err(value_err)?.coeffs().to_vec())
}

/// Dict with `coeffs` (monomial), `guarantee`, `trusted`, `lp1_residual`, `lp2_residual`.
#[pyfunction]
#[pyo3(name = "robust_berlekamp_welch")]
fn py_robust_berlekamp_welch<'py>(
    py: Python<'py>,
    points: Vec<(f64, f64)>,
    k: usize,
    delta: f64,
    eps: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let q = robust_berlekamp_welch(&points, k, delta, eps).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("coeffs", q.polynomial().coeffs().to_vec())?;
    d.set_item("guarantee", q.guarantee())?;
    d.set_item("trusted", q.trusted.clone())?;
    d.set_item("lp1_residual", q.lp1_residual)?;
    d.set_item("lp2_residual", q.lp2_residual)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(name = "sampler_stats", signature = (l, samples, seed=0))]
fn py_sampler_stats<'py>(py: Python<'py>, l: usize, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let s = sampler_stats(l, samples, &mut SeedSource::new(seed).stream("python", "stats", 0)).map_err(value_err)?;
    to_py(py, &serde_json::to_value(s).map_err(value_err)?)
}

/// Runs the reduction; returns `(outcome, report)`.
#[pyfunction]
#[pyo3(
    name = "reduce",
    signature = (lattice="1x2", seed=0, m=16, epsilon=0.0, corrupt=0.0, no_extrapolation=false, truth=true)
)]
#[allow(clippy::too_many_arguments)]
fn py_reduce<'py>(
    py: Python<'py>,
    lattice: &str,
    seed: u64,
    m: usize,
    epsilon: f64,
    corrupt: f64,
    no_extrapolation: bool,
    truth: bool,
) -> PyResult<(String, Bound<'py, PyAny>)> {
    let cfg = ReduceConfig {
        lattice: lattice.to_owned(),
        seed,
        m,
        epsilon,
        corrupt,
        no_extrapolation,
        truth,
        ..ReduceConfig::default()
    };
    let run = py.detach(|| commands::reduce(&cfg, None)).map_err(value_err)?;
    let outcome = serde_json::to_value(run.outcome).map_err(value_err)?;
    Ok((outcome.as_str().unwrap_or_default().to_owned(), to_py(py, &run.result)?))
}

#[pymodule]
pub fn geolocal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTermTable>()?;
    m.add_class::<PyCoeffs>()?;
    m.add_function(wrap_pyfunction!(py_taylor_error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(py_remez_extrapolation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(py_classic_berlekamp_welch, m)?)?;
    m.add_function(wrap_pyfunction!(py_robust_berlekamp_welch, m)?)?;
    m.add_function(wrap_pyfunction!(py_sampler_stats, m)?)?;
    m.add_function(wrap_pyfunction!(py_reduce, m)?)?;
    Ok(())
}
