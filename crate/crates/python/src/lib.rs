//! Python bindings. Matrices cross the boundary as lists of rows.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use unifilter::analysis::{dirichlet_energy, monte_carlo_walk_check, oversmoothing_profile, WalkConfig};
use unifilter::approx::{fit_polynomial, fit_rational, FitResult, TargetSignal};
use unifilter::filter::make_preset_from;
use unifilter::io::{filter_spec_from_json, filter_spec_to_json};
use unifilter::spectral::{check_equivalence_with, eigendecompose, frequency_response, uniform_grid};
use unifilter::{build_graph, Error, FeatureMatrix, SolverMethod, SolverOptions, SparseOperator};

fn to_py(e: Error) -> PyErr {
    let msg = format!("{}: {}", e.code(), e);
    match e.exit_code() {
        3 => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn features(rows: Vec<Vec<f64>>) -> PyResult<FeatureMatrix> {
    FeatureMatrix::from_rows(&rows).map_err(to_py)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn solver(method: &str) -> PyResult<SolverOptions> {
    Ok(SolverOptions {
        method: SolverMethod::parse(method).map_err(to_py)?,
        ..SolverOptions::default()
    })
}

/// Undirected weighted graph.
#[pyclass(frozen)]
struct Graph {
    inner: unifilter::Graph,
}

#[pymethods]
impl Graph {
    /// `edges` holds `(u, v)` or `(u, v, w)` tuples.
    #[new]
    #[pyo3(signature = (edges, num_nodes=None))]
    fn new(edges: Vec<Vec<f64>>, num_nodes: Option<usize>) -> PyResult<Self> {
        let mut triples = Vec::with_capacity(edges.len());
        for e in edges {
            let (u, v, w) = match e.as_slice() {
                [u, v] => (*u, *v, 1.0),
                [u, v, w] => (*u, *v, *w),
                _ => return Err(PyValueError::new_err("edge must have 2 or 3 entries")),
            };
            if u < 0.0 || v < 0.0 || u.fract() != 0.0 || v.fract() != 0.0 {
                return Err(PyValueError::new_err("node ids must be non-negative integers"));
            }
            triples.push((u as usize, v as usize, w));
        }
        let inner = build_graph(triples, num_nodes).map_err(to_py)?;
        Ok(Graph { inner })
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn degrees(&self) -> Vec<f64> {
        self.inner.degree_vector()
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    /// Eigenvalues of the chosen operator, ascending.
    #[pyo3(signature = (scheme="lap_sym"))]
    fn spectrum(&self, scheme: &str) -> PyResult<Vec<f64>> {
        let s = unifilter::Scheme::parse(scheme).map_err(to_py)?;
        let dec = eigendecompose(&SparseOperator::build(&self.inner, s)).map_err(to_py)?;
        Ok(dec.eigenvalues.iter().copied().collect())
    }

    fn __repr__(&self) -> String {
        format!("Graph(num_nodes={}, num_edges={})", self.num_nodes(), self.num_edges())
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct FilterSpec {
    inner: unifilter::FilterSpec,
}

#[pymethods]
impl FilterSpec {
    #[staticmethod]
    #[pyo3(signature = (name, **params))]
    fn preset(name: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let inner = make_preset_from(name, &params.unwrap_or_default()).map_err(to_py)?;
        Ok(FilterSpec { inner })
    }

    #[staticmethod]
    fn linear(phi: f64, psi: f64, scheme: &str) -> PyResult<Self> {
        let s = unifilter::Scheme::parse(scheme).map_err(to_py)?;
        Ok(FilterSpec {
            inner: unifilter::FilterSpec::linear(phi, psi, s),
        })
    }

    #[staticmethod]
    fn polynomial(coeffs: Vec<f64>, scheme: &str) -> PyResult<Self> {
        let s = unifilter::Scheme::parse(scheme).map_err(to_py)?;
        let inner = unifilter::FilterSpec::polynomial(coeffs, s).map_err(to_py)?;
        Ok(FilterSpec { inner })
    }

    #[staticmethod]
    fn rational(num: Vec<f64>, den: Vec<f64>, scheme: &str) -> PyResult<Self> {
        let s = unifilter::Scheme::parse(scheme).map_err(to_py)?;
        let inner = unifilter::FilterSpec::rational(num, den, s).map_err(to_py)?;
        Ok(FilterSpec { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(FilterSpec {
            inner: filter_spec_from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        filter_spec_to_json(&self.inner)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family.name()
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        self.inner.scheme.name()
    }

    #[getter]
    fn numerator(&self) -> Vec<f64> {
        self.inner.numerator()
    }

    #[getter]
    fn denominator(&self) -> Vec<f64> {
        self.inner.denominator()
    }

    /// g(λ) on the Laplacian axis.
    fn response(&self, lam: f64) -> f64 {
        self.inner.response(lam)
    }

    #[pyo3(signature = (graph, x, method="auto"))]
    fn apply(&self, graph: &Graph, x: Vec<Vec<f64>>, method: &str) -> PyResult<Vec<Vec<f64>>> {
        let z = self
            .inner
            .apply(&graph.inner, &features(x)?, &solver(method)?)
            .map_err(to_py)?;
        Ok(rows(z.as_matrix()))
    }

    fn __repr__(&self) -> String {
        format!("FilterSpec(family={}, scheme={})", self.family(), self.scheme())
    }
}

#[pyclass(frozen, get_all)]
struct Fit {
    filter: FilterSpec,
    max_error: f64,
    rms_error: f64,
    iterations: usize,
}

impl From<FitResult> for Fit {
    fn from(r: FitResult) -> Fit {
        Fit {
            filter: FilterSpec { inner: r.filter },
            max_error: r.max_error,
            rms_error: r.rms_error,
            iterations: r.iterations_used,
        }
    }
}

/// Frequency response sampled on `points` uniform values of [0, 2].
#[pyfunction]
#[pyo3(signature = (spec, points=256))]
fn response_curve(spec: &FilterSpec, points: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let c = frequency_response(&spec.inner, &uniform_grid(0.0, 2.0, points)).map_err(to_py)?;
    Ok((c.grid, c.values))
}

/// Spatial vs spectral agreement; returns `(max_rel_error, pass)`.
#[pyfunction]
#[pyo3(signature = (spec, graph, x, tol=1e-8, method="auto"))]
fn check_equivalence(
    spec: &FilterSpec,
    graph: &Graph,
    x: Vec<Vec<f64>>,
    tol: f64,
    method: &str,
) -> PyResult<(f64, bool)> {
    let r = check_equivalence_with(&spec.inner, &graph.inner, &features(x)?, tol, &solver(method)?)
        .map_err(to_py)?;
    Ok((r.max_rel_error, r.pass))
}

fn target(threshold: Option<f64>) -> PyResult<TargetSignal> {
    match threshold {
        None => Ok(TargetSignal::jump()),
        Some(t) => TargetSignal::step(t, 0.0, 1.0, (0.0, 2.0)).map_err(to_py),
    }
}

/// Least-squares polynomial fit to a low-pass step on [0, 2].
#[pyfunction]
#[pyo3(signature = (degree, threshold=None, grid=512))]
fn fit_step_polynomial(degree: usize, threshold: Option<f64>, grid: usize) -> PyResult<Fit> {
    Ok(fit_polynomial(&target(threshold)?, degree, grid).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (num_degree, den_degree, threshold=None, grid=512))]
fn fit_step_rational(num_degree: usize, den_degree: usize, threshold: Option<f64>, grid: usize) -> PyResult<Fit> {
    Ok(fit_rational(&target(threshold)?, num_degree, den_degree, grid)
        .map_err(to_py)?
        .into())
}

#[pyfunction]
fn energy(graph: &Graph, x: Vec<Vec<f64>>) -> PyResult<f64> {
    dirichlet_energy(&graph.inner, &features(x)?).map_err(to_py)
}

/// Per-depth `(energy, raw_energy, pairwise_spread)` under repeated propagation.
#[pyfunction]
fn oversmoothing(
    graph: &Graph,
    x: Vec<Vec<f64>>,
    spec: &FilterSpec,
    depths: Vec<usize>,
) -> PyResult<Vec<(usize, f64, f64, f64)>> {
    let p = oversmoothing_profile(&graph.inner, &features(x)?, &spec.inner, &depths).map_err(to_py)?;
    Ok((0..p.depths.len())
        .map(|i| (p.depths[i], p.energy[i], p.raw_energy[i], p.pairwise_spread[i]))
        .collect())
}

/// Largest deviation between sampled walk co-occurrences and the closed form.
#[pyfunction]
#[pyo3(signature = (graph, window, num_walks=50_000, seed=0))]
fn walk_check(graph: &Graph, window: usize, num_walks: usize, seed: u64) -> PyResult<f64> {
    let r = monte_carlo_walk_check(&graph.inner, &WalkConfig::new(window, num_walks, seed)).map_err(to_py)?;
    Ok(r.max_abs_dev)
}

#[pymodule]
fn unifilter_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<FilterSpec>()?;
    m.add_class::<Fit>()?;
    m.add_function(wrap_pyfunction!(response_curve, m)?)?;
    m.add_function(wrap_pyfunction!(check_equivalence, m)?)?;
    m.add_function(wrap_pyfunction!(fit_step_polynomial, m)?)?;
    m.add_function(wrap_pyfunction!(fit_step_rational, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(oversmoothing, m)?)?;
    m.add_function(wrap_pyfunction!(walk_check, m)?)?;
    Ok(())
}
