//! Python bindings: the max-linear model, TPDM estimation, the
//! completely positive decomposition searches, and failure-region
//! probabilities, over plain lists of floats.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use nalgebra::DMatrix;
use taildep::decomp::{self, DecompConfig};
use taildep::error::Error;
use taildep::margins;
use taildep::maxlin;
use taildep::regions;
use taildep::synthetic;
use taildep::tpdm;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Argument(_) | Error::Parse(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix_from_rows(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("matrix must have at least one row"));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("matrix rows must be non-empty and equal length"));
    }
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &rows.concat()))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Extreme region description, shared by the analytic, Monte Carlo and
/// empirical probability estimators.
#[pyclass(name = "FailureRegion", skip_from_py_object)]
#[derive(Clone)]
struct PyFailureRegion {
    inner: regions::FailureRegion,
}

#[pymethods]
impl PyFailureRegion {
    /// Some component exceeds its threshold.
    #[staticmethod]
    fn max_region(thresholds: Vec<f64>) -> Self {
        PyFailureRegion { inner: regions::FailureRegion::Max { thresholds } }
    }

    /// Every component exceeds its threshold.
    #[staticmethod]
    fn min_region(thresholds: Vec<f64>) -> Self {
        PyFailureRegion { inner: regions::FailureRegion::Min { thresholds } }
    }

    /// Weighted sum exceeds x; weights must sum to 1.
    #[staticmethod]
    fn sum_region(weights: Vec<f64>, threshold: f64) -> Self {
        PyFailureRegion { inner: regions::FailureRegion::Sum { weights, threshold } }
    }

    #[staticmethod]
    fn min_of_sums(weights: Vec<f64>, groups: Vec<Vec<usize>>, threshold: f64) -> Self {
        PyFailureRegion {
            inner: regions::FailureRegion::MinOfSums { weights, groups, threshold },
        }
    }

    #[staticmethod]
    fn max_of_sums(weights: Vec<f64>, groups: Vec<Vec<usize>>, threshold: f64) -> Self {
        PyFailureRegion {
            inner: regions::FailureRegion::MaxOfSums { weights, groups, threshold },
        }
    }

    fn contains(&self, y: Vec<f64>) -> bool {
        self.inner.contains(&y)
    }

    fn scaled(&self, t: f64) -> Self {
        PyFailureRegion { inner: self.inner.scaled(t) }
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// One completely positive factorization of a TPDM.
#[pyclass(name = "Decomposition", skip_from_py_object)]
#[derive(Clone)]
struct PyDecomposition {
    inner: decomp::DecompositionResult,
}

#[pymethods]
impl PyDecomposition {
    #[getter]
    fn path(&self) -> Vec<usize> {
        self.inner.path.clone()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn a_star(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.inner.a_star)
    }

    #[getter]
    fn a(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.inner.a)
    }

    #[getter]
    fn d_values(&self) -> Vec<f64> {
        self.inner.d_values.clone()
    }

    #[getter]
    fn frobenius_gap(&self) -> f64 {
        self.inner.frobenius_gap
    }

    #[getter]
    fn exact(&self) -> bool {
        self.inner.exact
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.inner.degenerate
    }

    #[getter]
    fn unpeelable(&self) -> bool {
        self.inner.unpeelable
    }

    /// Max-linear model from this factorization, zero columns pruned.
    fn to_model(&self) -> PyResult<PyMaxLinearModel> {
        Ok(PyMaxLinearModel { inner: self.inner.to_model(None).map_err(to_py_err)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "Decomposition(path={:?}, gap={:.3e}, exact={})",
            self.inner.path, self.inner.frobenius_gap, self.inner.exact
        )
    }
}

/// Max-linear model Y_j = max_l a_jl Z_l with iid Fréchet(1, alpha)
/// factors.
#[pyclass(name = "MaxLinearModel", skip_from_py_object)]
#[derive(Clone)]
struct PyMaxLinearModel {
    inner: maxlin::MaxLinearModel,
}

#[pymethods]
impl PyMaxLinearModel {
    #[new]
    fn new(coefficients: Vec<Vec<f64>>, alpha: f64) -> PyResult<Self> {
        let a = matrix_from_rows(coefficients)?;
        Ok(PyMaxLinearModel { inner: maxlin::MaxLinearModel::new(a, alpha).map_err(to_py_err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_factors(&self) -> usize {
        self.inner.n_factors()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn coefficients(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.coefficients())
    }

    /// Exact TPDM A_* A_*^T with A_* = A^(alpha/2).
    fn tpdm(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.tpdm().sigma())
    }

    /// (mass, atom) pairs of the angular measure.
    fn angular_atoms(&self) -> Vec<(f64, Vec<f64>)> {
        self.inner
            .angular_atoms()
            .into_iter()
            .map(|a| (a.mass, a.atom.iter().copied().collect()))
            .collect()
    }

    fn marginal_scales(&self) -> Vec<f64> {
        self.inner.marginal_scales()
    }

    /// n seeded rows; identical for any worker layout.
    fn simulate(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.inner.simulate(n, seed))
    }

    fn nu_max(&self, thresholds: Vec<f64>) -> PyResult<f64> {
        regions::nu_max(&self.inner, &thresholds).map_err(to_py_err)
    }

    fn nu_min(&self, thresholds: Vec<f64>) -> PyResult<f64> {
        regions::nu_min(&self.inner, &thresholds).map_err(to_py_err)
    }

    fn nu_sum(&self, weights: Vec<f64>, threshold: f64) -> PyResult<f64> {
        regions::nu_sum(&self.inner, &weights, threshold).map_err(to_py_err)
    }

    fn nu_min_of_sums(
        &self,
        weights: Vec<f64>,
        groups: Vec<Vec<usize>>,
        threshold: f64,
    ) -> PyResult<f64> {
        regions::nu_min_of_sums(&self.inner, &weights, &groups, threshold).map_err(to_py_err)
    }

    fn nu_max_of_sums(
        &self,
        weights: Vec<f64>,
        groups: Vec<Vec<usize>>,
        threshold: f64,
    ) -> PyResult<f64> {
        regions::nu_max_of_sums(&self.inner, &weights, &groups, threshold).map_err(to_py_err)
    }

    /// Exponent measure of {f(y) > x} for a 1-homogeneous-like callable f,
    /// by bracketed bisection along each atom ray.
    fn nu_generic(&self, py: Python<'_>, f: Py<PyAny>, x: f64) -> PyResult<f64> {
        let err: std::cell::RefCell<Option<PyErr>> = std::cell::RefCell::new(None);
        let wrapped = |y: &[f64]| -> f64 {
            let list = PyList::new(py, y).expect("list");
            match f.bind(py).call1((list,)) {
                Ok(v) => v.extract::<f64>().unwrap_or_else(|e| {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }),
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let out = regions::nu_generic(&self.inner, &wrapped, x);
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        out.map_err(to_py_err)
    }

    fn nu_region(&self, region: &PyFailureRegion) -> PyResult<f64> {
        regions::nu_region(&self.inner, &region.inner).map_err(to_py_err)
    }

    /// Threshold x with nu = target for the scalar-threshold families:
    /// kind in {"max", "min", "sum", "min_of_sums", "max_of_sums"}.
    #[pyo3(signature = (kind, target, weights=None, groups=None))]
    fn calibrate_threshold(
        &self,
        kind: &str,
        target: f64,
        weights: Option<Vec<f64>>,
        groups: Option<Vec<Vec<usize>>>,
    ) -> PyResult<f64> {
        let family = match kind {
            "max" => regions::RegionFamily::MaxEqual,
            "min" => regions::RegionFamily::MinEqual,
            "sum" => regions::RegionFamily::Sum {
                weights: weights.ok_or_else(|| PyValueError::new_err("sum needs weights"))?,
            },
            "min_of_sums" => regions::RegionFamily::MinOfSums {
                weights: weights.ok_or_else(|| PyValueError::new_err("needs weights"))?,
                groups: groups.ok_or_else(|| PyValueError::new_err("needs groups"))?,
            },
            "max_of_sums" => regions::RegionFamily::MaxOfSums {
                weights: weights.ok_or_else(|| PyValueError::new_err("needs weights"))?,
                groups: groups.ok_or_else(|| PyValueError::new_err("needs groups"))?,
            },
            other => return Err(PyValueError::new_err(format!("unknown family {other:?}"))),
        };
        regions::calibrate_threshold(&self.inner, &family, target).map_err(to_py_err)
    }

    /// nu-based probability with caveat flags, as a dict.
    fn failure_probability<'py>(
        &self,
        py: Python<'py>,
        region: &PyFailureRegion,
    ) -> PyResult<Bound<'py, PyDict>> {
        let p = regions::failure_probability(&self.inner, &region.inner).map_err(to_py_err)?;
        let d = PyDict::new(py);
        d.set_item("nu", p.nu)?;
        d.set_item("probability", p.probability)?;
        d.set_item("extreme_warning", p.extreme_warning)?;
        d.set_item("clamped", p.clamped)?;
        Ok(d)
    }

    /// Seeded Monte Carlo probability and its binomial standard error.
    fn mc_failure_probability(
        &self,
        region: &PyFailureRegion,
        n: usize,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        regions::mc_failure_probability(&self.inner, &region.inner, n, seed).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "MaxLinearModel(d={}, q={}, alpha={})",
            self.inner.dim(),
            self.inner.n_factors(),
            self.inner.alpha()
        )
    }
}

/// Hill estimator of the extreme-value index from the top k order
/// statistics. Returns a dict with gamma_hat, alpha_hat (None when the
/// tail index is infinite), k_used and the diagnostic path.
#[pyfunction]
fn hill_estimate<'py>(py: Python<'py>, sample: Vec<f64>, k: usize) -> PyResult<Bound<'py, PyDict>> {
    tail_index_dict(py, margins::hill_estimate(&sample, k).map_err(to_py_err)?)
}

/// Hill averaged over the window k..floor(u k).
#[pyfunction]
fn smoothed_hill<'py>(
    py: Python<'py>,
    sample: Vec<f64>,
    k: usize,
    smoothing: f64,
) -> PyResult<Bound<'py, PyDict>> {
    tail_index_dict(py, margins::smoothed_hill(&sample, k, smoothing).map_err(to_py_err)?)
}

fn tail_index_dict(py: Python<'_>, est: margins::TailIndexEstimate) -> PyResult<Bound<'_, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("gamma_hat", est.gamma_hat)?;
    d.set_item(
        "alpha_hat",
        if est.alpha_hat.is_finite() { Some(est.alpha_hat) } else { None },
    )?;
    d.set_item("k_used", est.k_used)?;
    d.set_item("path", est.path)?;
    Ok(d)
}

/// Maximum-likelihood GPD fit of threshold excesses.
#[pyfunction]
fn fit_gpd<'py>(py: Python<'py>, excesses: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let fit = margins::fit_gpd(&excesses).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("sigma_hat", fit.sigma_hat)?;
    d.set_item("gamma_hat", fit.gamma_hat)?;
    d.set_item("n_exceed", fit.n_exceed)?;
    d.set_item("log_likelihood", fit.log_likelihood)?;
    d.set_item("degenerate", fit.degenerate)?;
    Ok(d)
}

/// Standardize every column to unit-scale Fréchet with shape 2 through the
/// semi-parametric margin (empirical below the threshold quantile, GPD
/// tail above when use_gpd is set).
#[pyfunction]
#[pyo3(signature = (data, threshold_level=0.95, use_gpd=true))]
fn standardize_frechet(
    data: Vec<Vec<f64>>,
    threshold_level: f64,
    use_gpd: bool,
) -> PyResult<Vec<Vec<f64>>> {
    let m = matrix_from_rows(data)?;
    let (out, _, _) =
        margins::standardize_pipeline(&m, threshold_level, use_gpd).map_err(to_py_err)?;
    Ok(matrix_to_rows(&out))
}

/// TPDM estimate from nonnegative data rows: polar decomposition under the
/// L_alpha norm, radial threshold at the quantile level, exceedance sum.
/// Returns {sigma, alpha, r0, m_hat, n_exc, psd_warning}.
#[pyfunction]
#[pyo3(signature = (data, alpha, quantile_level=0.95))]
fn estimate_tpdm<'py>(
    py: Python<'py>,
    data: Vec<Vec<f64>>,
    alpha: f64,
    quantile_level: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = matrix_from_rows(data)?;
    let polar = tpdm::polar_transform(&m, alpha).map_err(to_py_err)?;
    let mass = tpdm::estimate_mass(&polar, quantile_level).map_err(to_py_err)?;
    let est = tpdm::estimate_tpdm(&polar, &mass).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("sigma", matrix_to_rows(est.matrix.sigma()))?;
    d.set_item("alpha", alpha)?;
    d.set_item("r0", mass.r0)?;
    d.set_item("m_hat", mass.m_hat)?;
    d.set_item("n_exc", mass.n_exc)?;
    d.set_item("psd_warning", est.psd_warning)?;
    Ok(d)
}

/// Benchmark factor A~ with A~ A~^T equal to the TPDM estimate.
#[pyfunction]
#[pyo3(signature = (data, alpha, quantile_level=0.95))]
fn empirical_factor(
    data: Vec<Vec<f64>>,
    alpha: f64,
    quantile_level: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let m = matrix_from_rows(data)?;
    let polar = tpdm::polar_transform(&m, alpha).map_err(to_py_err)?;
    let mass = tpdm::estimate_mass(&polar, quantile_level).map_err(to_py_err)?;
    Ok(matrix_to_rows(&tpdm::empirical_factor(&polar, &mass).map_err(to_py_err)?))
}

/// Symmetry, nonnegativity and PSD diagnostics of a candidate TPDM.
#[pyfunction]
fn validate_tpdm<'py>(py: Python<'py>, sigma: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let m = matrix_from_rows(sigma)?;
    if m.nrows() != m.ncols() {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let v = tpdm::validate_tpdm(&m);
    let d = PyDict::new(py);
    d.set_item("symmetry_defect", v.symmetry_defect)?;
    d.set_item("most_negative_entry", v.most_negative_entry)?;
    d.set_item("min_eigenvalue", v.min_eigenvalue)?;
    d.set_item("trace", v.trace)?;
    d.set_item("valid", v.is_valid())?;
    Ok(d)
}

fn tail_matrix(sigma: Vec<Vec<f64>>, alpha: f64) -> PyResult<tpdm::TailMatrix> {
    let m = matrix_from_rows(sigma)?;
    tpdm::TailMatrix::new(m, alpha).map_err(to_py_err)
}

/// Deflation along a fixed path (0-based permutation).
#[pyfunction]
fn decompose_along_path(
    sigma: Vec<Vec<f64>>,
    alpha: f64,
    path: Vec<usize>,
) -> PyResult<PyDecomposition> {
    let tail = tail_matrix(sigma, alpha)?;
    let r = decomp::decompose_along_path(&tail, &path, &DecompConfig::default())
        .map_err(to_py_err)?;
    Ok(PyDecomposition { inner: r })
}

/// Greedy lowest-D search; always completes, possibly inexact.
#[pyfunction]
fn search_simple(sigma: Vec<Vec<f64>>, alpha: f64) -> PyResult<PyDecomposition> {
    let tail = tail_matrix(sigma, alpha)?;
    let r = decomp::search_simple(&tail, &DecompConfig::default()).map_err(to_py_err)?;
    Ok(PyDecomposition { inner: r })
}

/// All exact factorizations from the depth-first candidate tree.
#[pyfunction]
#[pyo3(signature = (sigma, alpha, max_results=usize::MAX))]
fn search_exhaustive(
    sigma: Vec<Vec<f64>>,
    alpha: f64,
    max_results: usize,
) -> PyResult<Vec<PyDecomposition>> {
    let tail = tail_matrix(sigma, alpha)?;
    let rs = decomp::search_exhaustive(&tail, max_results, &DecompConfig::default())
        .map_err(to_py_err)?;
    Ok(rs.into_iter().map(|inner| PyDecomposition { inner }).collect())
}

/// Restarted random search; None when no exact factorization was found
/// within the restart budget.
#[pyfunction]
#[pyo3(signature = (sigma, alpha, seed=0, max_restarts=1000))]
fn search_pragmatic(
    sigma: Vec<Vec<f64>>,
    alpha: f64,
    seed: u64,
    max_restarts: usize,
) -> PyResult<Option<PyDecomposition>> {
    let tail = tail_matrix(sigma, alpha)?;
    match decomp::search_pragmatic(&tail, seed, max_restarts, &DecompConfig::default())
        .map_err(to_py_err)?
    {
        decomp::SearchOutcome::Found(r) => Ok(Some(PyDecomposition { inner: *r })),
        decomp::SearchOutcome::NotFound { .. } => Ok(None),
    }
}

/// Up to n distinct-by-path exact factorizations via restarted walks.
#[pyfunction]
#[pyo3(signature = (sigma, alpha, n=200, seed=0, max_restarts=20000))]
fn collect_exact_decompositions(
    sigma: Vec<Vec<f64>>,
    alpha: f64,
    n: usize,
    seed: u64,
    max_restarts: usize,
) -> PyResult<Vec<PyDecomposition>> {
    let tail = tail_matrix(sigma, alpha)?;
    let rs = decomp::collect_exact_decompositions(&tail, n, seed, max_restarts, &DecompConfig::default())
        .map_err(to_py_err)?;
    Ok(rs.into_iter().map(|inner| PyDecomposition { inner }).collect())
}

/// Census over all d! paths (d <= 8): {usable, exact, within_gap,
/// boundary, results}.
#[pyfunction]
#[pyo3(signature = (sigma, alpha, gap_threshold=5.0))]
fn enumerate_all_paths<'py>(
    py: Python<'py>,
    sigma: Vec<Vec<f64>>,
    alpha: f64,
    gap_threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let tail = tail_matrix(sigma, alpha)?;
    let census = decomp::enumerate_all_paths(&tail, gap_threshold, &DecompConfig::default())
        .map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("usable", census.usable)?;
    d.set_item("exact", census.exact)?;
    d.set_item("within_gap", census.within_gap)?;
    d.set_item("boundary", census.boundary)?;
    d.set_item("gap_threshold", census.gap_threshold)?;
    let results: Vec<PyDecomposition> = census
        .results
        .into_iter()
        .map(|inner| PyDecomposition { inner })
        .collect();
    d.set_item("results", results.into_pyobject(py)?)?;
    Ok(d)
}

/// Drop columns whose largest entry is at most tol (default
/// 1e-10 * max entry).
#[pyfunction]
#[pyo3(signature = (a_star, tol=None))]
fn prune_zero_columns(a_star: Vec<Vec<f64>>, tol: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
    let m = matrix_from_rows(a_star)?;
    Ok(matrix_to_rows(&decomp::prune_zero_columns(&m, tol)))
}

/// Exceedance fraction of data rows over a region.
#[pyfunction]
fn empirical_failure_probability(
    data: Vec<Vec<f64>>,
    region: &PyFailureRegion,
) -> PyResult<f64> {
    let m = matrix_from_rows(data)?;
    regions::empirical_failure_probability(&m, &region.inner).map_err(to_py_err)
}

/// Full synthetic benchmark (path censuses and region-measure spreads of
/// the bundled matrices) as a JSON string.
#[pyfunction]
fn reproduce_synthetic_json() -> PyResult<String> {
    let report = synthetic::reproduce_synthetic(&DecompConfig::default()).map_err(to_py_err)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Bundled benchmark coefficient matrices.
#[pyfunction]
fn benchmark_matrices<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("A1", matrix_to_rows(&taildep::fixtures::a1()))?;
    d.set_item("A2", matrix_to_rows(&taildep::fixtures::a2()))?;
    d.set_item("A3", matrix_to_rows(&taildep::fixtures::a3()))?;
    Ok(d)
}

#[pymodule]
fn taildep_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMaxLinearModel>()?;
    m.add_class::<PyFailureRegion>()?;
    m.add_class::<PyDecomposition>()?;
    m.add_function(wrap_pyfunction!(hill_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(smoothed_hill, m)?)?;
    m.add_function(wrap_pyfunction!(fit_gpd, m)?)?;
    m.add_function(wrap_pyfunction!(standardize_frechet, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_tpdm, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_factor, m)?)?;
    m.add_function(wrap_pyfunction!(validate_tpdm, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_along_path, m)?)?;
    m.add_function(wrap_pyfunction!(search_simple, m)?)?;
    m.add_function(wrap_pyfunction!(search_exhaustive, m)?)?;
    m.add_function(wrap_pyfunction!(search_pragmatic, m)?)?;
    m.add_function(wrap_pyfunction!(collect_exact_decompositions, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_all_paths, m)?)?;
    m.add_function(wrap_pyfunction!(prune_zero_columns, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_failure_probability, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_synthetic_json, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark_matrices, m)?)?;
    Ok(())
}
