use std::collections::BTreeMap;
use std::path::PathBuf;

use copulasmote::eval::MetricReport;
use copulasmote::pair_copula::{self as pc, CopulaFamily, PairCopulaSpec, Rotation};
use copulasmote::resampling::{self as rs, Method, ResampleConfig, DEFAULT_JITTER_SD, DEFAULT_K_NEIGHBORS};
use copulasmote::runner::{self, DatasetSpec, ExperimentConfig, MetricMode};
use copulasmote::stats_test::{dietterich_5x2 as dietterich, DiffTable};
use copulasmote::vine;
use copulasmote::{Error, Matrix};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    Matrix::from_rows(rows).map_err(err)
}

/// A bivariate copula: family, rotation (degrees) and parameters.
#[pyclass(name = "PairCopula", module = "copulasmote", frozen, from_py_object)]
#[derive(Clone)]
struct PyPairCopula {
    inner: PairCopulaSpec,
}

#[pymethods]
impl PyPairCopula {
    #[new]
    #[pyo3(signature = (family, params = Vec::new(), rotation = 0))]
    fn new(family: &str, params: Vec<f64>, rotation: u16) -> PyResult<Self> {
        let family = CopulaFamily::parse(family).map_err(err)?;
        let rotation = Rotation::from_degrees(rotation).map_err(err)?;
        Ok(Self { inner: PairCopulaSpec::new(family, rotation, params).map_err(err)? })
    }

    /// BIC selection over the default family library.
    #[staticmethod]
    fn fit(u: Vec<f64>, v: Vec<f64>) -> PyResult<Self> {
        let fit = pc::fit_pair_copula(&u, &v, &pc::default_library()).map_err(err)?;
        Ok(Self { inner: fit.spec })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let inner: PairCopulaSpec = serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family.name()
    }

    #[getter]
    fn rotation(&self) -> u16 {
        self.inner.rotation.degrees()
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.params.clone()
    }

    fn kendall_tau(&self) -> f64 {
        self.inner.kendall_tau()
    }

    fn cdf(&self, u: f64, v: f64) -> PyResult<f64> {
        pc::copula_cdf(&self.inner, u, v).map_err(err)
    }

    fn log_density(&self, u: f64, v: f64) -> PyResult<f64> {
        pc::copula_log_density(&self.inner, u, v).map_err(err)
    }

    /// P(U <= u | V = v).
    fn h(&self, u: f64, v: f64) -> PyResult<f64> {
        pc::h_function(&self.inner, u, v).map_err(err)
    }

    fn inverse_h(&self, p: f64, v: f64) -> PyResult<f64> {
        pc::inverse_h_function(&self.inner, p, v).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("PairCopula({:?}, params={:?}, rotation={})", self.family(), self.inner.params, self.rotation())
    }
}

type EdgeTuple = (usize, (usize, usize), Vec<usize>, PyPairCopula);

/// A fitted truncated regular vine copula.
#[pyclass(name = "VineModel", module = "copulasmote", frozen, from_py_object)]
#[derive(Clone)]
struct PyVineModel {
    inner: vine::VineModel,
}

#[pymethods]
impl PyVineModel {
    /// Fits structure and pair copulas on pseudo-observations in (0, 1).
    #[staticmethod]
    #[pyo3(signature = (u, truncation = None))]
    fn fit(u: Vec<Vec<f64>>, truncation: Option<usize>) -> PyResult<Self> {
        let u = matrix(&u)?;
        let level = truncation.unwrap_or_else(|| vine::default_truncation(u.ncols()));
        Ok(Self { inner: vine::fit_truncated_vine(&u, level, &pc::default_library()).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self { inner: vine::VineModel::from_json(s).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn truncation_level(&self) -> usize {
        self.inner.truncation_level
    }

    /// `(tree, (j, k), conditioning, PairCopula)` for every edge.
    fn edges(&self) -> Vec<EdgeTuple> {
        let mut out = Vec::new();
        for (t, tree) in self.inner.edges.iter().enumerate() {
            for e in tree {
                out.push((t + 1, e.conditioned, e.conditioning.clone(), PyPairCopula { inner: e.copula.clone() }));
            }
        }
        out
    }

    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(vine::sample_vine(&self.inner, n, &mut rng).map_err(err)?.to_rows())
    }

    fn log_density(&self, u: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        vine::vine_log_density_rows(&self.inner, &matrix(&u)?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("VineModel(dimension={}, truncation_level={})", self.dimension(), self.truncation_level())
    }
}

/// Oversampled training data.
#[pyclass(name = "ResampleResult", module = "copulasmote", frozen, get_all)]
struct PyResampleResult {
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
    synthetic_mask: Vec<bool>,
    minority_label: u8,
    n_min: usize,
    n_maj: usize,
    n_syn: usize,
    flags: Vec<String>,
    vine: Option<PyVineModel>,
}

#[pyfunction]
#[pyo3(signature = (x, y, method = "copulasmote", seed = 0, k_neighbors = DEFAULT_K_NEIGHBORS, truncation = None, jitter_sd = DEFAULT_JITTER_SD))]
fn resample(
    x: Vec<Vec<f64>>,
    y: Vec<u8>,
    method: &str,
    seed: u64,
    k_neighbors: usize,
    truncation: Option<usize>,
    jitter_sd: f64,
) -> PyResult<PyResampleResult> {
    let mut cfg = ResampleConfig::new(Method::parse(method).map_err(err)?, seed);
    cfg.k_neighbors = k_neighbors;
    cfg.truncation_level = truncation;
    cfg.jitter_sd = jitter_sd;
    let out = rs::resample(&matrix(&x)?, &y, &cfg).map_err(err)?;
    Ok(PyResampleResult {
        features: out.features.to_rows(),
        labels: out.labels,
        synthetic_mask: out.synthetic_mask,
        minority_label: out.minority_label,
        n_min: out.n_min,
        n_maj: out.n_maj,
        n_syn: out.n_syn,
        flags: out.flags.iter().map(|f| format!("{f:?}")).collect(),
        vine: out.vine.map(|inner| PyVineModel { inner }),
    })
}

/// Jittered rank transform of each column into (0, 1).
#[pyfunction]
#[pyo3(signature = (x, jitter_sd = DEFAULT_JITTER_SD, seed = 0))]
fn pseudo_observations(x: Vec<Vec<f64>>, jitter_sd: f64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rs::pseudo_observations(&matrix(&x)?, jitter_sd, &mut rng).map_err(err)?.to_rows())
}

/// Tie-corrected (tau-b) Kendall correlation.
#[pyfunction]
fn kendall_tau(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    Ok(pc::empirical_kendall_tau(&x, &y).map_err(err)?.tau)
}

fn report_dict(r: &MetricReport) -> BTreeMap<&'static str, Option<f64>> {
    MetricReport::NAMES.iter().copied().zip(r.values()).collect()
}

/// Threshold and ranking metrics; AUC and PR AUC are None for one class.
#[pyfunction]
#[pyo3(signature = (y, scores, threshold = 0.5, positive_label = 1))]
fn compute_metrics(
    y: Vec<u8>,
    scores: Vec<f64>,
    threshold: f64,
    positive_label: u8,
) -> PyResult<BTreeMap<&'static str, Option<f64>>> {
    let r = copulasmote::eval::compute_metrics(&y, &scores, threshold, positive_label).map_err(err)?;
    Ok(report_dict(&r))
}

/// 5x2 paired t-test on ten fold differences in (iteration, half) order.
/// Returns `(t, p_two_sided, df, degenerate)`.
#[pyfunction]
fn dietterich_5x2(differences: Vec<f64>) -> PyResult<(f64, f64, u32, bool)> {
    let r = dietterich(&DiffTable::from_folds(&differences).map_err(err)?);
    Ok((r.t, r.p_two_sided, r.df, r.degenerate))
}

/// Runs the 5x2 experiment and returns `{method: {metric: mean}}` in the
/// overall mode. Result files are written when `out` is given.
#[pyfunction]
#[pyo3(signature = (data, spec, methods = None, seed = 0, out = None))]
fn run_experiment(
    data: PathBuf,
    spec: PathBuf,
    methods: Option<Vec<String>>,
    seed: u64,
    out: Option<PathBuf>,
) -> PyResult<BTreeMap<String, BTreeMap<&'static str, Option<f64>>>> {
    let spec = DatasetSpec::from_json_file(&spec).map_err(err)?;
    let table = runner::load_dataset(&data, &spec).map_err(err)?;
    let methods = match methods {
        Some(names) => names.iter().map(|m| Method::parse(m)).collect::<Result<Vec<_>, _>>().map_err(err)?,
        None => Method::ALL.to_vec(),
    };
    let store = runner::run_experiment(&table, &ExperimentConfig::new(methods, seed)).map_err(err)?;
    if let Some(dir) = out {
        store.write(&dir).map_err(err)?;
    }
    Ok(store
        .methods
        .iter()
        .map(|m| {
            let means = MetricReport::NAMES.iter().map(|&k| (k, store.mean(m, k, MetricMode::Overall))).collect();
            (m.clone(), means)
        })
        .collect())
}

#[pymodule(name = "copulasmote")]
pub fn copulasmote_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPairCopula>()?;
    m.add_class::<PyVineModel>()?;
    m.add_class::<PyResampleResult>()?;
    m.add_function(wrap_pyfunction!(resample, m)?)?;
    m.add_function(wrap_pyfunction!(pseudo_observations, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(dietterich_5x2, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
