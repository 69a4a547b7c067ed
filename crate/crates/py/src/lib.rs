//! Python bindings: the dataset types, estimators, and fitting operations
//! exposed as one in-process extension module.

use std::fs;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use score_explain::aalen;
use score_explain::coxph::{self, CoxOptions};
use score_explain::dataset::{self, Schema};
use score_explain::error::Error;
use score_explain::estimators::{self, VarianceMode};
use score_explain::pipeline::{self, ExplainOptions};
use score_explain::synthgen::{self, CovariateSpec, SynthConfig};

fn to_py_err(err: Error) -> PyErr {
    match err.exit_class() {
        2 => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

/// `(score, estimate, variance, ci_low, ci_high)`; interval cells are
/// None where the variance is undefined.
type InclusionRow = (f64, f64, Option<f64>, Option<f64>, Option<f64>);
/// `(action, covariate, p_value)` selection events.
type TraceRow = (String, String, f64);

fn parse_delimiter(delimiter: &str) -> PyResult<u8> {
    let bytes = delimiter.as_bytes();
    if bytes.len() == 1 {
        Ok(bytes[0])
    } else {
        Err(PyValueError::new_err(format!(
            "delimiter `{delimiter}` must be a single character"
        )))
    }
}

fn parse_variance(mode: &str) -> PyResult<VarianceMode> {
    VarianceMode::parse(mode).ok_or_else(|| {
        PyValueError::new_err(format!("variance `{mode}` must be greenwood or tau"))
    })
}

/// Validated collection of scored observations.
#[pyclass(name = "RecordSet")]
struct PyRecordSet {
    inner: dataset::RecordSet,
}

#[pymethods]
impl PyRecordSet {
    /// Load the canonical delimiter-separated layout from a file.
    #[staticmethod]
    #[pyo3(signature = (path, delimiter=","))]
    fn from_csv(path: PathBuf, delimiter: &str) -> PyResult<Self> {
        let schema = Schema {
            delimiter: parse_delimiter(delimiter)?,
            ..Schema::default()
        };
        let bytes = fs::read(&path)
            .map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
        let inner = dataset::load_records(&bytes[..], &schema).map_err(to_py_err)?;
        Ok(PyRecordSet { inner })
    }

    /// Write the canonical CSV layout.
    fn to_csv(&self, path: PathBuf) -> PyResult<()> {
        let bytes = pipeline::write_canonical_csv(&self.inner).map_err(to_py_err)?;
        fs::write(&path, bytes)
            .map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))
    }

    #[getter]
    fn covariate_names(&self) -> Vec<String> {
        self.inner.covariate_names().to_vec()
    }

    /// Apply the episode policy: responder terminal rows become events,
    /// lookback and unlabeled rows are censored, non-responders drop out.
    fn build_episodes(&self) -> PyResult<PyEpisodeSet> {
        let inner = dataset::build_episodes(&self.inner).map_err(to_py_err)?;
        Ok(PyEpisodeSet { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "RecordSet({} records, {} covariates)",
            self.inner.len(),
            self.inner.covariate_names().len()
        )
    }
}

/// Analysis-ready episodes (score, event flag, covariates).
#[pyclass(name = "EpisodeSet")]
struct PyEpisodeSet {
    inner: dataset::EpisodeSet,
}

#[pymethods]
impl PyEpisodeSet {
    #[getter]
    fn covariate_names(&self) -> Vec<String> {
        self.inner.covariate_names().to_vec()
    }

    #[getter]
    fn n_events(&self) -> usize {
        self.inner.n_events()
    }

    /// Projection onto a covariate subset (empty list for intercept-only).
    fn select(&self, names: Vec<String>) -> PyResult<PyEpisodeSet> {
        let inner = self.inner.select_covariates(&names).map_err(to_py_err)?;
        Ok(PyEpisodeSet { inner })
    }

    /// The distinct event scores with event and at-risk counts, as
    /// `(score, events, at_risk, censored_after)` rows.
    fn risk_table(&self) -> PyResult<Vec<(f64, usize, usize, usize)>> {
        let table = dataset::risk_table(&self.inner).map_err(to_py_err)?;
        Ok(table
            .rows()
            .iter()
            .map(|r| (r.score, r.events, r.at_risk, r.censored_after))
            .collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "EpisodeSet({} episodes, {} events)",
            self.inner.len(),
            self.inner.n_events()
        )
    }
}

/// Fitted multiplicative hazards model.
#[pyclass(name = "CoxFit")]
struct PyCoxFit {
    inner: coxph::CoxFit,
}

#[pymethods]
impl PyCoxFit {
    #[getter]
    fn covariate_names(&self) -> Vec<String> {
        self.inner.covariate_names.clone()
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.beta.iter().cloned().collect()
    }

    #[getter]
    fn se(&self) -> Vec<f64> {
        self.inner.se.iter().cloned().collect()
    }

    #[getter]
    fn z(&self) -> Vec<f64> {
        self.inner.z.iter().cloned().collect()
    }

    #[getter]
    fn p_values(&self) -> Vec<f64> {
        self.inner.p_value.iter().cloned().collect()
    }

    #[getter]
    fn hazard_ratios(&self) -> Vec<f64> {
        self.inner.hazard_ratio.iter().cloned().collect()
    }

    #[getter]
    fn log_likelihood(&self) -> f64 {
        self.inner.log_likelihood
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    /// exp(beta . (z_a - z_b)); independent of score.
    fn hazard_ratio(&self, z_a: Vec<f64>, z_b: Vec<f64>) -> PyResult<f64> {
        coxph::hazard_ratio(&self.inner, &z_a, &z_b).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "CoxFit({:?}, beta={:?}, converged={})",
            self.inner.covariate_names,
            self.beta(),
            self.inner.converged
        )
    }
}

/// Fitted additive hazards model with cumulative coefficient curves.
#[pyclass(name = "AalenFit")]
struct PyAalenFit {
    inner: aalen::AalenFit,
}

#[pymethods]
impl PyAalenFit {
    #[getter]
    fn covariate_names(&self) -> Vec<String> {
        self.inner.covariate_names().to_vec()
    }

    #[getter]
    fn last_estimable_score(&self) -> f64 {
        self.inner.last_estimable_score()
    }

    /// Cumulative coefficient curve as `(score, cumulative, variance)`
    /// rows; the intercept curve is named "intercept".
    fn curve(&self, covariate: &str) -> PyResult<Vec<(f64, f64, f64)>> {
        Ok(self
            .inner
            .curve(covariate)
            .map_err(to_py_err)?
            .iter()
            .map(|p| (p.score, p.cumulative, p.variance))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "AalenFit({:?}, last_estimable_score={})",
            self.inner.covariate_names(),
            self.inner.last_estimable_score()
        )
    }
}

/// Deterministic synthetic dataset with hazard `baseline_rate * exp(beta . Z)`.
#[pyfunction]
#[pyo3(signature = (n, beta, baseline_rate=1.0, censor_fraction=0.0, covariates=None, seed=42))]
fn generate(
    n: usize,
    beta: Vec<f64>,
    baseline_rate: f64,
    censor_fraction: f64,
    covariates: Option<Vec<String>>,
    seed: u64,
) -> PyResult<PyRecordSet> {
    let specs: Vec<CovariateSpec> = match covariates {
        Some(texts) => texts
            .iter()
            .map(|t| {
                CovariateSpec::parse(t).ok_or_else(|| {
                    PyValueError::new_err(format!(
                        "covariate `{t}` must be bernoulli:p or uniform:lo:hi"
                    ))
                })
            })
            .collect::<PyResult<_>>()?,
        None => vec![CovariateSpec::Bernoulli { p: 0.5 }; beta.len()],
    };
    let config = SynthConfig {
        n,
        true_beta: beta,
        baseline_rate,
        censor_fraction,
        covariates: specs,
        seed,
    };
    let inner = synthgen::generate(&config).map_err(to_py_err)?;
    Ok(PyRecordSet { inner })
}

/// Product-limit inclusion curve as
/// `(score, estimate, variance, ci_low, ci_high)` rows; variance cells are
/// None once the at-risk set is exhausted under the greenwood mode.
#[pyfunction]
#[pyo3(signature = (episodes, confidence_level=0.95, variance="greenwood"))]
fn product_limit(
    episodes: &PyEpisodeSet,
    confidence_level: f64,
    variance: &str,
) -> PyResult<Vec<InclusionRow>> {
    let mode = parse_variance(variance)?;
    let table = dataset::risk_table(&episodes.inner).map_err(to_py_err)?;
    let curve = estimators::product_limit(&table, confidence_level, mode).map_err(to_py_err)?;
    Ok(curve
        .points()
        .iter()
        .map(|p| (p.score, p.estimate, p.variance, p.ci_low, p.ci_high))
        .collect())
}

/// Nelson-Aalen cumulative hazard as `(score, estimate, variance)` rows.
#[pyfunction]
fn nelson_aalen(episodes: &PyEpisodeSet) -> PyResult<Vec<(f64, f64, f64)>> {
    let table = dataset::risk_table(&episodes.inner).map_err(to_py_err)?;
    let curve = estimators::nelson_aalen(&table);
    Ok(curve
        .points()
        .iter()
        .map(|p| (p.score, p.estimate, p.variance))
        .collect())
}

/// Newton-Raphson fit of the multiplicative hazards model.
#[pyfunction]
#[pyo3(signature = (episodes, tol=1e-9, max_iter=50))]
fn cox_fit(episodes: &PyEpisodeSet, tol: f64, max_iter: usize) -> PyResult<PyCoxFit> {
    let inner = coxph::cox_fit(&episodes.inner, &CoxOptions { tol, max_iter }).map_err(to_py_err)?;
    Ok(PyCoxFit { inner })
}

/// Alternating forward/backward Wald selection. Returns the final fit and
/// the selection trace as `(action, covariate, p_value)` rows.
#[pyfunction]
#[pyo3(signature = (episodes, alpha_in=0.05, alpha_out=0.10))]
fn stepwise_select(
    episodes: &PyEpisodeSet,
    alpha_in: f64,
    alpha_out: f64,
) -> PyResult<(PyCoxFit, Vec<TraceRow>)> {
    let outcome =
        coxph::stepwise_select(&episodes.inner, alpha_in, alpha_out).map_err(to_py_err)?;
    let trace = outcome
        .trace
        .iter()
        .map(|event| {
            (
                format!("{:?}", event.action).to_lowercase(),
                event.covariate.clone(),
                event.p_value,
            )
        })
        .collect();
    Ok((PyCoxFit { inner: outcome.fit }, trace))
}

/// Breslow baseline cumulative hazard as
/// `(score, increment, cumulative)` rows.
#[pyfunction]
fn baseline_hazard(
    fit: &PyCoxFit,
    episodes: &PyEpisodeSet,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let baseline = coxph::baseline_hazard(&fit.inner, &episodes.inner).map_err(to_py_err)?;
    Ok(baseline
        .points()
        .iter()
        .map(|p| (p.score, p.increment, p.cumulative))
        .collect())
}

/// Least-squares additive hazards fit.
#[pyfunction]
fn aalen_fit(episodes: &PyEpisodeSet) -> PyResult<PyAalenFit> {
    let inner = aalen::aalen_fit(&episodes.inner).map_err(to_py_err)?;
    Ok(PyAalenFit { inner })
}

/// Run the complete pipeline, writing all artifacts into `out_dir`.
/// Returns the emitted file names.
#[pyfunction]
#[pyo3(signature = (input, out_dir, confidence_level=0.95, variance="greenwood",
                    collinearity=0.95, alpha_in=0.05, alpha_out=0.10))]
#[allow(clippy::too_many_arguments)]
fn explain(
    input: PathBuf,
    out_dir: PathBuf,
    confidence_level: f64,
    variance: &str,
    collinearity: f64,
    alpha_in: f64,
    alpha_out: f64,
) -> PyResult<Vec<String>> {
    let options = ExplainOptions {
        confidence_level,
        variance_mode: parse_variance(variance)?,
        collinearity_threshold: collinearity,
        alpha_in,
        alpha_out,
        ..ExplainOptions::default()
    };
    let manifest = pipeline::run_explain(&input, &out_dir, &options).map_err(to_py_err)?;
    Ok(manifest.outputs.into_iter().map(|o| o.path).collect())
}

#[pymodule]
fn score_explain_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRecordSet>()?;
    m.add_class::<PyEpisodeSet>()?;
    m.add_class::<PyCoxFit>()?;
    m.add_class::<PyAalenFit>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(product_limit, m)?)?;
    m.add_function(wrap_pyfunction!(nelson_aalen, m)?)?;
    m.add_function(wrap_pyfunction!(cox_fit, m)?)?;
    m.add_function(wrap_pyfunction!(stepwise_select, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_hazard, m)?)?;
    m.add_function(wrap_pyfunction!(aalen_fit, m)?)?;
    m.add_function(wrap_pyfunction!(explain, m)?)?;
    Ok(())
}
