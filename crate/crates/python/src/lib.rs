//! Python bindings: basis systems, single-design estimators, fitted models,
//! scenario effects, bands and the synthetic generator.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fdareg::bands::{BandConfig, DEFAULT_GRID_POINTS};
use fdareg::basis::{BasisSystem, CurveWeight, SeasonDomain};
use fdareg::effects::{scenario_effect, ScenarioKind, ScenarioSpec};
use fdareg::estimator::{self, EstimatorTag, FitResult};
use fdareg::ingest::synth::presets;
use fdareg::ingest::{generate_synthetic, write_synthetic, SynthSpec};
use fdareg::pipeline::{fit_config_file, model_bands, write_bands};
use fdareg::{Error, ErrorClass};

fn to_py(e: Error) -> PyErr {
    let msg = format!("{} ({})", e, e.kind());
    match e.class() {
        ErrorClass::Runtime => PyRuntimeError::new_err(msg),
        ErrorClass::Validation => PyValueError::new_err(msg),
        ErrorClass::MissingArtifact => PyFileNotFoundError::new_err(msg),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("design rows must have equal length"));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

fn tag(s: &str) -> PyResult<EstimatorTag> {
    s.parse().map_err(to_py)
}

/// A basis system on a season `[0, t_end]`.
#[pyclass(name = "Basis")]
struct PyBasis {
    inner: BasisSystem,
}

#[pymethods]
impl PyBasis {
    /// Even sizes are rounded up to the next odd size.
    #[staticmethod]
    fn fourier(t_end: f64, nbasis: usize) -> PyResult<Self> {
        let d = SeasonDomain::new(t_end, "season").map_err(to_py)?;
        let odd = if nbasis % 2 == 0 { nbasis + 1 } else { nbasis };
        Ok(PyBasis {
            inner: BasisSystem::fourier(d, odd).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (t_end, nbasis, order = 4))]
    fn bspline(t_end: f64, nbasis: usize, order: usize) -> PyResult<Self> {
        let d = SeasonDomain::new(t_end, "season").map_err(to_py)?;
        Ok(PyBasis {
            inner: BasisSystem::bspline(d, order, nbasis).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn polygonal(t_end: f64, nodes: Vec<f64>) -> PyResult<Self> {
        let d = SeasonDomain::new(t_end, "season").map_err(to_py)?;
        Ok(PyBasis {
            inner: BasisSystem::polygonal(d, nodes).map_err(to_py)?,
        })
    }

    #[getter]
    fn nbasis(&self) -> usize {
        self.inner.nbasis()
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.domain().t_end()
    }

    /// Basis values, one row per time.
    fn evaluate(&self, times: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let m = self.inner.evaluate(&times).map_err(to_py)?;
        Ok(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    fn evaluate_curve(&self, coefs: Vec<f64>, times: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.evaluate_curve(&coefs, &times).map_err(to_py)
    }

    fn gram(&self) -> Vec<Vec<f64>> {
        let g = self.inner.gram();
        g.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// `∫_{t0}^{t1} w(t) γ(t) dt`; `weight` is "constant" or "ramp".
    #[pyo3(signature = (coefs, t0, t1, weight = "constant"))]
    fn integrate(&self, coefs: Vec<f64>, t0: f64, t1: f64, weight: &str) -> PyResult<f64> {
        let w = match weight {
            "constant" => CurveWeight::Constant,
            "ramp" => CurveWeight::Ramp,
            other => return Err(PyValueError::new_err(format!("unknown weight {other:?}"))),
        };
        self.inner
            .integrate_coefficient_curve(&coefs, t0, t1, w)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Basis(nbasis={}, t_end={})",
            self.inner.nbasis(),
            self.inner.domain().t_end()
        )
    }
}

/// A fitted model document.
#[pyclass(name = "Model")]
struct PyModel {
    inner: FitResult,
}

#[pymethods]
impl PyModel {
    /// Fits from a run config and writes the model file it names.
    #[staticmethod]
    fn fit_config(path: PathBuf) -> PyResult<Self> {
        let out = fit_config_file(&path).map_err(to_py)?;
        Ok(PyModel {
            inner: out.fit.result,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            inner: FitResult::load(&path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: FitResult::from_json(text).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    #[getter]
    fn provinces(&self) -> Vec<String> {
        self.inner.index.provinces().to_vec()
    }

    #[getter]
    fn covariates(&self) -> Vec<String> {
        self.inner.covariates.iter().map(|c| c.name.clone()).collect()
    }

    #[getter]
    fn estimators(&self) -> Vec<String> {
        self.inner.estimates.iter().map(|e| e.tag.to_string()).collect()
    }

    /// Retained component count per covariate.
    fn n_components(&self, covariate: &str) -> PyResult<usize> {
        Ok(self.inner.covariate(covariate).map_err(to_py)?.1.n_components)
    }

    fn eigenvalues(&self, covariate: &str) -> PyResult<Vec<f64>> {
        Ok(self.inner.covariate(covariate).map_err(to_py)?.1.eigenvalues.clone())
    }

    /// Estimated effect curve on `times`.
    #[pyo3(signature = (covariate, times, estimator = "ols"))]
    fn gamma(&self, covariate: &str, times: Vec<f64>, estimator: &str) -> PyResult<Vec<f64>> {
        estimator::reconstruct_gamma(&self.inner, covariate, tag(estimator)?, &times).map_err(to_py)
    }

    fn coefficients<'py>(&self, py: Python<'py>, estimator: &str) -> PyResult<Bound<'py, PyDict>> {
        let e = self.inner.estimate(tag(estimator)?).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("alpha", e.alpha.clone())?;
        d.set_item("beta", e.beta.clone())?;
        d.set_item("gamma_scores", e.gamma_scores.clone())?;
        d.set_item("gamma_curves", e.gamma_curves.clone())?;
        if let Some(diag) = e.diagnostics {
            d.set_item("adjusted_r2", diag.adjusted_r2)?;
            d.set_item("prediction_correlation", diag.prediction_correlation)?;
        }
        Ok(d)
    }

    /// Scenario effect; exactly one of `delta_t` and `delta_p`.
    #[pyo3(signature = (covariate, t0, t1, delta_t = None, delta_p = None, estimator = "ols"))]
    fn effect<'py>(
        &self,
        py: Python<'py>,
        covariate: &str,
        t0: f64,
        t1: f64,
        delta_t: Option<f64>,
        delta_p: Option<f64>,
        estimator: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let kind = match (delta_t, delta_p) {
            (Some(delta_t), None) => ScenarioKind::TemperatureStep { delta_t },
            (None, Some(delta_p)) => ScenarioKind::PrecipitationRamp { delta_p },
            _ => return Err(PyValueError::new_err("give exactly one of delta_t and delta_p")),
        };
        let spec = ScenarioSpec {
            kind,
            t0,
            t1,
            covariate: covariate.to_string(),
            estimator: tag(estimator)?,
        };
        let r = scenario_effect(&self.inner, &spec).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("delta_log_yield", r.delta_log_yield)?;
        d.set_item("yield_ratio", r.yield_ratio)?;
        d.set_item("integral_value", r.integral_value)?;
        Ok(d)
    }

    /// Bootstrap bands; returns one dict per (covariate, estimator) and
    /// writes CSVs when `out` is given.
    #[pyo3(signature = (replicas = 500, level = 0.95, seed = 0, estimator = None, out = None))]
    fn bands<'py>(
        &self,
        py: Python<'py>,
        replicas: usize,
        level: f64,
        seed: u64,
        estimator: Option<&str>,
        out: Option<PathBuf>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let tags = match estimator {
            Some(s) => vec![tag(s)?],
            None => Vec::new(),
        };
        let cfg = BandConfig {
            n_replicas: replicas,
            level,
            seed,
            grid_points: DEFAULT_GRID_POINTS,
        };
        let bands = model_bands(&self.inner, &tags, &cfg).map_err(to_py)?;
        if let Some(dir) = out {
            write_bands(&dir, &bands).map_err(to_py)?;
        }
        bands
            .iter()
            .map(|b| {
                let d = PyDict::new(py);
                d.set_item("covariate", b.covariate.clone())?;
                d.set_item("estimator", b.estimator.to_string())?;
                d.set_item("t", b.grid.clone())?;
                d.set_item("point", b.point.clone())?;
                d.set_item("lower", b.lower.clone())?;
                d.set_item("upper", b.upper.clone())?;
                d.set_item("n_failed", b.n_failed)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(provinces={}, n_params={}, estimators={:?})",
            self.inner.index.n_provinces(),
            self.inner.n_params(),
            self.estimators()
        )
    }
}

/// OLS coefficients of `y` on the rows of `x`.
#[pyfunction]
fn fit_ols(x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<Vec<f64>> {
    let fit = estimator::fit_ols(&matrix(&x)?, &DVector::from_vec(y), None).map_err(to_py)?;
    Ok(fit.coefficients.iter().copied().collect())
}

/// Quantile regression coefficients at `tau`.
#[pyfunction]
fn fit_qr(x: Vec<Vec<f64>>, y: Vec<f64>, tau: f64) -> PyResult<Vec<f64>> {
    let fit = estimator::fit_qr(&matrix(&x)?, &DVector::from_vec(y), tau).map_err(to_py)?;
    Ok(fit.coefficients.iter().copied().collect())
}

/// Quantile-average coefficients over `tau + offsets`.
#[pyfunction]
#[pyo3(signature = (x, y, tau, offsets = None, include_center = false))]
fn fit_qa(
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    tau: f64,
    offsets: Option<Vec<f64>>,
    include_center: bool,
) -> PyResult<Vec<f64>> {
    let offsets = offsets.unwrap_or_else(|| estimator::DEFAULT_QA_OFFSETS.to_vec());
    let b = estimator::fit_qa(&matrix(&x)?, &DVector::from_vec(y), tau, &offsets, include_center)
        .map_err(to_py)?;
    Ok(b.iter().copied().collect())
}

#[pyfunction]
fn yield_ratio(delta_log_yield: f64) -> f64 {
    fdareg::effects::yield_ratio(delta_log_yield)
}

/// Writes a synthetic corpus; returns the written paths.
#[pyfunction]
#[pyo3(signature = (out, preset = "default", spec_json = None, force = false))]
fn simulate(out: PathBuf, preset: &str, spec_json: Option<&str>, force: bool) -> PyResult<Vec<String>> {
    let spec: SynthSpec = match spec_json {
        Some(text) => serde_json::from_str(text)
            .map_err(|e| PyValueError::new_err(format!("invalid generator spec: {e}")))?,
        None => match preset {
            "default" => presets::default_spec(),
            "maize" => presets::maize_shaped_spec(),
            "wheat" => presets::wheat_shaped_spec(),
            other => return Err(PyValueError::new_err(format!("unknown preset {other:?}"))),
        },
    };
    let output = generate_synthetic(&spec).map_err(to_py)?;
    let paths = write_synthetic(&spec, &output, &out, force).map_err(to_py)?;
    Ok(paths.iter().map(|p| p.display().to_string()).collect())
}

#[pymodule]
#[pyo3(name = "fdareg")]
fn fdareg_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBasis>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(fit_ols, m)?)?;
    m.add_function(wrap_pyfunction!(fit_qr, m)?)?;
    m.add_function(wrap_pyfunction!(fit_qa, m)?)?;
    m.add_function(wrap_pyfunction!(yield_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
