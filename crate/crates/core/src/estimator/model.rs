use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{build_design, estimate, CovariateRole, Design, EstimatorTag, ModelSpec, YieldPanel};
use super::ols::{fit_ols, OlsDiagnostics};
use crate::basis::BasisSystem;
use crate::config::SeasonConfig;
use crate::error::{Error, Result};
use crate::fdata::{smooth, window_transform, FunctionalPanel, RawSeriesPanel, Window};
use crate::fpca::{fit_fpca, FpcaResult};
use crate::panel::PanelIndex;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Where the fitted data came from, relative to the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSources {
    pub yields: String,
    pub weather: Vec<WeatherSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherSource {
    pub covariate: String,
    pub data: String,
    pub meta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateFit {
    pub name: String,
    pub role: CovariateRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    pub smoothing_basis: BasisSystem,
    pub harmonic_basis: BasisSystem,
    pub mean_coefs: Vec<f64>,
    /// Every eigenfunction as harmonic coefficients; the first
    /// `n_components` enter the regression.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub variance_fraction: Vec<f64>,
    pub n_components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Estimate {
    pub tag: EstimatorTag,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Score coefficients per covariate.
    pub gamma_scores: Vec<Vec<f64>>,
    /// Effect curves per covariate, as harmonic coefficients.
    pub gamma_curves: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<OlsDiagnostics>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

/// Persistent fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitResult {
    pub schema_version: u32,
    pub spec: ModelSpec,
    pub index: PanelIndex,
    pub base_year: i32,
    pub columns: Vec<String>,
    pub covariates: Vec<CovariateFit>,
    pub estimates: Vec<Estimate>,
    /// Calendar season, when fitted from dated inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub season: Option<SeasonConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<DataSources>,
}

/// A fit together with the in-memory pieces that are not persisted.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub result: FitResult,
    pub fpca: Vec<FpcaResult>,
    pub design: Design,
}

impl FitResult {
    pub fn n_params(&self) -> usize {
        self.columns.len()
    }

    pub fn covariate(&self, name: &str) -> Result<(usize, &CovariateFit)> {
        self.covariates
            .iter()
            .enumerate()
            .find(|(_, c)| c.name == name)
            .ok_or_else(|| {
                let known: Vec<&str> = self.covariates.iter().map(|c| c.name.as_str()).collect();
                Error::Lookup(format!(
                    "no covariate {name:?} in model; available: {}",
                    known.join(", ")
                ))
            })
    }

    pub fn estimate(&self, tag: EstimatorTag) -> Result<&Estimate> {
        self.estimates.iter().find(|e| e.tag == tag).ok_or_else(|| {
            let known: Vec<String> = self.estimates.iter().map(|e| e.tag.to_string()).collect();
            Error::Lookup(format!(
                "no estimator {tag} in model; available: {}",
                known.join(", ")
            ))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fit: FitResult = serde_json::from_str(text)?;
        if fit.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "model schema version {} is not supported (expected {MODEL_SCHEMA_VERSION})",
                fit.schema_version
            )));
        }
        fit.check()?;
        Ok(fit)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::MissingFile {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Format(m));
        if self.covariates.len() != self.spec.covariates.len() {
            return bad("covariate count differs from the spec".into());
        }
        for c in &self.covariates {
            let k = c.harmonic_basis.nbasis();
            if c.n_components == 0 || c.n_components > c.eigenfunctions.len() {
                return bad(format!("covariate {} retains an invalid component count", c.name));
            }
            if c.eigenfunctions.iter().any(|e| e.len() != k) {
                return bad(format!("covariate {} eigenfunction length mismatch", c.name));
            }
            if c.mean_coefs.len() != c.smoothing_basis.nbasis() {
                return bad(format!("covariate {} mean curve length mismatch", c.name));
            }
        }
        for e in &self.estimates {
            if e.alpha.len() != self.index.n_provinces()
                || e.beta.len() != self.spec.trend_degree
                || e.gamma_scores.len() != self.covariates.len()
                || e.gamma_curves.len() != self.covariates.len()
            {
                return bad(format!("estimator {} has mismatched blocks", e.tag));
            }
            for (c, (s, g)) in self.covariates.iter().zip(e.gamma_scores.iter().zip(&e.gamma_curves)) {
                if s.len() != c.n_components || g.len() != c.harmonic_basis.nbasis() {
                    return bad(format!("estimator {} covariate {} has mismatched blocks", e.tag, c.name));
                }
            }
        }
        Ok(())
    }
}

/// Windowing and smoothing of every configured covariate. `raws` are
/// matched to the spec by covariate name.
pub fn smooth_covariates(spec: &ModelSpec, raws: &[RawSeriesPanel]) -> Result<Vec<FunctionalPanel>> {
    spec.covariates
        .iter()
        .map(|c| {
            let raw = raws.iter().find(|r| r.covariate() == c.name).ok_or_else(|| {
                Error::Lookup(format!("no weather panel supplied for covariate {:?}", c.name))
            })?;
            let transformed;
            let source = match c.effective_window() {
                Some(w) => {
                    transformed = window_transform(raw, w)?;
                    &transformed
                }
                None => raw,
            };
            let basis = c.smoothing.build(source.domain(), &source.sample_times())?;
            let panel = smooth(source, &basis)?;
            rename(panel, &c.name)
        })
        .collect()
}

fn rename(panel: FunctionalPanel, name: &str) -> Result<FunctionalPanel> {
    FunctionalPanel::from_coefs(
        name,
        panel.basis().clone(),
        panel.index().clone(),
        panel.coefs().clone(),
    )
}

/// Full pipeline from raw weather series.
pub fn fit_model(
    spec: &ModelSpec,
    yields: &YieldPanel,
    raws: &[RawSeriesPanel],
    tags: &[EstimatorTag],
) -> Result<ModelFit> {
    spec.validate()?;
    let panels = smooth_covariates(spec, raws)?;
    fit_smoothed(spec, yields, &panels, tags)
}

/// Pipeline from uncentered smoothed panels, one per spec covariate in order.
pub fn fit_smoothed(
    spec: &ModelSpec,
    yields: &YieldPanel,
    panels: &[FunctionalPanel],
    tags: &[EstimatorTag],
) -> Result<ModelFit> {
    spec.validate()?;
    if panels.len() != spec.covariates.len() {
        return Err(Error::Alignment(format!(
            "{} smoothed panels for {} covariates",
            panels.len(),
            spec.covariates.len()
        )));
    }
    let mut fpcas = Vec::with_capacity(panels.len());
    let mut covariates = Vec::with_capacity(panels.len());
    for (c, panel) in spec.covariates.iter().zip(panels) {
        if panel.index() != yields.index() {
            return Err(Error::Alignment(format!(
                "weather panel for {} is not aligned with the yield panel",
                c.name
            )));
        }
        let harmonic = c.harmonic.build(panel.basis().domain(), &[])?;
        let centered = panel.center()?;
        let f = fit_fpca(&centered, &harmonic, spec.delta)?;
        covariates.push(CovariateFit {
            name: c.name.clone(),
            role: c.role,
            window: c.effective_window(),
            smoothing_basis: panel.basis().clone(),
            harmonic_basis: harmonic,
            mean_coefs: panel.mean_coefs().iter().copied().collect(),
            eigenfunctions: (0..f.eigenfunctions().nrows()).map(|s| f.eigenfunction(s)).collect(),
            eigenvalues: f.eigenvalues().to_vec(),
            variance_fraction: f.variance_fraction().to_vec(),
            n_components: f.n_components(),
        });
        fpcas.push(f);
    }
    let design = build_design(spec, yields, &fpcas)?;
    let mut estimates = Vec::with_capacity(tags.len());
    for &tag in tags {
        let (coef, diagnostics) = match tag {
            EstimatorTag::Ols => {
                let fit = fit_ols(&design.x, &design.y, Some(&design.columns))?;
                (fit.coefficients, Some(fit.diagnostics))
            }
            _ => (estimate(spec, &design, tag)?, None),
        };
        estimates.push(split_estimate(tag, &coef, &design, &fpcas, diagnostics)?);
    }
    let result = FitResult {
        schema_version: MODEL_SCHEMA_VERSION,
        spec: spec.clone(),
        index: yields.index().clone(),
        base_year: spec.base_year.unwrap_or(yields.index().first_year()),
        columns: design.columns.clone(),
        covariates,
        estimates,
        season: None,
        sources: None,
    };
    Ok(ModelFit {
        result,
        fpca: fpcas,
        design,
    })
}

fn split_estimate(
    tag: EstimatorTag,
    coef: &DVector<f64>,
    design: &Design,
    fpcas: &[FpcaResult],
    diagnostics: Option<OlsDiagnostics>,
) -> Result<Estimate> {
    let m = design.n_fixed_effects;
    let b = design.trend_degree;
    let mut gamma_scores = Vec::with_capacity(fpcas.len());
    let mut gamma_curves = Vec::with_capacity(fpcas.len());
    for (&(_, start, len), f) in design.covariate_blocks.iter().zip(fpcas) {
        let s: Vec<f64> = coef.rows(start, len).iter().copied().collect();
        gamma_curves.push(f.combine(&s)?);
        gamma_scores.push(s);
    }
    let residuals = (&design.y - &design.x * coef).iter().copied().collect();
    Ok(Estimate {
        tag,
        alpha: coef.rows(0, m).iter().copied().collect(),
        beta: coef.rows(m, b).iter().copied().collect(),
        gamma_scores,
        gamma_curves,
        diagnostics,
        residuals,
    })
}

/// Values of an estimated effect curve on a time grid.
pub fn reconstruct_gamma(
    fit: &FitResult,
    covariate: &str,
    tag: EstimatorTag,
    times: &[f64],
) -> Result<Vec<f64>> {
    let (k, c) = fit.covariate(covariate)?;
    let e = fit.estimate(tag)?;
    c.harmonic_basis.evaluate_curve(&e.gamma_curves[k], times)
}
