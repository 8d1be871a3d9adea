//! Reduced panel regression: design assembly, OLS, quantile regression and
//! quantile averaging, plus the fitted-model document.

mod model;
pub mod ols;
pub mod qr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::basis::{BasisSystem, SeasonDomain};
use crate::error::{Error, Result};
use crate::fdata::Window;
use crate::fpca::FpcaResult;
use crate::panel::PanelIndex;

pub use model::{
    fit_model, fit_smoothed, reconstruct_gamma, smooth_covariates, CovariateFit, DataSources,
    Estimate, FitResult, ModelFit, WeatherSource, MODEL_SCHEMA_VERSION,
};
pub use ols::{fit_ols, OlsDiagnostics, OlsFit};
pub use qr::{fit_qr, pinball, QrFit};

/// Default quantile-average neighborhood offsets.
pub const DEFAULT_QA_OFFSETS: [f64; 4] = [-0.05, -0.025, 0.025, 0.05];

/// How a basis is laid out for one covariate, before the domain is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BasisSpec {
    /// Even sizes are rounded up to the next odd size.
    Fourier { nbasis: usize },
    /// Equally spaced interior knots.
    Bspline {
        nbasis: usize,
        #[serde(default = "default_order")]
        order: usize,
    },
    /// Hat functions; nodes default to the sample times.
    Polygonal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<Vec<f64>>,
    },
}

fn default_order() -> usize {
    4
}

impl BasisSpec {
    pub fn build(&self, domain: &SeasonDomain, sample_times: &[f64]) -> Result<BasisSystem> {
        match self {
            BasisSpec::Fourier { nbasis } => {
                let odd = if nbasis % 2 == 0 { nbasis + 1 } else { *nbasis };
                BasisSystem::fourier(domain.clone(), odd)
            }
            BasisSpec::Bspline { nbasis, order } => {
                BasisSystem::bspline(domain.clone(), *order, *nbasis)
            }
            BasisSpec::Polygonal { nodes } => {
                let nodes = nodes.clone().unwrap_or_else(|| sample_times.to_vec());
                BasisSystem::polygonal(domain.clone(), nodes)
            }
        }
    }
}

/// Physical meaning of a covariate; scenario calculators check it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateRole {
    Temperature,
    Precipitation,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateSpec {
    pub name: String,
    pub role: CovariateRole,
    pub smoothing: BasisSpec,
    pub harmonic: BasisSpec,
    /// Precipitation defaults to the cumulative window; `{"days": 0}` keeps
    /// the raw series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

impl CovariateSpec {
    pub fn effective_window(&self) -> Option<Window> {
        match (self.window, self.role) {
            (Some(w), _) => Some(w),
            (None, CovariateRole::Precipitation) => Some(Window::Full),
            (None, _) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub trend_degree: usize,
    pub delta: f64,
    #[serde(default)]
    pub quantiles: Vec<f64>,
    #[serde(default = "default_offsets")]
    pub qa_offsets: Vec<f64>,
    #[serde(default)]
    pub qa_include_center: bool,
    pub covariates: Vec<CovariateSpec>,
    /// Year with trend value zero; defaults to the first panel year.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_year: Option<i32>,
}

fn default_offsets() -> Vec<f64> {
    DEFAULT_QA_OFFSETS.to_vec()
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        for &tau in &self.quantiles {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(Error::Config(format!("quantile {tau} outside (0, 1)")));
            }
            for &o in &self.qa_offsets {
                let q = tau + o;
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::Config(format!(
                        "neighborhood quantile {tau} + {o} leaves (0, 1)"
                    )));
                }
            }
        }
        let mut names: Vec<&str> = self.covariates.iter().map(|c| c.name.as_str()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("covariate names must be unique".into()));
        }
        Ok(())
    }

    /// OLS, then QR and QA at every configured quantile.
    pub fn estimator_tags(&self) -> Vec<EstimatorTag> {
        let mut tags = vec![EstimatorTag::Ols];
        tags.extend(self.quantiles.iter().map(|&t| EstimatorTag::Qr(t)));
        tags.extend(self.quantiles.iter().map(|&t| EstimatorTag::Qa(t)));
        tags
    }
}

/// Estimator identity, written `ols`, `qr:<tau>` or `qa:<tau>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorTag {
    Ols,
    Qr(f64),
    Qa(f64),
}

impl fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorTag::Ols => write!(f, "ols"),
            EstimatorTag::Qr(t) => write!(f, "qr:{t}"),
            EstimatorTag::Qa(t) => write!(f, "qa:{t}"),
        }
    }
}

impl FromStr for EstimatorTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "ols" {
            return Ok(EstimatorTag::Ols);
        }
        let parse_tau = |rest: &str| -> Result<f64> {
            let tau: f64 = rest
                .parse()
                .map_err(|_| Error::Lookup(format!("bad quantile in estimator tag {s:?}")))?;
            if tau > 0.0 && tau < 1.0 {
                Ok(tau)
            } else {
                Err(Error::Lookup(format!("quantile in {s:?} outside (0, 1)")))
            }
        };
        if let Some(rest) = lower.strip_prefix("qr:") {
            return Ok(EstimatorTag::Qr(parse_tau(rest)?));
        }
        if let Some(rest) = lower.strip_prefix("qa:") {
            return Ok(EstimatorTag::Qa(parse_tau(rest)?));
        }
        Err(Error::Lookup(format!(
            "unknown estimator {s:?}; expected ols, qr:<tau> or qa:<tau>"
        )))
    }
}

impl Serialize for EstimatorTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EstimatorTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl EstimatorTag {
    /// Filesystem-safe form, e.g. `qr-0.1`.
    pub fn file_stem(&self) -> String {
        self.to_string().replace(':', "-")
    }
}

/// Log-yield panel aligned with [`PanelIndex`] row order.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldPanel {
    index: PanelIndex,
    y: DVector<f64>,
}

impl YieldPanel {
    pub fn new(index: PanelIndex, y: DVector<f64>) -> Result<Self> {
        if y.len() != index.n_rows() {
            return Err(Error::Alignment(format!(
                "{} log yields for {} panel cells",
                y.len(),
                index.n_rows()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("log yields must be finite".into()));
        }
        Ok(YieldPanel { index, y })
    }

    pub fn index(&self) -> &PanelIndex {
        &self.index
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Panel built from drawn province blocks.
    pub fn resample_provinces(&self, draws: &[usize]) -> YieldPanel {
        let rows = self.index.resampled_rows(draws);
        YieldPanel {
            index: self.index.resampled(draws),
            y: DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.y[r])),
        }
    }
}

/// Design matrix with named columns: province indicators, trend powers,
/// then the fPCA scores of each covariate.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub columns: Vec<String>,
    pub n_fixed_effects: usize,
    pub trend_degree: usize,
    /// `(covariate, first column, number of score columns)`.
    pub covariate_blocks: Vec<(String, usize, usize)>,
}

impl Design {
    pub fn n_params(&self) -> usize {
        self.columns.len()
    }
}

pub fn build_design(spec: &ModelSpec, panel: &YieldPanel, fpcas: &[FpcaResult]) -> Result<Design> {
    if fpcas.len() != spec.covariates.len() {
        return Err(Error::Alignment(format!(
            "{} covariates in the spec but {} fPCA results",
            spec.covariates.len(),
            fpcas.len()
        )));
    }
    let index = panel.index();
    let n = index.n_rows();
    for (c, f) in spec.covariates.iter().zip(fpcas) {
        if f.scores().nrows() != n {
            return Err(Error::Alignment(format!(
                "covariate {} has {} score rows for {n} yield rows",
                c.name,
                f.scores().nrows()
            )));
        }
    }
    let m = index.n_provinces();
    let b = spec.trend_degree;
    let n_scores: usize = fpcas.iter().map(|f| f.n_components()).sum();
    let p = m + b + n_scores;
    let base_year = spec.base_year.unwrap_or(index.first_year());

    let mut x = DMatrix::zeros(n, p);
    let mut columns = Vec::with_capacity(p);
    columns.extend(index.provinces().iter().map(|id| format!("alpha[{id}]")));
    columns.extend((1..=b).map(|l| format!("beta[{l}]")));
    for row in 0..n {
        let (prov, year_off) = index.cell(row);
        x[(row, prov)] = 1.0;
        let t = (index.first_year() + year_off as i32 - base_year) as f64;
        for l in 1..=b {
            x[(row, m + l - 1)] = t.powi(l as i32);
        }
    }
    let mut covariate_blocks = Vec::with_capacity(fpcas.len());
    let mut col = m + b;
    for (c, f) in spec.covariates.iter().zip(fpcas) {
        let l = f.n_components();
        covariate_blocks.push((c.name.clone(), col, l));
        for s in 0..l {
            columns.push(format!("gamma[{}][{}]", c.name, s + 1));
            for row in 0..n {
                x[(row, col + s)] = f.scores()[(row, s)];
            }
        }
        col += l;
    }
    Ok(Design {
        x,
        y: panel.y().clone(),
        columns,
        n_fixed_effects: m,
        trend_degree: b,
        covariate_blocks,
    })
}

/// Quantiles averaged by the QA estimator, ascending.
pub fn qa_neighborhood(tau: f64, offsets: &[f64], include_center: bool) -> Result<Vec<f64>> {
    // rounded so that e.g. 0.1 - 0.025 is exactly the literal 0.075
    let mut qs: Vec<f64> = offsets.iter().map(|o| round_quantile(tau + o)).collect();
    if include_center || offsets.is_empty() {
        qs.push(tau);
    }
    qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &q in &qs {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Config(format!(
                "neighborhood quantile {q} around {tau} leaves (0, 1)"
            )));
        }
    }
    Ok(qs)
}

fn round_quantile(q: f64) -> f64 {
    (q * 1e12).round() / 1e12
}

/// Arithmetic mean of QR fits over the neighborhood of `tau`.
pub fn fit_qa(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    tau: f64,
    offsets: &[f64],
    include_center: bool,
) -> Result<DVector<f64>> {
    let qs = qa_neighborhood(tau, offsets, include_center)?;
    let mut sum = DVector::zeros(x.ncols());
    for &q in &qs {
        let fit = fit_qr(x, y, q).map_err(|e| Error::AtQuantile {
            tau: q,
            source: Box::new(e),
        })?;
        sum += fit.coefficients;
    }
    Ok(sum / qs.len() as f64)
}

/// Coefficients of one estimator on a design.
pub fn estimate(spec: &ModelSpec, design: &Design, tag: EstimatorTag) -> Result<DVector<f64>> {
    match tag {
        EstimatorTag::Ols => Ok(fit_ols(&design.x, &design.y, Some(&design.columns))?.coefficients),
        EstimatorTag::Qr(tau) => fit_qr(&design.x, &design.y, tau)
            .map(|f| f.coefficients)
            .map_err(|e| Error::AtQuantile {
                tau,
                source: Box::new(e),
            }),
        EstimatorTag::Qa(tau) => fit_qa(
            &design.x,
            &design.y,
            tau,
            &spec.qa_offsets,
            spec.qa_include_center,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip_through_text() {
        for tag in [EstimatorTag::Ols, EstimatorTag::Qr(0.1), EstimatorTag::Qa(0.9)] {
            assert_eq!(tag.to_string().parse::<EstimatorTag>().unwrap(), tag);
        }
        assert_eq!(EstimatorTag::Qr(0.1).file_stem(), "qr-0.1");
        assert!("median".parse::<EstimatorTag>().is_err());
        assert!("qr:1.5".parse::<EstimatorTag>().is_err());
    }

    #[test]
    fn default_neighborhood_at_low_quantile() {
        let qs = qa_neighborhood(0.1, &DEFAULT_QA_OFFSETS, false).unwrap();
        let expected = [0.05, 0.075, 0.125, 0.15];
        assert_eq!(qs.len(), 4);
        for (q, e) in qs.iter().zip(expected) {
            assert!((q - e).abs() < 1e-15);
        }
        assert_eq!(qa_neighborhood(0.3, &[], true).unwrap(), vec![0.3]);
        assert!(qa_neighborhood(0.03, &DEFAULT_QA_OFFSETS, false).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = ModelSpec {
            trend_degree: 2,
            delta: 0.9,
            quantiles: vec![0.1, 0.9],
            qa_offsets: default_offsets(),
            qa_include_center: false,
            covariates: vec![],
            base_year: None,
        };
        spec.validate().unwrap();
        spec.delta = 1.5;
        assert!(spec.validate().is_err());
        spec.delta = 0.9;
        spec.quantiles = vec![0.04];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn basis_spec_rounds_fourier_up() {
        let d = SeasonDomain::new(214.0, "maize").unwrap();
        let b = BasisSpec::Fourier { nbasis: 50 }.build(&d, &[]).unwrap();
        assert_eq!(b.nbasis(), 51);
        let spec: BasisSpec = serde_json::from_str(r#"{"kind":"bspline","nbasis":7}"#).unwrap();
        assert_eq!(spec, BasisSpec::Bspline { nbasis: 7, order: 4 });
        assert!(serde_json::from_str::<BasisSpec>(r#"{"kind":"bspline","nbasis":7,"nbasiss":3}"#).is_err());
    }

    #[test]
    fn design_layout_without_covariates() {
        let idx = PanelIndex::new(vec!["A".into(), "B".into()], 0, 2).unwrap();
        let panel = YieldPanel::new(idx, DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        let spec = ModelSpec {
            trend_degree: 1,
            delta: 0.9,
            quantiles: vec![],
            qa_offsets: vec![],
            qa_include_center: false,
            covariates: vec![],
            base_year: None,
        };
        let d = build_design(&spec, &panel, &[]).unwrap();
        assert_eq!(d.x.shape(), (4, 3));
        assert_eq!(d.x.column(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(d.x.column(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.columns, vec!["alpha[A]", "alpha[B]", "beta[1]"]);
    }
}
