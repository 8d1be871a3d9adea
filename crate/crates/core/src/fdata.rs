//! Functional panels: sampled weather series, their least-squares smoothing
//! onto a basis, centering, and the precipitation window transform.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, SeasonDomain};
use crate::error::{Error, Result};
use crate::panel::PanelIndex;

/// Sampling cadence of a raw weather series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cadence {
    Hourly,
    Daily,
}

impl Cadence {
    /// Spacing between consecutive samples, in days.
    pub fn step_days(self) -> f64 {
        match self {
            Cadence::Hourly => 1.0 / 24.0,
            Cadence::Daily => 1.0,
        }
    }
}

/// Backward summation window applied to daily series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// Sum of the current day and the `n` preceding days.
    Days(u32),
    /// Running cumulative sum from season start.
    Full,
}

impl Window {
    pub fn tag(self) -> String {
        match self {
            Window::Days(w) => format!("w{w}"),
            Window::Full => "cum".to_string(),
        }
    }
}

/// Dense balanced panel of sampled series for one covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeriesPanel {
    covariate: String,
    cadence: Cadence,
    domain: SeasonDomain,
    index: PanelIndex,
    /// One row per panel cell, one column per sample.
    values: DMatrix<f64>,
}

impl RawSeriesPanel {
    pub fn new(
        covariate: impl Into<String>,
        cadence: Cadence,
        domain: SeasonDomain,
        index: PanelIndex,
        values: DMatrix<f64>,
    ) -> Result<Self> {
        if values.nrows() != index.n_rows() {
            return Err(Error::Alignment(format!(
                "{} series rows for a panel of {} cells",
                values.nrows(),
                index.n_rows()
            )));
        }
        let n = values.ncols();
        if n == 0 {
            return Err(Error::InsufficientData("series have no samples".into()));
        }
        let last = (n - 1) as f64 * cadence.step_days();
        if last > domain.t_end() * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "{n} {cadence:?} samples extend to day {last}, beyond the season end {}",
                domain.t_end()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite weather sample".into()));
        }
        Ok(RawSeriesPanel {
            covariate: covariate.into(),
            cadence,
            domain,
            index,
            values,
        })
    }

    pub fn covariate(&self) -> &str {
        &self.covariate
    }

    pub fn cadence(&self) -> Cadence {
        self.cadence
    }

    pub fn domain(&self) -> &SeasonDomain {
        &self.domain
    }

    pub fn index(&self) -> &PanelIndex {
        &self.index
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    /// `t_r = r·Δt` in days.
    pub fn sample_times(&self) -> Vec<f64> {
        sample_times(self.cadence, self.n_samples())
    }

    pub fn series(&self, row: usize) -> Vec<f64> {
        self.values.row(row).iter().copied().collect()
    }
}

pub fn sample_times(cadence: Cadence, n: usize) -> Vec<f64> {
    let dt = cadence.step_days();
    (0..n).map(|r| r as f64 * dt).collect()
}

/// Smoothed curves stored as basis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalPanel {
    covariate: String,
    basis: BasisSystem,
    index: PanelIndex,
    coefs: DMatrix<f64>,
    mean_coefs: DVector<f64>,
    centered: bool,
}

impl FunctionalPanel {
    /// Builds an uncentered panel; the mean is computed from `coefs`.
    pub fn from_coefs(
        covariate: impl Into<String>,
        basis: BasisSystem,
        index: PanelIndex,
        coefs: DMatrix<f64>,
    ) -> Result<Self> {
        if coefs.ncols() != basis.nbasis() || coefs.nrows() != index.n_rows() {
            return Err(Error::Alignment(format!(
                "coefficient matrix {}x{} does not match {} cells x {} elements",
                coefs.nrows(),
                coefs.ncols(),
                index.n_rows(),
                basis.nbasis()
            )));
        }
        let mean_coefs = column_means(&coefs);
        Ok(FunctionalPanel {
            covariate: covariate.into(),
            basis,
            index,
            coefs,
            mean_coefs,
            centered: false,
        })
    }

    pub fn covariate(&self) -> &str {
        &self.covariate
    }

    pub fn basis(&self) -> &BasisSystem {
        &self.basis
    }

    pub fn index(&self) -> &PanelIndex {
        &self.index
    }

    pub fn coefs(&self) -> &DMatrix<f64> {
        &self.coefs
    }

    pub fn mean_coefs(&self) -> &DVector<f64> {
        &self.mean_coefs
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn n_curves(&self) -> usize {
        self.coefs.nrows()
    }

    /// Subtracts the panel mean curve from every row.
    pub fn center(&self) -> Result<FunctionalPanel> {
        if self.centered {
            return Err(Error::State("panel is already centered".into()));
        }
        let mut coefs = self.coefs.clone();
        for mut row in coefs.row_iter_mut() {
            for (v, m) in row.iter_mut().zip(self.mean_coefs.iter()) {
                *v -= m;
            }
        }
        Ok(FunctionalPanel {
            covariate: self.covariate.clone(),
            basis: self.basis.clone(),
            index: self.index.clone(),
            coefs,
            mean_coefs: self.mean_coefs.clone(),
            centered: true,
        })
    }

    /// Uncentered panel made of the drawn province blocks.
    pub fn resample_provinces(&self, draws: &[usize]) -> Result<FunctionalPanel> {
        if self.centered {
            return Err(Error::State(
                "resample the uncentered panel and center the result".into(),
            ));
        }
        let rows = self.index.resampled_rows(draws);
        let coefs = self.coefs.select_rows(rows.iter());
        FunctionalPanel::from_coefs(
            self.covariate.clone(),
            self.basis.clone(),
            self.index.resampled(draws),
            coefs,
        )
    }

    /// Curve values of one row on a time grid.
    pub fn evaluate_row(&self, row: usize, times: &[f64]) -> Result<Vec<f64>> {
        let c: Vec<f64> = self.coefs.row(row).iter().copied().collect();
        self.basis.evaluate_curve(&c, times)
    }
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows().max(1) as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

/// Least-squares projection of every sampled series onto `basis`.
pub fn smooth(raw: &RawSeriesPanel, basis: &BasisSystem) -> Result<FunctionalPanel> {
    if !basis.domain().same_extent(raw.domain()) {
        return Err(Error::Config(format!(
            "basis domain [0, {}] differs from series domain [0, {}]",
            basis.domain().t_end(),
            raw.domain().t_end()
        )));
    }
    let nb = basis.nbasis();
    let n = raw.n_samples();
    if nb > n {
        return Err(Error::Singular(format!(
            "{nb} basis elements cannot be fitted from {n} sample times"
        )));
    }
    let phi = basis.evaluate(&raw.sample_times())?;
    let solver = least_squares_operator(&phi)?;
    // coefs = values · Sᵀ with S = (ΦᵀΦ)⁻¹Φᵀ
    let coefs = raw.values() * solver.transpose();
    FunctionalPanel::from_coefs(
        raw.covariate().to_string(),
        basis.clone(),
        raw.index().clone(),
        coefs,
    )
}

/// `R⁻¹Qᵀ` from a thin QR of `phi`, failing on numerically dependent columns.
pub(crate) fn least_squares_operator(phi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let qr = phi.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let dependent: Vec<usize> = (0..r.ncols())
        .filter(|&k| r[(k, k)].abs() <= 1e-10 * diag_max.max(f64::MIN_POSITIVE))
        .collect();
    if !dependent.is_empty() {
        return Err(Error::Singular(format!(
            "basis elements {dependent:?} are not identified by the sample times"
        )));
    }
    let qt = qr.q().transpose();
    r.solve_upper_triangular(&qt)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))
}

/// Truncated backward sums of daily series: sample `t` becomes
/// `Σ_{s=max(0,t-W)}^{t} x_s`, or the running total for [`Window::Full`].
pub fn window_transform(raw: &RawSeriesPanel, window: Window) -> Result<RawSeriesPanel> {
    if raw.cadence() != Cadence::Daily {
        return Err(Error::UnsupportedCadence(format!(
            "window transform applies to daily series, {} is {:?}",
            raw.covariate(),
            raw.cadence()
        )));
    }
    let (rows, cols) = raw.values().shape();
    let mut out = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        let series: Vec<f64> = raw.values().row(r).iter().copied().collect();
        for (c, v) in window_series(&series, window).into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    RawSeriesPanel::new(
        format!("{}_{}", raw.covariate(), window.tag()),
        raw.cadence(),
        raw.domain().clone(),
        raw.index().clone(),
        out,
    )
}

/// Window transform of a single series.
pub fn window_series(x: &[f64], window: Window) -> Vec<f64> {
    match window {
        Window::Full => {
            let mut acc = 0.0;
            x.iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect()
        }
        Window::Days(w) => {
            let w = w as usize;
            (0..x.len())
                .map(|t| x[t.saturating_sub(w)..=t].iter().sum())
                .collect()
        }
    }
}
