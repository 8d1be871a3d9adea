//! Yield impact of weather scenarios under a fitted model.

use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, CurveWeight};
use crate::error::{Error, Result};
use crate::estimator::{CovariateRole, EstimatorTag, FitResult};

/// Shortest precipitation window, in days.
pub const MIN_RAMP_WINDOW: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Temperature raised by `delta_t` degrees on `[t0, t1]`.
    TemperatureStep { delta_t: f64 },
    /// Precipitation changed by `delta_p` mm, accumulated linearly over `[t0, t1]`.
    PrecipitationRamp { delta_p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    pub t0: f64,
    pub t1: f64,
    pub covariate: String,
    pub estimator: EstimatorTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub delta_log_yield: f64,
    pub yield_ratio: f64,
    /// The weighted integral of the effect curve over the window.
    pub integral_value: f64,
}

pub fn yield_ratio(delta_log_yield: f64) -> f64 {
    delta_log_yield.exp()
}

pub fn temperature_step_effect(fit: &FitResult, spec: &ScenarioSpec) -> Result<ScenarioResult> {
    let ScenarioKind::TemperatureStep { .. } = spec.kind else {
        return Err(Error::Config("scenario is not a temperature step".into()));
    };
    let (basis, curve) = curve_for(fit, spec, CovariateRole::Temperature)?;
    effect_on_curve(basis, curve, spec.kind, spec.t0, spec.t1)
}

pub fn precipitation_ramp_effect(fit: &FitResult, spec: &ScenarioSpec) -> Result<ScenarioResult> {
    let ScenarioKind::PrecipitationRamp { .. } = spec.kind else {
        return Err(Error::Config("scenario is not a precipitation ramp".into()));
    };
    let (basis, curve) = curve_for(fit, spec, CovariateRole::Precipitation)?;
    effect_on_curve(basis, curve, spec.kind, spec.t0, spec.t1)
}

/// Dispatches on the scenario kind.
pub fn scenario_effect(fit: &FitResult, spec: &ScenarioSpec) -> Result<ScenarioResult> {
    match spec.kind {
        ScenarioKind::TemperatureStep { .. } => temperature_step_effect(fit, spec),
        ScenarioKind::PrecipitationRamp { .. } => precipitation_ramp_effect(fit, spec),
    }
}

fn curve_for<'a>(
    fit: &'a FitResult,
    spec: &ScenarioSpec,
    role: CovariateRole,
) -> Result<(&'a BasisSystem, &'a [f64])> {
    let (k, c) = fit.covariate(&spec.covariate)?;
    if c.role != role {
        return Err(Error::Config(format!(
            "covariate {} has role {:?}; this scenario needs {:?}",
            c.name, c.role, role
        )));
    }
    let e = fit.estimate(spec.estimator)?;
    Ok((&c.harmonic_basis, &e.gamma_curves[k]))
}

/// Scenario effect for an effect curve given directly by basis coefficients.
pub fn effect_on_curve(
    basis: &BasisSystem,
    coeffs: &[f64],
    kind: ScenarioKind,
    t0: f64,
    t1: f64,
) -> Result<ScenarioResult> {
    let (delta, weight) = match kind {
        ScenarioKind::TemperatureStep { delta_t } => (delta_t, CurveWeight::Constant),
        ScenarioKind::PrecipitationRamp { delta_p } => {
            if t1 - t0 < MIN_RAMP_WINDOW {
                return Err(Error::Interval {
                    t0,
                    t1,
                    reason: format!("precipitation window must span at least {MIN_RAMP_WINDOW} days"),
                });
            }
            (delta_p, CurveWeight::Ramp)
        }
    };
    if !delta.is_finite() {
        return Err(Error::Config(format!("scenario magnitude {delta} is not finite")));
    }
    let integral_value = basis.integrate_coefficient_curve(coeffs, t0, t1, weight)?;
    let delta_log_yield = delta * integral_value;
    Ok(ScenarioResult {
        delta_log_yield,
        yield_ratio: yield_ratio(delta_log_yield),
        integral_value,
    })
}

/// Whether a printed `(ΔY, ratio)` pair is consistent with `ratio = exp(ΔY)`
/// given that both were rounded to `decimals` places: some ΔY within half a
/// unit of the printed value maps to a ratio within half a unit of the
/// printed ratio.
pub fn printed_pair_consistent(delta_log_yield: f64, ratio: f64, decimals: i32) -> bool {
    let h = 0.5 * 10f64.powi(-decimals);
    let slack = 1e-12;
    let lo = (delta_log_yield - h).exp();
    let hi = (delta_log_yield + h).exp();
    lo <= ratio + h + slack && hi >= ratio - h - slack
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SeasonDomain;

    fn constant_curve(c: f64) -> (BasisSystem, Vec<f64>) {
        let b = BasisSystem::bspline(SeasonDomain::new(214.0, "season").unwrap(), 4, 9).unwrap();
        (b, vec![c; 9])
    }

    #[test]
    fn zero_step_is_neutral() {
        let (b, g) = constant_curve(-0.001);
        let r = effect_on_curve(&b, &g, ScenarioKind::TemperatureStep { delta_t: 0.0 }, 10.0, 40.0).unwrap();
        assert_eq!(r.delta_log_yield, 0.0);
        assert_eq!(r.yield_ratio, 1.0);
    }

    #[test]
    fn constant_coefficient_step() {
        let (b, g) = constant_curve(-0.001);
        let r = effect_on_curve(&b, &g, ScenarioKind::TemperatureStep { delta_t: 2.0 }, 10.0, 40.0).unwrap();
        assert!((r.delta_log_yield + 0.06).abs() < 1e-12);
        assert!((r.yield_ratio - 0.94176).abs() < 5e-6);
    }

    #[test]
    fn ramp_closed_form() {
        let (b, g) = constant_curve(0.01);
        let r = effect_on_curve(&b, &g, ScenarioKind::PrecipitationRamp { delta_p: -1.0 }, 0.0, 10.0).unwrap();
        assert!((r.delta_log_yield + 0.055).abs() < 1e-12);
        let short = effect_on_curve(&b, &g, ScenarioKind::PrecipitationRamp { delta_p: -1.0 }, 3.0, 4.5);
        assert!(matches!(short, Err(Error::Interval { .. })));
    }

    #[test]
    fn window_outside_domain() {
        let (b, g) = constant_curve(1.0);
        let r = effect_on_curve(&b, &g, ScenarioKind::TemperatureStep { delta_t: 1.0 }, 200.0, 230.0);
        assert!(matches!(r, Err(Error::Interval { .. })));
    }

    #[test]
    fn printed_rounding_check() {
        assert!(printed_pair_consistent(-0.0577, 0.9440, 4));
        assert!(!printed_pair_consistent(-0.0577, 0.9460, 4));
    }
}
