//! Synthetic panels with known generating coefficients.
//!
//! Weather curves are a seasonal mean plus random multiples of Legendre
//! modes; the response adds fixed effects, a polynomial trend, the exact
//! functional term and Gaussian noise.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use super::{write_weather_csv, write_yield_csv, SeasonWindow, WeatherMeta, YieldRecord};
use crate::basis::{ramp_weight, SeasonDomain};
use crate::config::{BootstrapConfig, PathsConfig, RunConfig, SeasonConfig, CONFIG_SCHEMA_VERSION};
use crate::effects::ScenarioKind;
use crate::error::{Error, Result};
use crate::estimator::{CovariateRole, ModelSpec, WeatherSource, YieldPanel};
use crate::fdata::{sample_times, window_series, Cadence, RawSeriesPanel, Window};
use crate::panel::PanelIndex;
use crate::quadrature::Quadrature;

/// Panels per day used for the generator's own integrals.
const FINE_PANELS_PER_DAY: f64 = 4.0;
const TRUTH_GRID_POINTS: usize = 201;

/// Closed-form true effect curve in `u = t / T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TrueGamma {
    Zero,
    /// `amplitude · 4u(1 − u)`.
    Bump { amplitude: f64 },
    /// `Σ_k coefficients_k · u^k`.
    Polynomial { coefficients: Vec<f64> },
    /// `amplitude · sin(2π·frequency·u + phase)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl TrueGamma {
    pub fn value(&self, t: f64, t_end: f64) -> f64 {
        let u = t / t_end;
        match self {
            TrueGamma::Zero => 0.0,
            TrueGamma::Bump { amplitude } => amplitude * 4.0 * u * (1.0 - u),
            TrueGamma::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * u + c)
            }
            TrueGamma::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * (2.0 * PI * frequency * u + phase).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCovariate {
    pub name: String,
    pub role: CovariateRole,
    pub cadence: Cadence,
    /// Mean curve `mean_level + mean_amplitude · sin(πt/T)`.
    pub mean_level: f64,
    #[serde(default)]
    pub mean_amplitude: f64,
    /// Standard deviation of the coefficient on Legendre mode `k`.
    pub mode_amplitudes: Vec<f64>,
    /// Independent noise added to every observed sample.
    #[serde(default)]
    pub sample_noise_sd: f64,
    /// Transform applied before the curve enters the response; the fitted
    /// model should use the same window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    pub gamma: TrueGamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthScenario {
    pub covariate: String,
    #[serde(flatten)]
    pub kind: ScenarioKind,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_provinces: usize,
    pub n_years: usize,
    #[serde(default = "default_first_year")]
    pub first_year: i32,
    pub season_start: String,
    pub season_end: String,
    /// Explicit fixed effects; drawn from `alpha_mean`, `alpha_sd` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default = "default_alpha_mean")]
    pub alpha_mean: f64,
    #[serde(default = "default_alpha_sd")]
    pub alpha_sd: f64,
    pub beta: Vec<f64>,
    pub noise_sd: f64,
    #[serde(default = "default_area")]
    pub area_ha: f64,
    pub seed: u64,
    pub covariates: Vec<SynthCovariate>,
    #[serde(default)]
    pub scenarios: Vec<SynthScenario>,
    /// When present, a ready-to-fit config is written next to the data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
}

fn default_first_year() -> i32 {
    1950
}

fn default_alpha_mean() -> f64 {
    8.0
}

fn default_alpha_sd() -> f64 {
    0.3
}

fn default_area() -> f64 {
    1000.0
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_provinces == 0 || self.n_years == 0 {
            return bad("synthetic panel needs at least one province and one year".into());
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return bad(format!("noise_sd must be nonnegative, got {}", self.noise_sd));
        }
        if !(self.area_ha > 0.0) {
            return bad(format!("area_ha must be positive, got {}", self.area_ha));
        }
        if let Some(a) = &self.alpha {
            if a.len() != self.n_provinces {
                return bad(format!("{} alphas for {} provinces", a.len(), self.n_provinces));
            }
        }
        if !(self.alpha_sd >= 0.0) {
            return bad("alpha_sd must be nonnegative".into());
        }
        SeasonWindow::parse(&self.season_start, &self.season_end)?;
        for c in &self.covariates {
            if c.mode_amplitudes.is_empty() {
                return bad(format!("covariate {} needs at least one weather mode", c.name));
            }
            if !(c.sample_noise_sd >= 0.0) {
                return bad(format!("covariate {} has negative sample noise", c.name));
            }
            if c.window.is_some() && c.cadence != Cadence::Daily {
                return bad(format!("covariate {}: windows need daily cadence", c.name));
            }
        }
        for s in &self.scenarios {
            if !self.covariates.iter().any(|c| c.name == s.covariate) {
                return bad(format!("scenario refers to unknown covariate {}", s.covariate));
            }
        }
        if let Some(m) = &self.model {
            m.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthCovariate {
    pub name: String,
    pub role: CovariateRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    pub gamma: TrueGamma,
    pub grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthScenario {
    pub covariate: String,
    #[serde(flatten)]
    pub kind: ScenarioKind,
    pub from: String,
    pub to: String,
    pub t0: f64,
    pub t1: f64,
    pub delta_log_yield: f64,
    pub yield_ratio: f64,
}

/// Every generating quantity, for comparison with fitted models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub seed: u64,
    pub season_length: f64,
    pub base_year: i32,
    pub provinces: Vec<String>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub noise_sd: f64,
    pub covariates: Vec<TruthCovariate>,
    pub scenarios: Vec<TruthScenario>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub yields: YieldPanel,
    pub records: Vec<YieldRecord>,
    pub weather: Vec<RawSeriesPanel>,
    pub metas: Vec<WeatherMeta>,
    /// Noise-free response without the error term.
    pub signal: DVector<f64>,
    pub truth: SynthTruth,
}

/// Legendre polynomial `P_k(x)`.
pub fn legendre(k: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return p0;
    }
    for n in 1..k {
        let nf = n as f64;
        let p2 = ((2.0 * nf + 1.0) * x * p1 - nf * p0) / (nf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Weather mode `k` at day `t` of a season of length `t_end`.
pub fn mode(k: usize, t: f64, t_end: f64) -> f64 {
    legendre(k, 2.0 * t / t_end - 1.0)
}

fn fine_quadrature(t0: f64, t1: f64, breaks: &[f64]) -> Quadrature {
    Quadrature::composite(t0, t1, breaks, 1.0 / FINE_PANELS_PER_DAY)
}

/// Piecewise-linear interpolant of `(times, values)`, constant beyond the ends.
fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len();
    if t <= times[0] {
        return values[0];
    }
    if t >= times[n - 1] {
        return values[n - 1];
    }
    let j = times.partition_point(|&s| s <= t) - 1;
    let w = (t - times[j]) / (times[j + 1] - times[j]);
    values[j] * (1.0 - w) + values[j + 1] * w
}

/// `∫ γ* · m_k` for each mode, where `m_k` is the mode as it enters the
/// response (windowed and interpolated when a window is configured).
fn mode_loadings(c: &SynthCovariate, t_end: f64, times: &[f64]) -> Vec<f64> {
    let q = match c.window {
        Some(_) => fine_quadrature(0.0, t_end, times),
        None => fine_quadrature(0.0, t_end, &[]),
    };
    let gamma: Vec<f64> = q.nodes.iter().map(|&t| c.gamma.value(t, t_end)).collect();
    (0..c.mode_amplitudes.len())
        .map(|k| {
            let m: Vec<f64> = match c.window {
                None => q.nodes.iter().map(|&t| mode(k, t, t_end)).collect(),
                Some(w) => {
                    let samples: Vec<f64> = times.iter().map(|&t| mode(k, t, t_end)).collect();
                    let transformed = window_series(&samples, w);
                    q.nodes.iter().map(|&t| interpolate(times, &transformed, t)).collect()
                }
            };
            q.weights
                .iter()
                .zip(&gamma)
                .zip(&m)
                .map(|((w, g), v)| w * g * v)
                .sum()
        })
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let season = SeasonWindow::parse(&spec.season_start, &spec.season_end)?;
    let t_end = season.length_days() as f64;
    let width = spec.n_provinces.to_string().len().max(3);
    let provinces: Vec<String> = (0..spec.n_provinces).map(|p| format!("P{:0width$}", p + 1)).collect();
    let index = PanelIndex::new(provinces.clone(), spec.first_year, spec.n_years)?;
    let n_rows = index.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let alpha: Vec<f64> = match &spec.alpha {
        Some(a) => a.clone(),
        None => (0..spec.n_provinces)
            .map(|_| spec.alpha_mean + spec.alpha_sd * normal(&mut rng))
            .collect(),
    };

    let mut signal = DVector::from_fn(n_rows, |row, _| {
        let (p, y) = index.cell(row);
        let t = y as f64;
        alpha[p]
            + spec
                .beta
                .iter()
                .enumerate()
                .map(|(l, b)| b * t.powi(l as i32 + 1))
                .sum::<f64>()
    });

    let mut weather = Vec::with_capacity(spec.covariates.len());
    let mut metas = Vec::with_capacity(spec.covariates.len());
    let mut truth_covariates = Vec::with_capacity(spec.covariates.len());
    let truth_grid = SeasonDomain::new(t_end, "truth")?.uniform_grid(TRUTH_GRID_POINTS);
    for c in &spec.covariates {
        let n_samples = match c.cadence {
            Cadence::Daily => season.length_days() as usize,
            Cadence::Hourly => 24 * season.length_days() as usize,
        };
        let times = sample_times(c.cadence, n_samples);
        let k_modes = c.mode_amplitudes.len();
        let z = DMatrix::from_fn(n_rows, k_modes, |_, _| normal(&mut rng));
        let mode_samples = DMatrix::from_fn(k_modes, n_samples, |k, r| mode(k, times[r], t_end));
        let mut values = DMatrix::zeros(n_rows, n_samples);
        for row in 0..n_rows {
            for r in 0..n_samples {
                let t = times[r];
                let mut v = c.mean_level + c.mean_amplitude * (PI * t / t_end).sin();
                for k in 0..k_modes {
                    v += c.mode_amplitudes[k] * z[(row, k)] * mode_samples[(k, r)];
                }
                if c.sample_noise_sd > 0.0 {
                    v += c.sample_noise_sd * normal(&mut rng);
                }
                values[(row, r)] = v;
            }
        }
        let loadings = mode_loadings(c, t_end, &times);
        let z_bar: Vec<f64> = (0..k_modes).map(|k| z.column(k).mean()).collect();
        for row in 0..n_rows {
            signal[row] += (0..k_modes)
                .map(|k| c.mode_amplitudes[k] * (z[(row, k)] - z_bar[k]) * loadings[k])
                .sum::<f64>();
        }
        let domain = SeasonDomain::new(t_end, c.name.clone())?;
        weather.push(RawSeriesPanel::new(c.name.clone(), c.cadence, domain, index.clone(), values)?);
        metas.push(WeatherMeta {
            cadence: c.cadence,
            n_samples,
            season_start: spec.season_start.clone(),
            season_end: spec.season_end.clone(),
            covariate: c.name.clone(),
        });
        truth_covariates.push(TruthCovariate {
            name: c.name.clone(),
            role: c.role,
            window: c.window,
            gamma: c.gamma.clone(),
            grid: truth_grid.clone(),
            gamma_grid: truth_grid.iter().map(|&t| c.gamma.value(t, t_end)).collect(),
        });
    }

    let mut records = Vec::with_capacity(n_rows);
    let mut y = Vec::with_capacity(n_rows);
    for row in 0..n_rows {
        let eps = if spec.noise_sd > 0.0 {
            spec.noise_sd * normal(&mut rng)
        } else {
            0.0
        };
        let (p, yo) = index.cell(row);
        let record = YieldRecord {
            province_id: provinces[p].clone(),
            year: spec.first_year + yo as i32,
            production_kg: (signal[row] + eps).exp() * spec.area_ha,
            area_ha: spec.area_ha,
        };
        y.push(record.log_yield());
        records.push(record);
    }

    let scenarios = spec
        .scenarios
        .iter()
        .map(|s| truth_scenario(spec, s, &season, t_end))
        .collect::<Result<Vec<_>>>()?;

    Ok(SynthOutput {
        yields: YieldPanel::new(index, DVector::from_vec(y))?,
        records,
        weather,
        metas,
        signal,
        truth: SynthTruth {
            seed: spec.seed,
            season_length: t_end,
            base_year: spec.first_year,
            provinces,
            alpha,
            beta: spec.beta.clone(),
            noise_sd: spec.noise_sd,
            covariates: truth_covariates,
            scenarios,
        },
    })
}

/// `Δ · ∫ w(t) γ*(t) dt` over the scenario window.
pub fn oracle_effect(gamma: &TrueGamma, t_end: f64, kind: ScenarioKind, t0: f64, t1: f64) -> f64 {
    let q = fine_quadrature(t0, t1, &[]);
    let (delta, ramp) = match kind {
        ScenarioKind::TemperatureStep { delta_t } => (delta_t, false),
        ScenarioKind::PrecipitationRamp { delta_p } => (delta_p, true),
    };
    let integral: f64 = q
        .nodes
        .iter()
        .zip(&q.weights)
        .map(|(&t, w)| {
            let wt = if ramp { ramp_weight(t, t0, t1) } else { 1.0 };
            w * wt * gamma.value(t, t_end)
        })
        .sum();
    delta * integral
}

fn truth_scenario(
    spec: &SynthSpec,
    s: &SynthScenario,
    season: &SeasonWindow,
    t_end: f64,
) -> Result<TruthScenario> {
    let c = spec.covariates.iter().find(|c| c.name == s.covariate).expect("validated");
    let (t0, t1) = season.interval(&s.from, &s.to)?;
    let delta_log_yield = oracle_effect(&c.gamma, t_end, s.kind, t0, t1);
    Ok(TruthScenario {
        covariate: s.covariate.clone(),
        kind: s.kind,
        from: s.from.clone(),
        to: s.to.clone(),
        t0,
        t1,
        delta_log_yield,
        yield_ratio: delta_log_yield.exp(),
    })
}

pub fn yields_file() -> &'static str {
    "yields.csv"
}

pub fn weather_files(covariate: &str) -> (String, String) {
    (format!("weather_{covariate}.csv"), format!("weather_{covariate}.json"))
}

/// Writes the corpus into `out`. A non-empty `out` is refused unless `force`.
pub fn write_synthetic(spec: &SynthSpec, output: &SynthOutput, out: &Path, force: bool) -> Result<Vec<PathBuf>> {
    if out.exists() {
        let non_empty = std::fs::read_dir(out)?.next().is_some();
        if non_empty && !force {
            return Err(Error::Config(format!(
                "output directory {} is not empty; pass --force to overwrite",
                out.display()
            )));
        }
    }
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let yields = out.join(yields_file());
    write_yield_csv(&yields, &output.records)?;
    written.push(yields);
    let mut sources = Vec::new();
    for (raw, meta) in output.weather.iter().zip(&output.metas) {
        let (data, side) = weather_files(raw.covariate());
        write_weather_csv(&out.join(&data), raw)?;
        meta.save(&out.join(&side))?;
        written.push(out.join(&data));
        written.push(out.join(&side));
        sources.push(WeatherSource {
            covariate: raw.covariate().to_string(),
            data,
            meta: side,
        });
    }
    let truth = out.join("truth.json");
    let mut text = serde_json::to_string_pretty(&output.truth)?;
    text.push('\n');
    std::fs::write(&truth, text)?;
    written.push(truth);
    if let Some(model) = &spec.model {
        let cfg = RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            crop: "synthetic".into(),
            season: SeasonConfig {
                start: spec.season_start.clone(),
                end: spec.season_end.clone(),
            },
            model: model.clone(),
            bootstrap: BootstrapConfig::default(),
            paths: PathsConfig {
                yields: yields_file().into(),
                weather: sources,
                output_dir: "fit".into(),
                model_file: PathsConfig::default_model_file(),
            },
        };
        let path = out.join("config.json");
        cfg.save(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Ready-made generator settings.
pub mod presets {
    use super::*;
    use crate::estimator::{BasisSpec, CovariateSpec, DEFAULT_QA_OFFSETS};

    fn model(delta: f64, covariates: Vec<CovariateSpec>) -> ModelSpec {
        ModelSpec {
            trend_degree: 2,
            delta,
            quantiles: vec![0.1, 0.5, 0.9],
            qa_offsets: DEFAULT_QA_OFFSETS.to_vec(),
            qa_include_center: false,
            covariates,
            base_year: None,
        }
    }

    fn covariate(name: &str, role: CovariateRole, smoothing: BasisSpec, window: Option<Window>) -> CovariateSpec {
        CovariateSpec {
            name: name.into(),
            role,
            smoothing,
            harmonic: BasisSpec::Bspline { nbasis: 7, order: 4 },
            window,
        }
    }

    /// Amplitudes giving every Legendre mode the same L² variance.
    fn equal_modes(k: usize, scale: f64) -> Vec<f64> {
        (0..k).map(|j| scale * ((2 * j + 1) as f64).sqrt()).collect()
    }

    /// 40 provinces × 60 years, one daily temperature covariate on a
    /// Feb–Jun season, smooth bump effect curve.
    pub fn default_spec() -> SynthSpec {
        SynthSpec {
            n_provinces: 40,
            n_years: 60,
            first_year: 1960,
            season_start: "02-01".into(),
            season_end: "06-30".into(),
            alpha: None,
            alpha_mean: 8.0,
            alpha_sd: 0.3,
            beta: vec![0.03, -0.0004],
            noise_sd: 0.03,
            area_ha: 1000.0,
            seed: 20240601,
            covariates: vec![SynthCovariate {
                name: "tmax".into(),
                role: CovariateRole::Temperature,
                cadence: Cadence::Daily,
                mean_level: 15.0,
                mean_amplitude: 10.0,
                mode_amplitudes: vec![1.5, 1.2, 1.0, 0.8],
                sample_noise_sd: 0.3,
                window: None,
                gamma: TrueGamma::Bump { amplitude: -0.0015 },
            }],
            scenarios: vec![SynthScenario {
                covariate: "tmax".into(),
                kind: ScenarioKind::TemperatureStep { delta_t: 1.0 },
                from: "04-01".into(),
                to: "04-30".into(),
            }],
            model: Some(model(
                0.99,
                vec![covariate(
                    "tmax",
                    CovariateRole::Temperature,
                    BasisSpec::Bspline { nbasis: 15, order: 4 },
                    None,
                )],
            )),
        }
    }

    /// 79 provinces × 72 years on an Apr–Oct season with five equally
    /// strong temperature modes.
    pub fn maize_shaped_spec() -> SynthSpec {
        SynthSpec {
            n_provinces: 79,
            n_years: 72,
            first_year: 1950,
            season_start: "04-01".into(),
            season_end: "10-31".into(),
            alpha: None,
            alpha_mean: 8.5,
            alpha_sd: 0.3,
            beta: vec![0.02, -0.0001],
            noise_sd: 0.08,
            area_ha: 1000.0,
            seed: 79,
            covariates: vec![SynthCovariate {
                name: "temp".into(),
                role: CovariateRole::Temperature,
                cadence: Cadence::Daily,
                mean_level: 18.0,
                mean_amplitude: 8.0,
                mode_amplitudes: equal_modes(5, 0.8),
                sample_noise_sd: 0.3,
                window: None,
                gamma: TrueGamma::Bump { amplitude: -0.0004 },
            }],
            scenarios: vec![SynthScenario {
                covariate: "temp".into(),
                kind: ScenarioKind::TemperatureStep { delta_t: 1.0 },
                from: "06-01".into(),
                to: "08-31".into(),
            }],
            model: Some(model(
                0.90,
                vec![covariate("temp", CovariateRole::Temperature, BasisSpec::Fourier { nbasis: 50 }, None)],
            )),
        }
    }

    /// 68 provinces × 72 years on a Feb–Jun season: four temperature modes
    /// and a precipitation rate with two modes, entered cumulatively.
    pub fn wheat_shaped_spec() -> SynthSpec {
        SynthSpec {
            n_provinces: 68,
            n_years: 72,
            first_year: 1950,
            season_start: "02-01".into(),
            season_end: "06-30".into(),
            alpha: None,
            alpha_mean: 8.0,
            alpha_sd: 0.3,
            beta: vec![0.015, -0.0001],
            noise_sd: 0.06,
            area_ha: 1000.0,
            seed: 68,
            covariates: vec![
                SynthCovariate {
                    name: "temp".into(),
                    role: CovariateRole::Temperature,
                    cadence: Cadence::Daily,
                    mean_level: 12.0,
                    mean_amplitude: 8.0,
                    mode_amplitudes: equal_modes(4, 0.8),
                    sample_noise_sd: 0.3,
                    window: None,
                    gamma: TrueGamma::Bump { amplitude: -0.0005 },
                },
                SynthCovariate {
                    name: "prcp".into(),
                    role: CovariateRole::Precipitation,
                    cadence: Cadence::Daily,
                    mean_level: 2.0,
                    mean_amplitude: 0.5,
                    mode_amplitudes: vec![0.5, 1.5],
                    sample_noise_sd: 0.0,
                    window: Some(Window::Full),
                    gamma: TrueGamma::Bump { amplitude: 0.00002 },
                },
            ],
            scenarios: vec![SynthScenario {
                covariate: "prcp".into(),
                kind: ScenarioKind::PrecipitationRamp { delta_p: -100.0 },
                from: "04-01".into(),
                to: "05-31".into(),
            }],
            model: Some(model(
                0.90,
                vec![
                    covariate("temp", CovariateRole::Temperature, BasisSpec::Fourier { nbasis: 50 }, None),
                    covariate(
                        "prcp",
                        CovariateRole::Precipitation,
                        BasisSpec::Polygonal { nodes: None },
                        Some(Window::Full),
                    ),
                ],
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_spec() -> SynthSpec {
        SynthSpec {
            n_provinces: 4,
            n_years: 5,
            first_year: 2000,
            season_start: "02-01".into(),
            season_end: "03-02".into(),
            alpha: None,
            alpha_mean: 8.0,
            alpha_sd: 0.3,
            beta: vec![0.01],
            noise_sd: 0.05,
            area_ha: 1000.0,
            seed: 11,
            covariates: vec![SynthCovariate {
                name: "tmax".into(),
                role: CovariateRole::Temperature,
                cadence: Cadence::Daily,
                mean_level: 15.0,
                mean_amplitude: 5.0,
                mode_amplitudes: vec![1.0, 0.5],
                sample_noise_sd: 0.2,
                window: None,
                gamma: TrueGamma::Bump { amplitude: -0.001 },
            }],
            scenarios: vec![],
            model: None,
        }
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(0, 0.3), 1.0);
        assert_eq!(legendre(1, 0.3), 0.3);
        assert!((legendre(2, 0.3) - (3.0 * 0.09 - 1.0) / 2.0).abs() < 1e-15);
        assert!((legendre(3, 0.5) - (5.0 * 0.125 - 1.5) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_synthetic(&small_spec()).unwrap();
        let b = generate_synthetic(&small_spec()).unwrap();
        assert_eq!(a.yields, b.yields);
        assert_eq!(a.weather, b.weather);
        let mut other = small_spec();
        other.seed = 12;
        assert_ne!(generate_synthetic(&other).unwrap().yields, a.yields);
    }

    #[test]
    fn loadings_match_closed_form() {
        // ∫_0^T 4u(1-u) du = 2T/3 against the constant mode.
        let c = &small_spec().covariates[0];
        let t_end = 30.0;
        let times = sample_times(Cadence::Daily, 30);
        let l = mode_loadings(c, t_end, &times);
        assert!((l[0] - (-0.001 * 2.0 * t_end / 3.0)).abs() < 1e-15);
        assert!(l[1].abs() < 1e-15);
    }

    #[test]
    fn oracle_of_constant_ramp() {
        let g = TrueGamma::Polynomial { coefficients: vec![0.01] };
        let d = oracle_effect(&g, 150.0, ScenarioKind::PrecipitationRamp { delta_p: -1.0 }, 0.0, 10.0);
        assert!((d + 0.055).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = small_spec();
        s.noise_sd = -1.0;
        assert!(generate_synthetic(&s).is_err());
        let mut s = small_spec();
        s.alpha = Some(vec![1.0]);
        assert!(generate_synthetic(&s).is_err());
    }
}
