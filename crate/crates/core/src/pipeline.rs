//! End-to-end operations on files: fit from a config, bootstrap bands for a
//! saved model.

use std::path::{Path, PathBuf};

use crate::bands::{band_file_name, bootstrap_bands, write_band_csv, BandConfig, BandResult};
use crate::config::{LoadedConfig, RunConfig};
use crate::error::{Error, Result};
use crate::estimator::{
    fit_model, smooth_covariates, DataSources, EstimatorTag, FitResult, ModelFit, WeatherSource,
    YieldPanel,
};
use crate::fdata::{FunctionalPanel, RawSeriesPanel};
use crate::ingest::{load_weather_panel, load_yield_panel, WeatherMeta};

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub yields: YieldPanel,
    pub weather: Vec<RawSeriesPanel>,
    pub warnings: Vec<String>,
    pub sources: DataSources,
}

fn absolute(p: &Path) -> Result<String> {
    let abs = std::fs::canonicalize(p).map_err(|e| Error::MissingFile {
        path: p.display().to_string(),
        source: e,
    })?;
    Ok(abs.display().to_string())
}

/// Loads yields and weather from explicit paths.
pub fn load_data(yields: &Path, weather: &[(PathBuf, PathBuf)]) -> Result<LoadedData> {
    let loaded = load_yield_panel(yields)?;
    let mut raws = Vec::with_capacity(weather.len());
    let mut sources = Vec::with_capacity(weather.len());
    for (data, meta_path) in weather {
        let meta = WeatherMeta::load(meta_path)?;
        raws.push(load_weather_panel(data, &meta, loaded.panel.index())?);
        sources.push(WeatherSource {
            covariate: meta.covariate.clone(),
            data: absolute(data)?,
            meta: absolute(meta_path)?,
        });
    }
    Ok(LoadedData {
        yields: loaded.panel,
        weather: raws,
        warnings: loaded.warnings,
        sources: DataSources {
            yields: absolute(yields)?,
            weather: sources,
        },
    })
}

pub fn load_config_data(cfg: &LoadedConfig) -> Result<LoadedData> {
    let paths = &cfg.config.paths;
    let weather: Vec<(PathBuf, PathBuf)> = paths
        .weather
        .iter()
        .map(|w| (cfg.resolve(&w.data), cfg.resolve(&w.meta)))
        .collect();
    load_data(&cfg.resolve(&paths.yields), &weather)
}

/// Result of fitting from a config file.
#[derive(Debug, Clone)]
pub struct ConfigFit {
    pub fit: ModelFit,
    pub model_path: PathBuf,
    pub warnings: Vec<String>,
}

/// Loads a config, fits every configured estimator and writes the model.
pub fn fit_config_file(path: &Path) -> Result<ConfigFit> {
    let cfg = RunConfig::load(path)?;
    let data = load_config_data(&cfg)?;
    let spec = &cfg.config.model;
    let mut fit = fit_model(spec, &data.yields, &data.weather, &spec.estimator_tags())?;
    fit.result.sources = Some(data.sources);
    fit.result.season = Some(cfg.config.season.clone());
    let model_path = cfg.model_path();
    if let Some(dir) = model_path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    fit.result.save(&model_path)?;
    Ok(ConfigFit {
        fit,
        model_path,
        warnings: data.warnings,
    })
}

/// Reloads and re-smooths the data a model was fitted on.
pub fn reload_model_data(model: &FitResult) -> Result<(YieldPanel, Vec<FunctionalPanel>)> {
    let sources = model.sources.as_ref().ok_or_else(|| {
        Error::Config("model does not record its data sources; refit from a config".into())
    })?;
    let weather: Vec<(PathBuf, PathBuf)> = sources
        .weather
        .iter()
        .map(|w| (PathBuf::from(&w.data), PathBuf::from(&w.meta)))
        .collect();
    let data = load_data(Path::new(&sources.yields), &weather)?;
    if data.yields.index() != &model.index {
        return Err(Error::Alignment(
            "data on disk no longer matches the panel the model was fitted on".into(),
        ));
    }
    let panels = smooth_covariates(&model.spec, &data.weather)?;
    Ok((data.yields, panels))
}

/// Bootstraps bands for each of `tags` (all model estimators when empty).
pub fn model_bands(model: &FitResult, tags: &[EstimatorTag], cfg: &BandConfig) -> Result<Vec<BandResult>> {
    let (yields, panels) = reload_model_data(model)?;
    let tags: Vec<EstimatorTag> = if tags.is_empty() {
        model.estimates.iter().map(|e| e.tag).collect()
    } else {
        for &t in tags {
            model.estimate(t)?;
        }
        tags.to_vec()
    };
    let mut out = Vec::new();
    for tag in tags {
        out.extend(bootstrap_bands(&model.spec, &yields, &panels, tag, cfg)?);
    }
    Ok(out)
}

/// Writes one CSV per band into `dir`, returning the paths.
pub fn write_bands(dir: &Path, bands: &[BandResult]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    bands
        .iter()
        .map(|b| {
            let p = dir.join(band_file_name(&b.covariate, b.estimator));
            write_band_csv(&p, b)?;
            Ok(p)
        })
        .collect()
}
