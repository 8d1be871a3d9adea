//! Province-block bootstrap bands for the estimated effect curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::{fit_smoothed, reconstruct_gamma, EstimatorTag, ModelSpec, YieldPanel};
use crate::fdata::FunctionalPanel;

pub const DEFAULT_REPLICAS: usize = 500;
pub const DEFAULT_GRID_POINTS: usize = 201;
/// Largest tolerated share of failed replicas.
pub const MAX_FAILURE_SHARE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandConfig {
    pub n_replicas: usize,
    pub level: f64,
    pub seed: u64,
    pub grid_points: usize,
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig {
            n_replicas: DEFAULT_REPLICAS,
            level: 0.95,
            seed: 0,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

impl BandConfig {
    fn validate(&self) -> Result<()> {
        if self.n_replicas < 2 {
            return Err(Error::Config(format!(
                "at least 2 bootstrap replicas required, got {}",
                self.n_replicas
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("band level must lie in (0, 1), got {}", self.level)));
        }
        if self.grid_points < 2 {
            return Err(Error::Config("band grid needs at least 2 points".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandResult {
    pub covariate: String,
    pub estimator: EstimatorTag,
    pub grid: Vec<f64>,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub n_replicas: usize,
    pub n_failed: usize,
    pub level: f64,
    pub seed: u64,
}

/// Replica curves for every covariate, in replica-index order.
#[derive(Debug, Clone)]
pub struct ReplicaSet {
    pub grid: Vec<f64>,
    /// `curves[k][r]` is the curve of covariate `k` in successful replica `r`.
    pub curves: Vec<Vec<Vec<f64>>>,
    pub point: Vec<Vec<f64>>,
    pub n_failed: usize,
}

/// Provinces drawn with replacement for replica `replica`.
pub fn draw_provinces(seed: u64, replica: u64, n_provinces: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    (0..n_provinces).map(|_| rng.random_range(0..n_provinces)).collect()
}

/// Fit on a resampled panel and evaluate each covariate's curve on `grid`.
pub fn replica_curves(
    spec: &ModelSpec,
    yields: &YieldPanel,
    panels: &[FunctionalPanel],
    tag: EstimatorTag,
    draws: &[usize],
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let y = yields.resample_provinces(draws);
    let p: Vec<FunctionalPanel> = panels
        .iter()
        .map(|f| f.resample_provinces(draws))
        .collect::<Result<_>>()?;
    curves_for(spec, &y, &p, tag, grid)
}

fn curves_for(
    spec: &ModelSpec,
    yields: &YieldPanel,
    panels: &[FunctionalPanel],
    tag: EstimatorTag,
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let fit = fit_smoothed(spec, yields, panels, &[tag])?;
    spec.covariates
        .iter()
        .map(|c| reconstruct_gamma(&fit.result, &c.name, tag, grid))
        .collect()
}

/// Runs the bootstrap. `panels` are the uncentered smoothed covariates in
/// spec order.
pub fn bootstrap_replicas(
    spec: &ModelSpec,
    yields: &YieldPanel,
    panels: &[FunctionalPanel],
    tag: EstimatorTag,
    cfg: &BandConfig,
) -> Result<ReplicaSet> {
    cfg.validate()?;
    let domain = panels
        .first()
        .ok_or_else(|| Error::Config("bands need at least one covariate".into()))?
        .basis()
        .domain()
        .clone();
    let grid = domain.uniform_grid(cfg.grid_points);
    let point = curves_for(spec, yields, panels, tag, &grid)?;
    let m = yields.index().n_provinces();
    let outcomes: Vec<Result<Vec<Vec<f64>>>> = (0..cfg.n_replicas)
        .into_par_iter()
        .map(|r| {
            let draws = draw_provinces(cfg.seed, r as u64, m);
            replica_curves(spec, yields, panels, tag, &draws, &grid)
        })
        .collect();
    let mut curves = vec![Vec::with_capacity(cfg.n_replicas); spec.covariates.len()];
    let mut n_failed = 0;
    for outcome in outcomes {
        match outcome {
            Ok(cs) => {
                for (k, c) in cs.into_iter().enumerate() {
                    curves[k].push(c);
                }
            }
            Err(_) => n_failed += 1,
        }
    }
    if n_failed as f64 > MAX_FAILURE_SHARE * cfg.n_replicas as f64
        || cfg.n_replicas - n_failed < 2
    {
        return Err(Error::Bootstrap {
            failed: n_failed,
            total: cfg.n_replicas,
        });
    }
    Ok(ReplicaSet {
        grid,
        curves,
        point,
        n_failed,
    })
}

pub fn bootstrap_bands(
    spec: &ModelSpec,
    yields: &YieldPanel,
    panels: &[FunctionalPanel],
    tag: EstimatorTag,
    cfg: &BandConfig,
) -> Result<Vec<BandResult>> {
    let set = bootstrap_replicas(spec, yields, panels, tag, cfg)?;
    Ok(bands_from_replicas(spec, &set, tag, cfg, cfg.level))
}

/// Percentile bands at `level` from an existing replica set.
pub fn bands_from_replicas(
    spec: &ModelSpec,
    set: &ReplicaSet,
    tag: EstimatorTag,
    cfg: &BandConfig,
    level: f64,
) -> Vec<BandResult> {
    spec.covariates
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let (lower, upper) = percentile_band(&set.curves[k], level);
            BandResult {
                covariate: c.name.clone(),
                estimator: tag,
                grid: set.grid.clone(),
                point: set.point[k].clone(),
                lower,
                upper,
                n_replicas: cfg.n_replicas,
                n_failed: set.n_failed,
                level,
                seed: cfg.seed,
            }
        })
        .collect()
}

/// Pointwise quantiles at `(1 - level)/2` and `(1 + level)/2`.
pub fn percentile_band(curves: &[Vec<f64>], level: f64) -> (Vec<f64>, Vec<f64>) {
    let n_grid = curves.first().map_or(0, |c| c.len());
    let lo_p = (1.0 - level) / 2.0;
    let hi_p = (1.0 + level) / 2.0;
    let mut lower = Vec::with_capacity(n_grid);
    let mut upper = Vec::with_capacity(n_grid);
    let mut column = Vec::with_capacity(curves.len());
    for g in 0..n_grid {
        column.clear();
        column.extend(curves.iter().map(|c| c[g]));
        column.sort_by(|a, b| a.total_cmp(b));
        lower.push(quantile_sorted(&column, lo_p));
        upper.push(quantile_sorted(&column, hi_p));
    }
    (lower, upper)
}

/// Linear-interpolation sample quantile (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// File name used for one band CSV.
pub fn band_file_name(covariate: &str, tag: EstimatorTag) -> String {
    format!("band_{covariate}_{}.csv", tag.file_stem())
}

pub fn write_band_csv(path: &Path, band: &BandResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "point", "lower", "upper"])?;
    for i in 0..band.grid.len() {
        w.write_record([
            band.grid[i].to_string(),
            band.point[i].to_string(),
            band.lower[i].to_string(),
            band.upper[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of a band CSV as `(t, point, lower, upper)`.
pub fn read_band_csv(path: &Path) -> Result<Vec<[f64; 4]>> {
    let file = std::fs::File::open(path).map_err(|e| Error::MissingFile {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "point", "lower", "upper"] {
        return Err(Error::Format(format!(
            "{}: band header must be t,point,lower,upper",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let mut row = [0.0; 4];
        if rec.len() != 4 {
            return Err(record_error(path, line, "expected 4 fields"));
        }
        for (j, field) in rec.iter().enumerate() {
            row[j] = field
                .trim()
                .parse()
                .map_err(|_| record_error(path, line, &format!("bad number {field:?}")))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

fn record_error(path: &Path, line: u64, message: &str) -> Error {
    Error::Record {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}
