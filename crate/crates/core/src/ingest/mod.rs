//! CSV ingestion of yield and weather panels, and a synthetic generator.

pub mod calendar;
pub mod synth;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::basis::SeasonDomain;
use crate::error::{Error, Result};
use crate::estimator::YieldPanel;
use crate::fdata::{Cadence, RawSeriesPanel};
use crate::panel::PanelIndex;

pub use calendar::{MonthDay, SeasonWindow};
pub use synth::{generate_synthetic, write_synthetic, SynthOutput, SynthSpec, SynthTruth};

pub const YIELD_HEADER: [&str; 4] = ["province_id", "year", "production_kg", "area_ha"];
pub const WEATHER_HEADER: [&str; 4] = ["province_id", "year", "t_index", "value"];

#[derive(Debug, Clone, PartialEq)]
pub struct YieldRecord {
    pub province_id: String,
    pub year: i32,
    pub production_kg: f64,
    pub area_ha: f64,
}

impl YieldRecord {
    pub fn log_yield(&self) -> f64 {
        (self.production_kg / self.area_ha).ln()
    }
}

/// Balanced yields plus notes about provinces that were dropped.
#[derive(Debug, Clone)]
pub struct LoadedYields {
    pub panel: YieldPanel,
    pub warnings: Vec<String>,
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::MissingFile {
        path: path.display().to_string(),
        source: e,
    })
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = found.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Format(format!(
            "{}: header must be {}, found {}",
            path.display(),
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, name: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| {
        Error::Format(format!(
            "{}:{line}: cannot parse {name} from {raw:?}",
            path.display()
        ))
    })
}

fn record_error(path: &Path, line: u64, message: String) -> Error {
    Error::Record {
        path: path.display().to_string(),
        line,
        message,
    }
}

pub fn read_yield_records(path: &Path) -> Result<Vec<YieldRecord>> {
    let mut r = csv::ReaderBuilder::new().from_reader(open(path)?);
    check_header(path, r.headers()?, &YIELD_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Format(format!("{}:{line}: {e}", path.display())))?;
        if rec.len() != 4 {
            return Err(Error::Format(format!(
                "{}:{line}: expected 4 fields, found {}",
                path.display(),
                rec.len()
            )));
        }
        let province_id = rec[0].trim().to_string();
        if province_id.is_empty() {
            return Err(record_error(path, line, "empty province_id".into()));
        }
        let year: i32 = parse_field(path, line, "year", &rec[1])?;
        let production_kg: f64 = parse_field(path, line, "production_kg", &rec[2])?;
        let area_ha: f64 = parse_field(path, line, "area_ha", &rec[3])?;
        if !(area_ha > 0.0) || !area_ha.is_finite() {
            return Err(record_error(path, line, format!("area_ha must be positive, got {area_ha}")));
        }
        if !(production_kg > 0.0) || !production_kg.is_finite() {
            return Err(record_error(
                path,
                line,
                format!("production_kg must be positive for a log yield, got {production_kg}"),
            ));
        }
        out.push(YieldRecord {
            province_id,
            year,
            production_kg,
            area_ha,
        });
    }
    Ok(out)
}

/// Balances records: provinces missing any year in the observed range are
/// dropped. Provinces are ordered by identifier.
pub fn balance_yields(records: &[YieldRecord], source: &str) -> Result<LoadedYields> {
    if records.is_empty() {
        return Err(Error::EmptyPanel(format!("{source}: no yield records")));
    }
    let mut by_province: BTreeMap<&str, BTreeMap<i32, f64>> = BTreeMap::new();
    for r in records {
        let years = by_province.entry(&r.province_id).or_default();
        if years.insert(r.year, r.log_yield()).is_some() {
            return Err(Error::Format(format!(
                "{source}: duplicate record for province {} year {}",
                r.province_id, r.year
            )));
        }
    }
    let first = records.iter().map(|r| r.year).min().unwrap();
    let last = records.iter().map(|r| r.year).max().unwrap();
    let n_years = (last - first + 1) as usize;
    let mut warnings = Vec::new();
    let mut provinces = Vec::new();
    let mut y = Vec::new();
    for (id, years) in &by_province {
        if years.len() == n_years {
            provinces.push(id.to_string());
            y.extend(years.values().copied());
        } else {
            let missing: Vec<String> = (first..=last)
                .filter(|yr| !years.contains_key(yr))
                .map(|yr| yr.to_string())
                .collect();
            warnings.push(format!(
                "province {id} dropped: missing years {}",
                missing.join(", ")
            ));
        }
    }
    if provinces.is_empty() {
        return Err(Error::EmptyPanel(format!(
            "{source}: no province has complete data for {first}..{last}"
        )));
    }
    let index = PanelIndex::new(provinces, first, n_years)?;
    let panel = YieldPanel::new(index, DVector::from_vec(y))?;
    Ok(LoadedYields { panel, warnings })
}

pub fn load_yield_panel(path: &Path) -> Result<LoadedYields> {
    let records = read_yield_records(path)?;
    balance_yields(&records, &path.display().to_string())
}

pub fn write_yield_csv(path: &Path, records: &[YieldRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(YIELD_HEADER)?;
    for r in records {
        w.write_record([
            r.province_id.clone(),
            r.year.to_string(),
            r.production_kg.to_string(),
            r.area_ha.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar describing one weather CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherMeta {
    pub cadence: Cadence,
    pub n_samples: usize,
    pub season_start: String,
    pub season_end: String,
    pub covariate: String,
}

impl WeatherMeta {
    pub fn season(&self) -> Result<SeasonWindow> {
        SeasonWindow::parse(&self.season_start, &self.season_end)
    }

    pub fn domain(&self) -> Result<SeasonDomain> {
        let season = self.season()?;
        SeasonDomain::new(season.length_days() as f64, self.covariate.clone())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::MissingFile {
            path: path.display().to_string(),
            source: e,
        })?;
        let meta: WeatherMeta = serde_json::from_str(&text)?;
        if meta.n_samples == 0 {
            return Err(Error::Format(format!("{}: n_samples must be positive", path.display())));
        }
        Ok(meta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Loads a long-format weather CSV into a dense panel aligned with `index`.
/// Rows for provinces or years outside the index are ignored.
pub fn load_weather_panel(path: &Path, meta: &WeatherMeta, index: &PanelIndex) -> Result<RawSeriesPanel> {
    let domain = meta.domain()?;
    let n = meta.n_samples;
    let mut r = csv::ReaderBuilder::new().from_reader(open(path)?);
    check_header(path, r.headers()?, &WEATHER_HEADER)?;
    let positions: BTreeMap<&str, usize> = index
        .provinces()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let first = index.first_year();
    let n_years = index.n_years();
    let mut values = DMatrix::zeros(index.n_rows(), n);
    let mut seen = vec![false; index.n_rows() * n];
    let mut rec = csv::StringRecord::new();
    let mut line = 1u64;
    while r.read_record(&mut rec)? {
        line += 1;
        if rec.len() != 4 {
            return Err(Error::Format(format!(
                "{}:{line}: expected 4 fields, found {}",
                path.display(),
                rec.len()
            )));
        }
        let Some(&p) = positions.get(rec[0].trim()) else {
            continue;
        };
        let year: i32 = parse_field(path, line, "year", &rec[1])?;
        if year < first || year >= first + n_years as i32 {
            continue;
        }
        let t: i64 = parse_field(path, line, "t_index", &rec[2])?;
        let v: f64 = parse_field(path, line, "value", &rec[3])?;
        if !v.is_finite() {
            return Err(record_error(path, line, format!("non-finite value {v}")));
        }
        let integrity = |message: String| Error::Integrity {
            province: rec[0].trim().to_string(),
            year,
            index: t,
            message,
        };
        if t < 0 || t as usize >= n {
            return Err(integrity(format!("t_index outside 0..{n}")));
        }
        let row = index.row(p, (year - first) as usize);
        let slot = row * n + t as usize;
        if seen[slot] {
            return Err(integrity("duplicate t_index".into()));
        }
        seen[slot] = true;
        values[(row, t as usize)] = v;
    }
    if let Some(slot) = seen.iter().position(|s| !s) {
        let (row, t) = (slot / n, slot % n);
        let (p, y) = index.cell(row);
        return Err(Error::Integrity {
            province: index.provinces()[p].clone(),
            year: first + y as i32,
            index: t as i64,
            message: "missing sample".into(),
        });
    }
    RawSeriesPanel::new(meta.covariate.clone(), meta.cadence, domain, index.clone(), values)
}

pub fn write_weather_csv(path: &Path, raw: &RawSeriesPanel) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(WEATHER_HEADER)?;
    let index = raw.index();
    for row in 0..index.n_rows() {
        let (p, y) = index.cell(row);
        let province = &index.provinces()[p];
        let year = (index.first_year() + y as i32).to_string();
        for t in 0..raw.n_samples() {
            w.write_record([
                province.as_str(),
                year.as_str(),
                t.to_string().as_str(),
                raw.values()[(row, t)].to_string().as_str(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn log_yield_of_simple_panel() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "y.csv",
            "province_id,year,production_kg,area_ha\nA,2000,4000,1\nA,2001,4000,1\nB,2000,4000,1\nB,2001,4000,1\n",
        );
        let loaded = load_yield_panel(&p).unwrap();
        assert!(loaded.warnings.is_empty());
        assert_eq!(loaded.panel.y().len(), 4);
        assert!((loaded.panel.y()[0] - 8.294049640102028).abs() < 1e-12);
    }

    #[test]
    fn incomplete_province_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "y.csv",
            "province_id,year,production_kg,area_ha\nA,2000,1,1\nA,2001,1,1\nB,2000,1,1\n",
        );
        let loaded = load_yield_panel(&p).unwrap();
        assert_eq!(loaded.panel.index().provinces(), ["A".to_string()]);
        assert_eq!(loaded.warnings.len(), 1);
        assert!(loaded.warnings[0].contains("2001"));
    }

    #[test]
    fn bad_area_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "y.csv",
            "province_id,year,production_kg,area_ha\nA,2000,1,1\nA,2001,1,0\n",
        );
        match load_yield_panel(&p) {
            Err(Error::Record { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decimal_comma_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "y.csv",
            "province_id,year,production_kg,area_ha\nA,2000,\"1,5\",1\n",
        );
        assert!(matches!(load_yield_panel(&p), Err(Error::Format(_))));
    }

    #[test]
    fn everything_dropped_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "y.csv",
            "province_id,year,production_kg,area_ha\nA,2000,1,1\nB,2001,1,1\n",
        );
        assert!(matches!(load_yield_panel(&p), Err(Error::EmptyPanel(_))));
    }

    fn meta(n: usize) -> WeatherMeta {
        WeatherMeta {
            cadence: Cadence::Daily,
            n_samples: n,
            season_start: "02-01".into(),
            season_end: "02-03".into(),
            covariate: "prcp".into(),
        }
    }

    #[test]
    fn weather_gaps_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let index = PanelIndex::new(vec!["A".into()], 2000, 1).unwrap();
        let ok = write(
            dir.path(),
            "ok.csv",
            "province_id,year,t_index,value\nA,2000,2,3.0\nA,2000,0,1.0\nA,2000,1,2.0\nZ,2000,0,9\n",
        );
        let raw = load_weather_panel(&ok, &meta(3), &index).unwrap();
        assert_eq!(raw.series(0), vec![1.0, 2.0, 3.0]);

        let gap = write(dir.path(), "gap.csv", "province_id,year,t_index,value\nA,2000,0,1\nA,2000,2,1\n");
        match load_weather_panel(&gap, &meta(3), &index) {
            Err(Error::Integrity { index, year, .. }) => assert_eq!((index, year), (1, 2000)),
            other => panic!("{other:?}"),
        }
        let dup = write(
            dir.path(),
            "dup.csv",
            "province_id,year,t_index,value\nA,2000,0,1\nA,2000,0,1\nA,2000,1,1\nA,2000,2,1\n",
        );
        assert!(matches!(load_weather_panel(&dup, &meta(3), &index), Err(Error::Integrity { index: 0, .. })));
    }

    #[test]
    fn missing_cell_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let index = PanelIndex::new(vec!["A".into(), "B".into()], 2000, 1).unwrap();
        let p = write(dir.path(), "w.csv", "province_id,year,t_index,value\nA,2000,0,1\nA,2000,1,1\nA,2000,2,1\n");
        match load_weather_panel(&p, &meta(3), &index) {
            Err(Error::Integrity { province, .. }) => assert_eq!(province, "B"),
            other => panic!("{other:?}"),
        }
    }
}
