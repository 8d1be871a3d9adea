//! Curve tables and static SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fdareg::bands::{band_file_name, read_band_csv};
use fdareg::estimator::{EstimatorTag, FitResult};
use fdareg::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct ReportSummary {
    pub written: Vec<PathBuf>,
    pub missing: Vec<PathBuf>,
}

struct Series {
    tag: EstimatorTag,
    rows: Vec<[f64; 4]>,
}

pub fn write_report(model: &FitResult, bands: &Path, out: &Path) -> Result<ReportSummary> {
    if !bands.is_dir() {
        return Err(Error::MissingFile {
            path: bands.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "bands directory not found"),
        });
    }
    let mut missing = Vec::new();
    let mut per_covariate = Vec::new();
    for c in &model.covariates {
        let mut series = Vec::new();
        for e in &model.estimates {
            let path = bands.join(band_file_name(&c.name, e.tag));
            if path.is_file() {
                series.push(Series {
                    tag: e.tag,
                    rows: read_band_csv(&path)?,
                });
            } else {
                missing.push(path);
            }
        }
        if !series.is_empty() {
            per_covariate.push((c.name.clone(), c.harmonic_basis.domain().t_end(), series));
        }
    }
    if per_covariate.is_empty() {
        return Err(Error::MissingFile {
            path: bands.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no band files for this model"),
        });
    }
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for (name, t_end, series) in &per_covariate {
        let grid: Vec<f64> = series[0].rows.iter().map(|r| r[0]).collect();
        for s in series {
            if s.rows.len() != grid.len() || s.rows.iter().zip(&grid).any(|(r, t)| r[0] != *t) {
                return Err(Error::Format(format!(
                    "band grids for covariate {name} differ between estimators"
                )));
            }
        }
        let csv_path = out.join(format!("curves_{name}.csv"));
        write_table(&csv_path, &grid, series)?;
        written.push(csv_path);
        let svg_path = out.join(format!("curves_{name}.svg"));
        std::fs::write(&svg_path, render_svg(name, *t_end, series))?;
        written.push(svg_path);
    }
    Ok(ReportSummary { written, missing })
}

fn write_table(path: &Path, grid: &[f64], series: &[Series]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    for s in series {
        for col in ["point", "lower", "upper"] {
            header.push(format!("{}_{col}", s.tag));
        }
    }
    w.write_record(&header)?;
    for (i, t) in grid.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        for s in series {
            rec.extend(s.rows[i][1..].iter().map(|v| v.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 0.01 && v.abs() < 1000.0 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn render_svg(name: &str, t_end: f64, series: &[Series]) -> String {
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for s in series {
        for r in &s.rows {
            for v in &r[1..] {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
    }
    if hi - lo <= 0.0 {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |t: f64| MARGIN_LEFT + plot_w * t / t_end;
    let y = |v: f64| MARGIN_TOP + plot_h * (hi - v) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" font-size="15" text-anchor="middle">Effect curve: {name}</text>"#,
        MARGIN_LEFT + plot_w / 2.0
    );
    for k in 0..=5 {
        let t = t_end * k as f64 / 5.0;
        let px = x(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + plot_h + 18.0,
            tick_label(t)
        );
    }
    for k in 0..=5 {
        let v = lo + (hi - lo) * k as f64 / 5.0;
        let py = y(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/>"##,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            py + 4.0,
            tick_label(v)
        );
    }
    if lo < 0.0 && hi > 0.0 {
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555555" stroke-dasharray="4 3"/>"##,
            y(0.0),
            MARGIN_LEFT + plot_w,
            y(0.0)
        );
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_LEFT:.2}" y="{MARGIN_TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333333"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">day of season</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );

    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut band = String::new();
        for r in &s.rows {
            let _ = write!(band, "{:.2},{:.2} ", x(r[0]), y(r[3]));
        }
        for r in s.rows.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", x(r[0]), y(r[2]));
        }
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{colour}" fill-opacity="0.15" stroke="none"/>"#,
            band.trim_end()
        );
    }
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut line = String::new();
        for r in &s.rows {
            let _ = write!(line, "{:.2},{:.2} ", x(r[0]), y(r[1]));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.8"/>"#,
            line.trim_end()
        );
        let ly = MARGIN_TOP + 14.0 + 20.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 16.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="3"/>"#,
            lx + 22.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            s.tag
        );
    }
    svg.push_str("</svg>\n");
    svg
}
