mod report;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use fdareg::bands::{BandConfig, BandResult, DEFAULT_GRID_POINTS, DEFAULT_REPLICAS};
use fdareg::effects::{scenario_effect, ScenarioKind, ScenarioResult, ScenarioSpec};
use fdareg::estimator::{EstimatorTag, FitResult};
use fdareg::ingest::synth::presets;
use fdareg::ingest::{generate_synthetic, write_synthetic, SeasonWindow, SynthSpec};
use fdareg::pipeline::{fit_config_file, model_bands, write_bands};
use fdareg::{Error, ErrorClass, Result};

#[derive(Parser)]
#[command(name = "fdareg", version, about = "Functional weather regression for crop-yield panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every configured estimator and write the model document.
    Fit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Bootstrap pointwise confidence bands for a fitted model.
    Bands(BandsArgs),
    /// Yield effect of a temperature step or precipitation ramp.
    Effect(EffectArgs),
    /// Curve tables and SVG plots from a model and its bands.
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        bands: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with known truth.
    Simulate {
        /// Generator spec (JSON).
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        spec: Option<PathBuf>,
        /// Built-in generator spec: default, maize or wheat.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args)]
struct BandsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_REPLICAS)]
    replicas: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict to these estimators (repeatable); all by default.
    #[arg(long = "estimator")]
    estimators: Vec<String>,
    /// Output directory; defaults to `bands/` next to the model.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EffectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    covariate: String,
    #[arg(long, default_value = "ols")]
    estimator: String,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "delta_p", required_unless_present = "delta_p")]
    delta_t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta_p: Option<f64>,
    /// First day of the window (MM-DD, inclusive).
    #[arg(long, required_unless_present = "t0", conflicts_with = "t0")]
    from: Option<String>,
    /// Last day of the window (MM-DD, inclusive).
    #[arg(long, required_unless_present = "t1", conflicts_with = "t1")]
    to: Option<String>,
    /// Window start in days of season, instead of --from.
    #[arg(long)]
    t0: Option<f64>,
    /// Window end in days of season, instead of --to.
    #[arg(long)]
    t1: Option<f64>,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    class: &'a str,
    message: String,
    exit_code: u8,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Runtime => 1,
        ErrorClass::Validation => 2,
        ErrorClass::MissingArtifact => 3,
    }
}

fn class_name(class: ErrorClass) -> &'static str {
    match class {
        ErrorClass::Runtime => "runtime",
        ErrorClass::Validation => "validation",
        ErrorClass::MissingArtifact => "missing_artifact",
    }
}

fn report_error(kind: &str, class: ErrorClass, message: String) -> ExitCode {
    let code = exit_code(class);
    let report = ErrorReport {
        error: ErrorBody {
            kind,
            class: class_name(class),
            message,
            exit_code: code,
        },
    };
    eprintln!("{}", serde_json::to_string(&report).expect("error report serializes"));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            return report_error("usage", ErrorClass::Validation, first.to_string());
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(e.kind(), e.class(), e.to_string()),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit { config } => cmd_fit(&config),
        Command::Bands(args) => cmd_bands(args),
        Command::Effect(args) => cmd_effect(args),
        Command::Report { model, bands, out } => cmd_report(&model, &bands, &out),
        Command::Simulate {
            spec,
            preset,
            out,
            force,
        } => cmd_simulate(spec.as_deref(), preset.as_deref(), &out, force),
    }
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn cmd_fit(config: &Path) -> Result<()> {
    let out = fit_config_file(config)?;
    for w in &out.warnings {
        warn(w);
    }
    let result = &out.fit.result;
    println!("model: {}", out.model_path.display());
    println!(
        "panel: {} provinces x {} years",
        result.index.n_provinces(),
        result.index.n_years()
    );
    println!("parameters: {}", result.n_params());
    for c in &result.covariates {
        println!(
            "covariate {}: L = {} (variance explained {:.4})",
            c.name,
            c.n_components,
            c.variance_fraction.iter().take(c.n_components).sum::<f64>()
        );
    }
    if let Ok(ols) = result.estimate(EstimatorTag::Ols) {
        if let Some(d) = ols.diagnostics {
            println!("ols adjusted R2: {}", fmt_opt(d.adjusted_r2));
            println!("ols prediction correlation: {}", fmt_opt(d.prediction_correlation));
        }
    }
    let tags: Vec<String> = result.estimates.iter().map(|e| e.tag.to_string()).collect();
    println!("estimators: {}", tags.join(", "));
    Ok(())
}

#[derive(Serialize)]
struct BandManifest {
    n_replicas: usize,
    level: f64,
    seed: u64,
    grid_points: usize,
    files: Vec<BandEntry>,
}

#[derive(Serialize)]
struct BandEntry {
    covariate: String,
    estimator: EstimatorTag,
    file: String,
    n_failed: usize,
}

fn cmd_bands(args: BandsArgs) -> Result<()> {
    let model = FitResult::load(&args.model)?;
    let tags = args
        .estimators
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<EstimatorTag>>>()?;
    let cfg = BandConfig {
        n_replicas: args.replicas,
        level: args.level,
        seed: args.seed,
        grid_points: DEFAULT_GRID_POINTS,
    };
    let bands = model_bands(&model, &tags, &cfg)?;
    let out = args.out.unwrap_or_else(|| {
        args.model
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
            .join("bands")
    });
    let paths = write_bands(&out, &bands)?;
    let manifest = BandManifest {
        n_replicas: cfg.n_replicas,
        level: cfg.level,
        seed: cfg.seed,
        grid_points: cfg.grid_points,
        files: bands
            .iter()
            .zip(&paths)
            .map(|(b, p): (&BandResult, &PathBuf)| BandEntry {
                covariate: b.covariate.clone(),
                estimator: b.estimator,
                file: p.file_name().unwrap().to_string_lossy().into_owned(),
                n_failed: b.n_failed,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(out.join("bands.json"), text)?;
    for (b, p) in bands.iter().zip(&paths) {
        if b.n_failed > 0 {
            warn(&format!("{} {}: {} replicas failed", b.covariate, b.estimator, b.n_failed));
        }
        println!("{}", p.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct EffectOutput<'a> {
    delta_log_yield: f64,
    yield_ratio: f64,
    /// Ratio rounded to six decimals.
    yield_ratio_display: String,
    integral_value: f64,
    scenario: &'a ScenarioSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    from: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    to: Option<&'a str>,
}

fn cmd_effect(args: EffectArgs) -> Result<()> {
    let estimator: EstimatorTag = args.estimator.parse()?;
    let model = FitResult::load(&args.model)?;
    let kind = match (args.delta_t, args.delta_p) {
        (Some(delta_t), None) => ScenarioKind::TemperatureStep { delta_t },
        (None, Some(delta_p)) => ScenarioKind::PrecipitationRamp { delta_p },
        _ => return Err(Error::Config("give exactly one of --delta-t and --delta-p".into())),
    };
    let (t0, t1) = match (&args.from, &args.to) {
        (Some(from), Some(to)) => {
            let season = model.season.as_ref().ok_or_else(|| {
                Error::Config("model has no calendar season; use --t0/--t1".into())
            })?;
            SeasonWindow::parse(&season.start, &season.end)?.interval(from, to)?
        }
        _ => match (args.t0, args.t1) {
            (Some(t0), Some(t1)) => (t0, t1),
            _ => return Err(Error::Config("give --from/--to or --t0/--t1".into())),
        },
    };
    let spec = ScenarioSpec {
        kind,
        t0,
        t1,
        covariate: args.covariate.clone(),
        estimator,
    };
    let r: ScenarioResult = scenario_effect(&model, &spec)?;
    let out = EffectOutput {
        delta_log_yield: r.delta_log_yield,
        yield_ratio: r.yield_ratio,
        yield_ratio_display: format!("{:.6}", r.yield_ratio),
        integral_value: r.integral_value,
        scenario: &spec,
        from: args.from.as_deref(),
        to: args.to.as_deref(),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_report(model: &Path, bands: &Path, out: &Path) -> Result<()> {
    let model = FitResult::load(model)?;
    let summary = report::write_report(&model, bands, out)?;
    for missing in &summary.missing {
        warn(&format!("no band file {}", missing.display()));
    }
    for p in &summary.written {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_simulate(spec: Option<&Path>, preset: Option<&str>, out: &Path, force: bool) -> Result<()> {
    let spec: SynthSpec = match (spec, preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::MissingFile {
                path: path.display().to_string(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid generator spec: {e}")))?
        }
        (None, Some("default")) => presets::default_spec(),
        (None, Some("maize")) => presets::maize_shaped_spec(),
        (None, Some("wheat")) => presets::wheat_shaped_spec(),
        (None, Some(other)) => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; expected default, maize or wheat"
            )))
        }
        (None, None) => return Err(Error::Config("give --spec or --preset".into())),
    };
    let output = generate_synthetic(&spec)?;
    for p in write_synthetic(&spec, &output, out, force)? {
        println!("{}", p.display());
    }
    Ok(())
}
