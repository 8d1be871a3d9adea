use std::path::Path;
use std::process::{Command, Output};

use fdareg::ingest::synth::presets;
use fdareg::ingest::SynthSpec;

fn fdareg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdareg")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = fdareg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_spec() -> SynthSpec {
    let mut spec = presets::default_spec();
    spec.n_provinces = 12;
    spec.n_years = 16;
    spec.noise_sd = 0.05;
    spec
}

/// Writes `spec` as JSON and simulates a corpus from it into `dir/corpus`.
fn corpus(dir: &Path, spec: &SynthSpec) -> std::path::PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let spec_path = dir.join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string_pretty(spec).unwrap()).unwrap();
    let out = dir.join("corpus");
    ok(&["simulate", "--spec", p(&spec_path), "--out", p(&out)]);
    out
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn fit_is_deterministic_and_quiet() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), &small_spec());
    let cfg = c.join("config.json");
    let out = fdareg(&["fit", "--config", p(&cfg)]);
    assert!(out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).contains("warning"));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("panel: 12 provinces x 16 years"), "{summary}");
    assert!(summary.contains("parameters: 18"), "{summary}");
    assert!(summary.contains("ols adjusted R2"), "{summary}");
    let model = c.join("fit").join("model.json");
    let first = std::fs::read(&model).unwrap();
    ok(&["fit", "--config", p(&cfg)]);
    assert_eq!(first, std::fs::read(&model).unwrap());
}

#[test]
fn simulate_refuses_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    ok(&["simulate", "--preset", "default", "--out", p(&out)]);
    let again = fdareg(&["simulate", "--preset", "default", "--out", p(&out)]);
    assert_eq!(again.status.code(), Some(2));
    ok(&["simulate", "--preset", "default", "--out", p(&out), "--force"]);

    let mut other = small_spec();
    let a = corpus(&dir.path().join("a"), &other);
    other.seed += 1;
    let b = corpus(&dir.path().join("b"), &other);
    let ya = std::fs::read_to_string(a.join("yields.csv")).unwrap();
    let yb = std::fs::read_to_string(b.join("yields.csv")).unwrap();
    assert_ne!(ya, yb);
    assert_eq!(ya.lines().next(), yb.lines().next());
}

#[test]
fn unknown_preset_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdareg(&["simulate", "--preset", "barley", "--out", p(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    let report = json(String::from_utf8_lossy(&out.stderr).trim());
    assert_eq!(report["error"]["class"], "validation");
}

#[test]
fn effect_output_contract() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), &small_spec());
    ok(&["fit", "--config", p(&c.join("config.json"))]);
    let model = c.join("fit").join("model.json");

    let zero = json(&ok(&[
        "effect", "--model", p(&model), "--covariate", "tmax", "--delta-t", "0", "--from", "04-01", "--to", "04-30",
    ]));
    assert_eq!(zero["yield_ratio_display"], "1.000000");
    assert_eq!(zero["delta_log_yield"], 0.0);

    let truth = json(&std::fs::read_to_string(c.join("truth.json")).unwrap());
    let sc = &truth["scenarios"][0];
    let by_date = json(&ok(&[
        "effect", "--model", p(&model), "--covariate", "tmax", "--estimator", "qa:0.5", "--delta-t", "1",
        "--from", sc["from"].as_str().unwrap(), "--to", sc["to"].as_str().unwrap(),
    ]));
    let t0 = sc["t0"].as_f64().unwrap().to_string();
    let t1 = sc["t1"].as_f64().unwrap().to_string();
    let by_day = json(&ok(&[
        "effect", "--model", p(&model), "--covariate", "tmax", "--estimator", "qa:0.5", "--delta-t", "1",
        "--t0", &t0, "--t1", &t1,
    ]));
    assert_eq!(by_date["delta_log_yield"], by_day["delta_log_yield"]);
    let dy = by_date["delta_log_yield"].as_f64().unwrap();
    assert_eq!(by_date["yield_ratio"].as_f64().unwrap(), dy.exp());
    assert_eq!(by_date["scenario"]["estimator"], "qa:0.5");

    let bad = fdareg(&[
        "effect", "--model", p(&model), "--covariate", "tmax", "--estimator", "mean", "--delta-t", "1", "--t0", "1", "--t1", "5",
    ]);
    assert_eq!(bad.status.code(), Some(2));
    let outside = fdareg(&[
        "effect", "--model", p(&model), "--covariate", "tmax", "--delta-t", "1", "--from", "07-01", "--to", "07-10",
    ]);
    assert_eq!(outside.status.code(), Some(2));
}

#[test]
fn noise_free_fit_reproduces_the_oracle_effect() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = small_spec();
    spec.noise_sd = 0.0;
    spec.covariates[0].sample_noise_sd = 0.0;
    let c = corpus(dir.path(), &spec);
    ok(&["fit", "--config", p(&c.join("config.json"))]);
    let truth = json(&std::fs::read_to_string(c.join("truth.json")).unwrap());
    let sc = &truth["scenarios"][0];
    let got = json(&ok(&[
        "effect", "--model", p(&c.join("fit").join("model.json")), "--covariate", "tmax", "--delta-t", "1",
        "--from", sc["from"].as_str().unwrap(), "--to", sc["to"].as_str().unwrap(),
    ]));
    let (a, b) = (got["delta_log_yield"].as_f64().unwrap(), sc["delta_log_yield"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-6, "{a} vs oracle {b}");
}

#[test]
fn bands_and_report_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), &small_spec());
    let cfg_path = c.join("config.json");
    let mut cfg = json(&std::fs::read_to_string(&cfg_path).unwrap());
    cfg["model"]["quantiles"] = serde_json::json!([0.5]);
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    ok(&["fit", "--config", p(&cfg_path)]);
    let model = c.join("fit").join("model.json");

    let b1 = dir.path().join("b1");
    let b2 = dir.path().join("b2");
    for b in [&b1, &b2] {
        ok(&["bands", "--model", p(&model), "--replicas", "25", "--seed", "5", "--out", p(b)]);
    }
    for f in ["band_tmax_ols.csv", "band_tmax_qr-0.5.csv", "band_tmax_qa-0.5.csv", "bands.json"] {
        assert_eq!(std::fs::read(b1.join(f)).unwrap(), std::fs::read(b2.join(f)).unwrap(), "{f}");
    }
    let band = std::fs::read_to_string(b1.join("band_tmax_ols.csv")).unwrap();
    assert_eq!(band.lines().next(), Some("t,point,lower,upper"));
    assert_eq!(band.lines().count(), 202);

    let r1 = dir.path().join("r1");
    let r2 = dir.path().join("r2");
    ok(&["report", "--model", p(&model), "--bands", p(&b1), "--out", p(&r1)]);
    ok(&["report", "--model", p(&model), "--bands", p(&b1), "--out", p(&r2)]);
    let table = std::fs::read_to_string(r1.join("curves_tmax.csv")).unwrap();
    assert_eq!(
        table.lines().next(),
        Some("t,ols_point,ols_lower,ols_upper,qr:0.5_point,qr:0.5_lower,qr:0.5_upper,qa:0.5_point,qa:0.5_lower,qa:0.5_upper")
    );
    let svg = std::fs::read(r1.join("curves_tmax.svg")).unwrap();
    assert_eq!(svg, std::fs::read(r2.join("curves_tmax.svg")).unwrap());
    assert!(String::from_utf8(svg).unwrap().starts_with("<svg"));

    std::fs::remove_file(b1.join("band_tmax_qa-0.5.csv")).unwrap();
    let partial = fdareg(&["report", "--model", p(&model), "--bands", p(&b1), "--out", p(&r1)]);
    assert!(partial.status.success());
    assert!(String::from_utf8_lossy(&partial.stderr).contains("band_tmax_qa-0.5.csv"));
}

#[test]
fn cli_flag_errors_are_usage_errors() {
    let out = fdareg(&["effect", "--model", "m.json", "--covariate", "t", "--t0", "1", "--t1", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let report = json(String::from_utf8_lossy(&out.stderr).trim());
    assert_eq!(report["error"]["kind"], "usage");
    assert!(fdareg(&["--help"]).status.success());
}
