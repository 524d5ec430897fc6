use pentaband::model::PhaseModel;
use pentaband::periodic::{two_periodic_closed_form, two_valued_parameters, ArcSet};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TWO_VALUED: &str = r#"{"variant": "two_valued", "t": 0.6, "theta_e": 0.3, "theta_o": 1.1, "alpha_e": 0.2, "alpha_o": 0.9, "a": 0.4}"#;
const RANDOM: &str = r#"{"variant": "random", "t": 0.5, "seed": 17}"#;

fn pentaband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pentaband")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bands_two_valued_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!(r#"{{"model": {TWO_VALUED}, "params": {{"x_points": 512}}}}"#));
    let out = dir.path().join("run");
    let o = pentaband(&["bands", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let arcs = ArcSet::from_json(&fs::read_to_string(out.join("arcs.json")).unwrap()).unwrap();
    // independent closed form, computed here rather than read back
    let model = PhaseModel::from_json(TWO_VALUED).unwrap();
    let (theta_sum, delta) = two_valued_parameters(&model).unwrap();
    let closed = two_periodic_closed_form(delta, theta_sum, 0.4, &model.constant_coupling().unwrap()).unwrap();
    let d = arcs.endpoint_distance(&closed).expect("same arc count");
    assert!(d < 1e-10, "endpoint distance {d}");

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "bands");
    assert_eq!(PhaseModel::from_value(manifest["model"].clone()).unwrap(), model);
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(outputs.contains(&"band_functions.csv") && outputs.contains(&"arcs_closed_form.json"));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!(r#"{{"model": {RANDOM}, "seed": 5, "params": {{"samples": 500, "sites": 128}}}}"#));
    let out = dir.path().join("run");
    let o = pentaband(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 5);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!(r#"{{"model": {RANDOM}, "seed": 11, "params": {{"grid": 8, "steps": 4000}}}}"#));
    let runs: Vec<Vec<u8>> = ["a", "b"]
        .iter()
        .zip(["1", "2"])
        .map(|(name, threads)| {
            let out = dir.path().join(name);
            let o = pentaband(&["lyapunov", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
            assert!(o.status.success(), "{}", stderr(&o));
            fs::read(out.join("gamma_profile.csv")).unwrap()
        })
        .collect();
    assert!(!runs[0].is_empty());
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn independence_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!(r#"{{"model": {RANDOM}, "params": {{"samples": 9000}}}}"#));
    let read = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = pentaband(&["independence", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("independence.json")).unwrap()
    };
    assert_eq!(read("a", "1"), read("b", "3"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!(r#"{{"model": {RANDOM}, "seed": 1, "params": {{"grid": 4, "steps": 2000}}}}"#));
    let run = |name: &str, seed: Option<&str>| {
        let out = dir.path().join(name);
        let mut args = vec!["lyapunov", "--config", &cfg, "--out", out.to_str().unwrap()];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        assert!(pentaband(&args).status.success());
        fs::read(out.join("gamma_profile.csv")).unwrap()
    };
    assert_ne!(run("a", None), run("b", Some("2")));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();

    let cfg = write_config(dir.path(), "{\n  \"model\": {\"variant\": \"random\", \"t\": 0.5, \"seed\": 1},\n  \"params\": {\"grid\": -3}\n}");
    let o = pentaband(&["lyapunov", "--config", &cfg, "--out", out, "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("line 3") && msg.contains("params.grid"), "{msg}");

    let cfg = write_config(dir.path(), &format!(r#"{{"model": {RANDOM}}}"#));
    let o = pentaband(&["lyapunov", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));

    let o = pentaband(&["bands", "--config", dir.path().join("absent.json").to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(dir.path(), r#"{"model": {"variant": "periodic", "t": 0.5, "theta": [0.1], "pi": [0.2, 0.3]}}"#);
    let o = pentaband(&["bands", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn budget_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!(r#"{{"model": {RANDOM}, "params": {{"sites": 100000}}}}"#));
    let o = pentaband(&["truncspec", "--config", &cfg, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("4096"), "{}", stderr(&o));

    // bands needs a periodic model
    let cfg = write_config(dir.path(), &format!(r#"{{"model": {RANDOM}}}"#));
    let o = pentaband(&["bands", "--config", &cfg, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn halfline_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = write_config(dir.path(), &format!(r#"{{"model": {TWO_VALUED}, "params": {{"grid": 64}}}}"#));
    let o = pentaband(&["halfline", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("eigen_report.json")).unwrap()).unwrap();
    assert!(report["eigenvalues"].is_array());

    let o = pentaband(&["plotdata", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "no plottable report yet");

    let cfg = write_config(dir.path(), &format!(r#"{{"model": {TWO_VALUED}, "params": {{"x_points": 64}}}}"#));
    assert!(pentaband(&["bands", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let o = pentaband(&["plotdata", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains(".dat"));
}

#[test]
fn localize_and_gordon_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("loc");
    let cfg = write_config(dir.path(), &format!(r#"{{"model": {RANDOM}, "seed": 3, "params": {{"sites": 256, "steps": 5000}}}}"#));
    let o = pentaband(&["localize", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["localization.csv", "median_vector.csv", "localization_summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let out = dir.path().join("gordon");
    let cfg = write_config(dir.path(), r#"{"model": {"variant": "almost_periodic", "t": 0.5, "beta": 0.6180339887498949, "theta0": 0.2}, "params": {"grid": 8, "max_q": 13}}"#);
    let o = pentaband(&["gordon", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("gordon.csv")).unwrap();
    // every row of a periodic approximant satisfies the quarter bound
    for line in text.lines().skip(1) {
        let ratio: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(ratio >= 0.25, "{line}");
    }
}
