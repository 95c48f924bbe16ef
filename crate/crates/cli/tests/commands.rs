mod common;

use impulse_core::advice::{determine_percentage_effect, AdviceOptions, PercentWindow};
use impulse_core::load_model;
use nalgebra::{DMatrix, DVector};
use serde_json::Value;
use tempfile::TempDir;

use common::*;

fn json(out: &std::process::Output) -> Value {
    assert!(out.status.success(), "stderr: {}", stderr(out));
    serde_json::from_str(&stdout(out)).unwrap()
}

#[test]
fn fit_writes_a_loadable_model() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, noisy_csv(1)).unwrap();
    let model = dir.path().join("m.model");
    let out = impulse(&[
        "fit", "--input", csv.to_str().unwrap(), "--lags", "1", "--interval-minutes", "360",
        "--output", model.to_str().unwrap(), "--negative", "gloomy",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("stable: true"));
    let loaded = load_model(&model).unwrap();
    assert_eq!(loaded.names(), ["calm", "gloomy", "active"]);
    assert_eq!(loaded.interval_minutes(), 360.0);
    assert!(loaded.residuals().is_some());
}

#[test]
fn fit_recovers_noiseless_generator() {
    let b = DMatrix::from_row_slice(2, 2, &[0.6, -0.2, 0.3, 0.4]);
    let c = DVector::from_vec(vec![1.0, -0.5]);
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, csv_of(&["a", "b"], &var1_series(&b, &c, 80, 0.0, 0))).unwrap();
    let model = dir.path().join("m.model");
    let out = impulse(&[
        "fit", "--input", csv.to_str().unwrap(), "--lags", "1", "--interval-minutes", "60",
        "--output", model.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let loaded = load_model(&model).unwrap();
    assert!((&loaded.coefficient_blocks()[0] - b).amax() < 1e-8);
    assert!((loaded.constant() - c).amax() < 1e-8);
}

#[test]
fn zero_lags_is_a_usage_error() {
    let out = impulse(&["fit", "--input", "d.csv", "--lags", "0", "--interval-minutes", "60", "--output", "m"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_error_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, "a,b\n1,2\n1,3\n1,4\n1,5\n1,7\n1,6\n").unwrap();
    let out = impulse(&[
        "fit", "--input", csv.to_str().unwrap(), "--lags", "1", "--interval-minutes", "60",
        "--output", dir.path().join("m").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
}

#[test]
fn advise_ranking_on_two_var_model() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "m.model", &two_var_model());
    let report = json(&impulse(&["advise", "--model", model.to_str().unwrap(), "--horizon", "3", "--no-bootstrap"]));
    let entries = report["ranking"]["entries"].as_array().unwrap();
    assert_eq!(entries[0]["variable"], "var0");
    assert!((entries[0]["net_effect"].as_f64().unwrap() - 0.627).abs() < 1e-12);
    assert_eq!(entries[1]["variable"], "var1");
    assert_eq!(entries[1]["net_effect"].as_f64().unwrap(), 0.0);
    assert_eq!(report["horizon"], 3);
}

#[test]
fn zero_model_has_no_influential_variable() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "z.model", &zero_model());
    let out = impulse(&["advise", "--model", model.to_str().unwrap(), "--no-bootstrap", "--format", "text"]);
    assert!(out.status.success());
    assert!(stdout(&out).to_lowercase().contains("no influential variable"), "{}", stdout(&out));
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, noisy_csv(2)).unwrap();
    let model = dir.path().join("m.model");
    let fit = impulse(&[
        "fit", "--input", csv.to_str().unwrap(), "--lags", "1", "--interval-minutes", "360",
        "--output", model.to_str().unwrap(),
    ]);
    assert!(fit.status.success());
    let run = |workers: &str| {
        let out = impulse(&[
            "advise", "--model", model.to_str().unwrap(), "--data", csv.to_str().unwrap(), "--horizon", "8",
            "--iterations", "40", "--seed", "11", "--workers", workers,
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        out.stdout
    };
    let first = run("1");
    assert_eq!(first, run("1"));
    assert_eq!(first, run("4"));
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["ranking"]["bootstrap"], true);
}

#[test]
fn bootstrap_without_residuals_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "m.model", &two_var_model());
    let out = impulse(&["advise", "--model", model.to_str().unwrap(), "--bootstrap"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bootstrap"), "{}", stderr(&out));
}

#[test]
fn unknown_variable_lists_valid_names() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "m.model", &two_var_model());
    let out = impulse(&["irf", "--model", model.to_str().unwrap(), "--impulse", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("var0, var1"), "{}", stderr(&out));
}

#[test]
fn irf_pair_csv() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "m.model", &two_var_model());
    let out = impulse(&[
        "irf", "--model", model.to_str().unwrap(), "--impulse", "var0", "--response", "var1", "--horizon", "3",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("impulse,response,t,value,lower,upper"));
    let values: Vec<f64> = lines
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            assert_eq!(&cells[..2], ["var0", "var1"]);
            assert_eq!(&cells[4..], ["", ""]);
            cells[3].parse().unwrap()
        })
        .collect();
    assert_eq!(values.len(), 4);
    for (v, e) in values.iter().zip([0.0, 0.3, 0.21, 0.117]) {
        assert!((v - e).abs() < 1e-12, "{values:?}");
    }
}

#[test]
fn orthogonalized_with_identity_covariance_matches_plain() {
    let dir = TempDir::new().unwrap();
    let model = two_var_model().with_covariance(DMatrix::identity(2, 2)).unwrap();
    let path = write_model(dir.path(), "m.model", &model);
    let base = ["irf", "--model", path.to_str().unwrap(), "--horizon", "6", "--format", "json"];
    let plain = json(&impulse(&base));
    let mut args = base.to_vec();
    args.push("--orthogonalized");
    let orth = json(&impulse(&args));
    assert_eq!(plain["series"], orth["series"]);
    assert_eq!(orth["orthogonalized"], true);
}

#[test]
fn whatif_matches_core() {
    let dir = TempDir::new().unwrap();
    let model = two_var_model();
    let path = write_model(dir.path(), "m.model", &model);
    let out = json(&impulse(&[
        "whatif", "--model", path.to_str().unwrap(), "--target", "var1", "--percent", "10", "--theta", "0.1",
        "--horizon", "3", "--no-bootstrap",
    ]));
    let expected = determine_percentage_effect(
        10.0,
        1,
        0.1,
        3,
        &model,
        None,
        &AdviceOptions::default(),
        PercentWindow::default(),
    )
    .unwrap();
    let expected: Value = serde_json::from_str(&impulse_core::format::to_stable_json(&expected).unwrap()).unwrap();
    assert_eq!(out, expected);
    assert_eq!(out["suggestions"][0]["variable"], "var0");
}

#[test]
fn whatif_zero_percent_suggests_nothing() {
    let dir = TempDir::new().unwrap();
    let path = write_model(dir.path(), "m.model", &two_var_model());
    let out = json(&impulse(&[
        "whatif", "--model", path.to_str().unwrap(), "--target", "var1", "--percent", "0", "--no-bootstrap",
    ]));
    for s in out["suggestions"].as_array().unwrap() {
        assert_eq!(s["required_percent"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn whatif_text_and_skips() {
    let dir = TempDir::new().unwrap();
    let path = write_model(dir.path(), "m.model", &two_var_model());
    let out = impulse(&[
        "whatif", "--model", path.to_str().unwrap(), "--target", "var0", "--percent", "-10", "--no-bootstrap",
        "--format", "text",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("skipped var1: no_effect"), "{}", stdout(&out));
}

#[test]
fn effect_length_json() {
    let dir = TempDir::new().unwrap();
    let path = write_model(dir.path(), "m.model", &two_var_model());
    let out = json(&impulse(&[
        "effect-length", "--model", path.to_str().unwrap(), "--impulse", "var0", "--response", "var1",
        "--horizon", "3", "--no-bootstrap",
    ]));
    assert_eq!(out["interval_minutes"].as_f64().unwrap(), 360.0);
    let steps = out["total_steps"].as_f64().unwrap();
    assert!((out["total_minutes"].as_f64().unwrap() - steps * 360.0).abs() < 1e-6);
    assert!(out["text"].as_str().unwrap().contains("var0"));
}
