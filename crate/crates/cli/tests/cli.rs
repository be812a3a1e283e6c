use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nls_core::autodiff::{init_weights, mlp_specs};
use nls_core::data::{write_csv, Dataset, Standardization};
use nls_core::linalg::Matrix;
use nls_core::nls::{NlsConfig, NlsModel, TargetScale};

const SMALL: &str = "[model]\nhidden_layers = [8]\nmax_epochs = 40\nlearning_rate = 0.01\n";

fn nls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// A model whose coefficients do not depend on the input: every weight is zero
/// and the output bias is `theta`, so `θ(x) = theta / std`.
fn constant_model(train: &Dataset, theta: &[f64]) -> NlsModel {
    let d = train.dim();
    let mut weights = init_weights(&mlp_specs(d, &[3], d, false, 0.0), 0).unwrap();
    for layer in weights.layers_mut() {
        layer.weight.as_mut_slice().fill(0.0);
    }
    weights.layers_mut().last_mut().unwrap().bias = theta.to_vec();
    let stats = Standardization::fit_all(&train.features).unwrap();
    NlsModel::from_parts(
        weights,
        0.0,
        stats,
        TargetScale::fit(&train.target),
        NlsConfig::default(),
    )
    .unwrap()
}

fn dataset(rows: &[[f64; 2]], target: &[f64]) -> Dataset {
    Dataset::unnamed(Matrix::from_rows(rows).unwrap(), target.to_vec()).unwrap()
}

fn save_csv(dir: &Path, name: &str, data: &Dataset) -> String {
    let p = dir.join(name);
    write_csv(data, fs::File::create(&p).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn train_writes_model_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("run");
    let o = nls(&[
        "train",
        "--config",
        &cfg,
        "--data",
        "sin:200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("model.json").exists());
    let trace: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    let losses = trace["validation_loss"].as_array().unwrap();
    assert_eq!(losses.len(), 41);
    assert!(losses.last().unwrap().as_f64().unwrap().is_finite());
    let csv = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 42);
}

#[test]
fn negative_lambda_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[model]\nlambda = -1.0\n");
    let o = nls(&[
        "train",
        "--config",
        &cfg,
        "--data",
        "sin:50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambda"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[model]\nlearning_rat = 0.1\n");
    let o = nls(&[
        "train",
        "--config",
        &cfg,
        "--data",
        "sin:50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning_rat"));
}

#[test]
fn missing_data_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = nls(&[
        "train",
        "--data",
        "/nonexistent/x.csv",
        "--target",
        "y",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn same_seed_gives_byte_identical_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = nls(&[
            "train",
            "--config",
            &cfg,
            "--data",
            "sin:150",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (
            fs::read(out.join("model.json")).unwrap(),
            fs::read(out.join("trace.json")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn eval_of_exact_model_reports_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&[[1.0, 2.0], [3.0, -1.0], [0.5, 0.0]], &[4.0, 4.0, 4.0]);
    let model_path = dir.path().join("m.json");
    constant_model(&data, &[0.0, 0.0]).save(&model_path).unwrap();
    let csv = save_csv(dir.path(), "d.csv", &data);
    let o = nls(&["eval", "--model", model_path.to_str().unwrap(), "--data", &csv]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(m["task"], "regression");
    assert_eq!(m["mse"].as_f64(), Some(0.0));
    assert_eq!(m["mae"].as_f64(), Some(0.0));
}

#[test]
fn eval_of_unit_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&[[1.0, 2.0], [3.0, -1.0]], &[1.0, -1.0]);
    let model_path = dir.path().join("m.json");
    constant_model(&data, &[0.0, 0.0]).save(&model_path).unwrap();
    let csv = save_csv(dir.path(), "d.csv", &data);
    let out = dir.path().join("eval");
    let o = nls(&[
        "eval",
        "--model",
        model_path.to_str().unwrap(),
        "--data",
        &csv,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["mse"].as_f64(), Some(1.0));
    assert_eq!(m["mae"].as_f64(), Some(1.0));
    assert_eq!(m["n"].as_u64(), Some(2));
}

#[test]
fn eval_with_wrong_dimension_fails() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&[[1.0, 2.0], [3.0, -1.0]], &[1.0, -1.0]);
    let model_path = dir.path().join("m.json");
    constant_model(&data, &[0.0, 0.0]).save(&model_path).unwrap();
    let o = nls(&["eval", "--model", model_path.to_str().unwrap(), "--data", "sin:10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn classifier_train_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<[f64; 2]> = (0..80).map(|i| [(i % 10) as f64, (i / 10) as f64]).collect();
    let labels: Vec<f64> = rows.iter().map(|r| if r[0] + r[1] > 9.0 { 1.0 } else { 0.0 }).collect();
    let csv = save_csv(dir.path(), "c.csv", &dataset(&rows, &labels));
    let cfg = write(
        dir.path(),
        "c.toml",
        "[model]\nhidden_layers = [8]\nmax_epochs = 200\nlearning_rate = 0.02\n",
    );
    let out = dir.path().join("run");
    let o = nls(&[
        "train",
        "--classifier",
        "--config",
        &cfg,
        "--data",
        &csv,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model = out.join("model.json");
    let o = nls(&["eval", "--model", model.to_str().unwrap(), "--data", &csv]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(m["task"], "classification");
    assert!(m["accuracy"].as_f64().unwrap() > 0.85, "{m}");

    let o = nls(&[
        "explain",
        "--model",
        model.to_str().unwrap(),
        "--data",
        &csv,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn compare_is_reproducible_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[model]\nmax_epochs = 20\nlearning_rate = 0.01\n[compare]\nprotocol = { kind = \"k_fold\", folds = 3 }\n[compare.grid]\nlayer_counts = [1]\nwidths = [4, 6]\nsigmas = [1.0, 10.0]\n",
    );
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = nls(&[
            "compare",
            "--config",
            &cfg,
            "--data",
            "quadratic:90:1:3",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["report.json", "report.csv", "cells.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let cells = fs::read_to_string(a.join("cells.csv")).unwrap();
    // 3 folds × (2 nls + 2 nn + 2 lls) cells, plus the header.
    assert_eq!(cells.lines().count(), 1 + 3 * 6);
    let timings: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("timings.json")).unwrap()).unwrap();
    assert!(timings["nls"].as_f64().unwrap() > 0.0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    for row in report["rows"].as_array().unwrap() {
        assert!(row["test"]["mse_se"].as_f64().unwrap() >= 0.0);
        assert_eq!(row["selected"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn sweep_writes_reports_models_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!(
            "{SMALL}[sweep]\nlambdas = [0.0, 1.0, 10.0]\nprotocol = {{ kind = \"holdout\", test_fraction = 0.25 }}\n"
        ),
    );
    let out = dir.path().join("sweep");
    let o = nls(&[
        "sweep-lambda",
        "--config",
        &cfg,
        "--data",
        "sin:200",
        "--extend",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["extension_gap"].is_f64()));
    for i in 0..3 {
        assert!(out.join(format!("model_{i}.json")).exists());
        let profile = fs::read_to_string(out.join(format!("theta_{i}.csv"))).unwrap();
        assert_eq!(profile.lines().count(), 201);
    }
}

#[test]
fn sweep_rejects_descending_lambdas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}[sweep]\nlambdas = [5.0, 1.0]\n"));
    let o = nls(&[
        "sweep-lambda",
        "--config",
        &cfg,
        "--data",
        "sin:100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambdas"));
}

#[test]
fn explain_constant_coefficient_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(
        &[[1.0, 2.0], [3.0, -1.0], [0.5, 0.0], [2.0, 2.0]],
        &[1.0, 2.0, 3.0, 4.0],
    );
    let model_path = dir.path().join("m.json");
    constant_model(&data, &[0.7, -0.2]).save(&model_path).unwrap();
    let csv = save_csv(dir.path(), "d.csv", &data);
    let out = dir.path().join("x");
    let o = nls(&[
        "explain",
        "--model",
        model_path.to_str().unwrap(),
        "--data",
        &csv,
        "--out",
        out.to_str().unwrap(),
        "--extend",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ex: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("explanations.json")).unwrap()).unwrap();
    let ex = ex.as_array().unwrap();
    assert_eq!(ex.len(), 4);
    for e in ex {
        assert_eq!(e["coefficients"], ex[0]["coefficients"]);
    }
    let ext: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("extension.json")).unwrap()).unwrap();
    // Constant coefficients make the extended prediction exact.
    assert!(ext["mean_gap"].as_f64().unwrap() < 1e-12);
    assert!(fs::read_to_string(out.join("explanations.txt"))
        .unwrap()
        .contains("intercept"));
}

#[test]
fn explain_with_local_linear_smoother() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = nls(&[
        "explain",
        "--lls-train",
        "quadratic:100",
        "--sigma",
        "10",
        "--data",
        "quadratic:5:0:1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ex: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("explanations.json")).unwrap()).unwrap();
    assert_eq!(ex.as_array().unwrap().len(), 5);
}
