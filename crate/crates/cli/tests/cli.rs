use std::path::Path;
use std::process::{Command, Output};

use qaoa_ppn::derive_seed;
use qaoa_ppn::ppn::{model_to_bytes, save_model, PpnModel};
use serde_json::Value;

fn qaoa_ppn(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qaoa-ppn"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = qaoa_ppn(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn edge_dataset(dir: &Path) -> String {
    let path = dir.join("edges.json");
    let data = serde_json::json!([
        { "graph_id": 0, "split": "train", "n": 2, "edges": [[1, 2]] },
        { "graph_id": 1, "split": "train", "n": 3, "edges": [[1, 2]] },
        { "graph_id": 2, "split": "test", "n": 2, "edges": [[1, 2]] },
    ]);
    std::fs::write(&path, data.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_graphs_split_and_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--seed", "3", "gen-graphs", "--n-graphs", "3", "--train-count", "1"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    let d = json(a.path().join("dataset.json"));
    let splits: Vec<&str> = d.as_array().unwrap().iter().map(|e| e["split"].as_str().unwrap()).collect();
    assert_eq!(splits, ["train", "test", "test"]);
    assert_eq!(std::fs::read(a.path().join("dataset.json")).unwrap(), std::fs::read(b.path().join("dataset.json")).unwrap());
}

#[test]
fn invalid_counts_fail_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let o = qaoa_ppn(dir.path(), &["gen-graphs", "--n-graphs", "3", "--train-count", "3"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn label_single_edge_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = edge_dataset(dir.path());
    ok(dir.path(), &["label", "--dataset", &dataset, "--max-depth", "3"]);
    let labels = json(dir.path().join("labels.json"));
    let labels = labels.as_array().unwrap();
    assert_eq!(labels.len(), 2);
    for l in labels {
        for d in ["1", "2", "3"] {
            assert_eq!(l["params_by_depth"][d]["p"].as_u64().unwrap(), d.parse::<u64>().unwrap());
            assert!((l["values_by_depth"][d].as_f64().unwrap() - 1.0).abs() < 1e-5);
        }
    }
}

#[test]
fn train_without_epochs_keeps_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = edge_dataset(dir.path());
    ok(dir.path(), &["--seed", "5", "label", "--dataset", &dataset, "--max-depth", "2"]);
    let labels = dir.path().join("labels.json");
    let labels = labels.to_str().unwrap();
    let common = ["--labels", labels, "--blocks", "1", "--horizon", "1"];

    ok(dir.path(), &[&["--seed", "5", "train", "--epochs1", "0", "--epochs2", "0"][..], &common].concat());
    let model = std::fs::read(dir.path().join("model.ppnm")).unwrap();
    assert_eq!(model, model_to_bytes(&PpnModel::random(1, derive_seed(5, 0))));

    let trained = |out: &Path| {
        ok(out, &[&["--seed", "5", "train", "--epochs1", "3", "--epochs2", "2"][..], &common].concat());
        (std::fs::read(out.join("model.ppnm")).unwrap(), std::fs::read_to_string(out.join("loss.csv")).unwrap())
    };
    let (m1, loss) = trained(dir.path());
    let other = tempfile::tempdir().unwrap();
    assert_eq!((m1.clone(), loss.clone()), trained(other.path()));
    assert_ne!(m1, model);
    assert_eq!(loss.lines().count(), 6);
}

#[test]
fn predict_shapes_and_composition() {
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.ppnm");
    save_model(&PpnModel::zeros(1), &zero).unwrap();
    let zero = zero.to_str().unwrap();
    let input = r#"{"p":1,"gamma":[0.4],"beta":[0.2]}"#;
    let out: Value = serde_json::from_str(&ok(dir.path(), &["predict", "--model", zero, "--params", input])).unwrap();
    assert_eq!(out["p"], 2);
    assert!(out["gamma"].as_array().unwrap().iter().chain(out["beta"].as_array().unwrap()).all(|v| v == 0.0));

    let random = dir.path().join("random.ppnm");
    save_model(&PpnModel::random(2, 9), &random).unwrap();
    let random = random.to_str().unwrap();
    let three = ok(dir.path(), &["predict", "--model", random, "--params", input, "--steps", "3"]);
    let mut cur = input.to_string();
    for _ in 0..3 {
        cur = ok(dir.path(), &["predict", "--model", random, "--params", &cur]).trim().to_string();
    }
    // each single step converts through angles, so agreement is up to rounding
    let (a, b): (Value, Value) = (serde_json::from_str(&three).unwrap(), serde_json::from_str(&cur).unwrap());
    assert_eq!(a["p"], 4);
    assert_eq!(a["p"], b["p"]);
    for key in ["gamma", "beta"] {
        for (x, y) in a[key].as_array().unwrap().iter().zip(b[key].as_array().unwrap()) {
            assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-12);
        }
    }

    let o = qaoa_ppn(dir.path(), &["predict", "--model", random, "--params", r#"{"p":1,"gamma":[4.0],"beta":[0.2]}"#]);
    assert!(!o.status.success());
    let o = qaoa_ppn(dir.path(), &["predict", "--model", "missing.ppnm", "--params", input]);
    assert!(!o.status.success());
}

#[test]
fn bench_tqa_depth_one_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = edge_dataset(dir.path());
    let model = dir.path().join("m.ppnm");
    save_model(&PpnModel::zeros(1), &model).unwrap();
    let model = model.to_str().unwrap();
    let base = ["bench", "--dataset", &dataset, "--model", model];

    ok(dir.path(), &[&base[..], &["--strategies", "tqa", "--target-depth", "1", "--curve-depth", "2"]].concat());
    let records = json(dir.path().join("records.json"));
    let r = &records.as_array().unwrap()[0];
    assert_eq!(r["strategy"], "tqa");
    assert_eq!(r["params"]["p"], 1);
    assert!((r["approx_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let report = json(dir.path().join("report.json"));
    assert_eq!(report["rows"]["tqa"]["n_graphs"], 1);
    assert_eq!(report["metadata"]["dataset_sha256"].as_str().unwrap().len(), 64);
    assert!(std::fs::read_to_string(dir.path().join("curve.csv")).unwrap().starts_with("depth,"));

    let o = qaoa_ppn(dir.path(), &[&base[..], &["--strategies", "interp"]].concat());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("interp"));
    let o = qaoa_ppn(dir.path(), &["bench", "--dataset", &dataset, "--model", "nope.ppnm"]);
    assert!(!o.status.success());
}

#[test]
fn seeded_pipeline_is_reproducible() {
    let run = |out: &Path| {
        let o = out.to_str().unwrap();
        ok(out, &["--seed", "11", "gen-graphs", "--n-graphs", "6", "--n-nodes", "5", "--train-count", "2"]);
        let dataset = format!("{o}/dataset.json");
        ok(out, &["--seed", "11", "label", "--dataset", &dataset, "--restarts-depth1", "2", "--restarts-higher", "2"]);
        let labels = format!("{o}/labels.json");
        ok(out, &["--seed", "11", "train", "--labels", &labels, "--blocks", "1", "--epochs1", "2", "--epochs2", "1"]);
        let model = format!("{o}/model.ppnm");
        ok(
            out,
            &["--seed", "11", "bench", "--dataset", &dataset, "--model", &model, "--labels", &labels, "--target-depth", "3", "--curve-depth", "3"],
        );
        let mut report = json(out.join("report.json"));
        report["metadata"]["timestamp"] = Value::Null;
        (report, std::fs::read(out.join("records.json")).unwrap(), std::fs::read(out.join("report.csv")).unwrap())
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run(a.path());
    assert_eq!(ra, run(b.path()));
    assert_eq!(ra.0["rows"].as_object().unwrap().len(), 4);
}
