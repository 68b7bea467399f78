use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn wdro(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wdro"))
        .args(args)
        .env("WDRO_OUT_DIR", dir)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    jsonschema::validator_for(&read_json(&path)).unwrap()
}

fn assert_valid(schema_name: &str, doc: &Value) {
    let v = schema(schema_name);
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}");
}

fn stderr_error(out: &Output) -> Value {
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is a JSON object");
    assert_valid("error.schema.json", &err);
    err
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("generated_at_unix");
    v
}

#[test]
fn train_is_deterministic_and_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["train", "--n", "300", "--d", "3", "--starts", "4", "--seed", "7"];
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = wdro(dir.path(), &[&args[..], &["--out", out.to_str().unwrap()]].concat());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ja, jb) = (read_json(&a), read_json(&b));
    assert_valid("train.schema.json", &ja);
    assert_eq!(without_timestamp(ja.clone()), without_timestamp(jb));
    assert_eq!(ja["config"]["data"]["n"], 300);
    assert_eq!(ja["result"]["runs"].as_array().unwrap().len(), 4);
    let best = &ja["result"]["clusters"][0];
    assert!(best["sin_angle_to_reference"].as_f64().unwrap() < 0.5);
}

#[test]
fn train_writes_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = wdro(
        dir.path(),
        &[
            "train",
            "--n",
            "100",
            "--d",
            "2",
            "--starts",
            "2",
            "--loss",
            "shinge",
            "--trace-csv",
            trace.to_str().unwrap(),
        ],
    );
    assert!(o.status.success());
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("run,iteration,value,grad_norm\n"));
    assert!(text.lines().count() > 2);
    assert!(dir.path().join("train.json").exists());
}

#[test]
fn train_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    for (args, needle) in [
        (vec!["train", "--sigma", "0"], "sigma"),
        (vec!["train", "--sigma", "-1"], "sigma"),
        (vec!["train", "--loss", "ramp"], "not differentiable"),
        (
            vec!["train", "--n", "50", "--d", "2", "--reference", "1,0,0"],
            "reference",
        ),
        (vec!["train", "--flip-fraction", "0.7"], "fraction"),
    ] {
        let o = wdro(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = stderr_error(&o);
        assert_eq!(err["error"]["kind"], "validation");
        assert!(err["error"]["message"].as_str().unwrap().contains(needle), "{err}");
    }
}

#[test]
fn missing_data_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = wdro(dir.path(), &["oracle", "--data", missing.to_str().unwrap(), "--w", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_error(&o)["error"]["kind"], "io");
}

#[test]
fn oracle_two_point_example() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("two.csv");
    fs::write(&data, "x1,y\n0,1\n1,1\n").unwrap();
    let out = dir.path().join("oracle.json");
    let o = wdro(
        dir.path(),
        &[
            "oracle",
            "--data",
            data.to_str().unwrap(),
            "--w",
            "1",
            "--b",
            "0",
            "--epsilon",
            "0.25",
            "--rho",
            "0.75",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&out);
    assert_valid("oracle.schema.json", &j);
    let r = &j["result"];
    assert_eq!(r["worst_case_dual"]["value"].as_f64().unwrap(), 0.75);
    assert_eq!(r["worst_case_knapsack"].as_f64().unwrap(), 0.75);
    assert!((r["cvar"]["value"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(r["chance_cvar"]["chance_holds"], true);
    assert_eq!(r["chance_cvar"]["cvar_holds"], true);
    assert_eq!(r["margin"]["misclassified"], serde_json::json!([0]));
    assert_eq!(r["margin"]["eta"].as_f64().unwrap(), 1.0);
}

#[test]
fn oracle_at_zero_radius_skips_the_equivalence() {
    let dir = tempfile::tempdir().unwrap();
    let o = wdro(dir.path(), &["oracle", "--n", "50", "--d", "2", "--w", "1,0"]);
    assert!(o.status.success());
    let j = read_json(&dir.path().join("oracle.json"));
    assert_valid("oracle.schema.json", &j);
    assert!(j["result"]["chance_cvar"].is_null());
    assert_eq!(j["result"]["worst_case_dual"]["t_star"], "inf");
    assert_eq!(j["result"]["worst_case_dual"]["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn oracle_rejects_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let o = wdro(dir.path(), &["oracle", "--n", "50", "--d", "2", "--w", "1,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    stderr_error(&o);
}

#[test]
fn certify_reports_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = wdro(dir.path(), &["certify", "--epsilon", "0.3,1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("certify.json"));
    assert_valid("certify.schema.json", &j);
    assert_eq!(j["result"]["all_passed"], true);
    let certs = j["result"]["certificates"].as_array().unwrap();
    assert_eq!(certs.len(), 2);
    let w = certs[1]["stationary_points"][0]["w"][0].as_f64().unwrap();
    assert!((w - 0.5).abs() < 1e-6);
}

#[test]
fn certify_rejects_nonpositive_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    for eps in ["0", "-0.5"] {
        let o = wdro(dir.path(), &["certify", "--epsilon", eps]);
        assert_eq!(o.status.code(), Some(2));
        stderr_error(&o);
    }
    let o = wdro(dir.path(), &["certify", "--epsilon", "1", "--grid", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reproduce_small_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sub").join("t4.csv");
    let o = wdro(
        dir.path(),
        &[
            "reproduce",
            "--table",
            "t4",
            "--scale",
            "0.02",
            "--d",
            "3",
            "--starts",
            "4",
            "--out",
            csv.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    assert!(reader.headers().unwrap().iter().any(|h| h == "adv_percent"));
    assert_eq!(reader.records().count(), 3);
    let j = read_json(&csv.with_extension("json"));
    assert_valid("reproduce.schema.json", &j);
    assert_eq!(j["config"]["table"], "t4");
    assert_eq!(j["result"]["checks"].as_array().unwrap().len(), 6);
}

#[test]
fn reproduce_rejects_bad_scale() {
    let dir = tempfile::tempdir().unwrap();
    let o = wdro(dir.path(), &["reproduce", "--table", "t1", "--scale", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    stderr_error(&o);
}
