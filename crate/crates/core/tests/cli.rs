use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use geoconst::cli::{self, cache_key, cache_lookup, Parameters, Payload, RunRecord, CACHE_ENV, TOOL_VERSION};
use geoconst::ConstantKind;
use serde_json::Value;

fn geoconst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoconst")).args(args).env_remove(CACHE_ENV).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn assert_schema_valid(doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/run_record.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn value(doc: &Value) -> f64 {
    doc["result"]["data"]["value"].as_f64().unwrap()
}

#[test]
fn compute_examples() {
    let out = geoconst(&["compute", "--space", "l2:2", "--constant", "mr", "--p", "0.5", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert!((value(&doc) - 1.0).abs() < 1e-3);
    assert_schema_valid(&doc);

    let out = geoconst(&["compute", "--space", "l1:2", "--constant", "mr", "--p", "0", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert!((value(&doc) - 2.0).abs() < 1e-2);
    assert_eq!(doc["result"]["data"]["witness"]["vectors"].as_array().unwrap().len(), 2);
    assert_schema_valid(&doc);

    let out = geoconst(&["compute", "--space", "l1:2", "--constant", "eps0", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert!((value(&doc) - 2.0).abs() < 1e-2);
    assert_schema_valid(&doc);
}

#[test]
fn every_constant_validates() {
    for args in [
        vec!["--constant", "dr"],
        vec!["--constant", "dw"],
        vec!["--constant", "delta", "--eps", "1"],
        vec!["--constant", "rho", "--tau", "0.5"],
        vec!["--constant", "rho-prime"],
        vec!["--constant", "mr", "--p", "1.5", "--extended-p"],
    ] {
        let mut full = vec!["compute", "--space", "l3:2", "--starts", "8"];
        full.extend(args.iter());
        let out = geoconst(&full);
        assert!(matches!(out.status.code(), Some(0) | Some(3)), "{args:?}");
        let doc = json(&out);
        assert_schema_valid(&doc);
        let record: RunRecord = serde_json::from_value(doc.clone()).unwrap();
        assert_eq!(serde_json::to_value(&record).unwrap(), doc);
    }
}

#[test]
fn usage_errors_exit_two() {
    let out = geoconst(&["compute", "--space", "l0.5:2", "--constant", "mr", "--p", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exponent must be ≥ 1"));
    assert!(out.stdout.is_empty());
    for args in [
        vec!["compute", "--space", "l2:2", "--constant", "james"],
        vec!["compute", "--space", "l2:2", "--constant", "mr"],
        vec!["compute", "--space", "l2:2", "--constant", "mr", "--p", "1.5"],
        vec!["compute", "--space", "l2:2", "--constant", "delta", "--eps", "3"],
        vec!["compute", "--space", "poly:@/nonexistent.json", "--constant", "dr"],
        vec!["sweep", "--space", "l2:2", "--constant", "mr", "--p", "1:0:0.1"],
        vec!["sweep", "--space", "l2:2", "--constant", "eps0", "--p", "0:1:0.1"],
        vec!["frobnicate"],
    ] {
        assert_eq!(geoconst(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn non_convergence_exits_three() {
    let out = geoconst(&["compute", "--space", "l1:2", "--constant", "mr", "--p", "0.5", "--starts", "1", "--grid", "4", "--max-iterations", "5"]);
    assert_eq!(out.status.code(), Some(3));
    let doc = json(&out);
    assert_eq!(doc["result"]["data"]["converged"], Value::Bool(false));
}

#[test]
fn polyhedral_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("octagon.json");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let vertices: Vec<[f64; 2]> = (0..8).map(|k| match k % 4 {
        0 => [1.0, 0.0],
        1 => [s, s],
        2 => [0.0, 1.0],
        _ => [-s, s],
    }).enumerate().map(|(i, v)| if i >= 4 { [-v[0], -v[1]] } else { v }).collect();
    fs::write(&path, serde_json::json!({"type": "polyhedral", "dim": 2, "vertices": vertices}).to_string()).unwrap();
    let space = cli::parse_space(&format!("poly:@{}", path.display())).unwrap();
    assert_eq!(space.dim(), 2);
    assert_eq!(space.facets().len(), 8);

    let descriptor = format!("poly:@{}", path.display());
    let out = geoconst(&["compute", "--space", &descriptor, "--constant", "mr", "--p", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(value(&doc), 1.0);
    assert_schema_valid(&doc);

    fs::write(&path, "{\"type\": \"polyhedral\", \"dim\": 2, \"vertices\": [[1, 0], [0, 1], [0, -1]]}").unwrap();
    let err = cli::parse_space(&descriptor).unwrap_err();
    assert!(err.message.contains("[-1.0, 0.0]") || err.message.contains("[-1.0, -0.0]"), "{err}");
    fs::write(&path, "[1, 2").unwrap();
    assert!(cli::parse_space(&descriptor).unwrap_err().message.contains("invalid vertex JSON"));
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["space", "constant", "p", "value", "converged", "seed"]);
    reader.records().map(|r| r.unwrap()).collect()
}

#[test]
fn sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mr.csv");
    let out = geoconst(&["sweep", "--space", "l2:2", "--constant", "mr", "--p", "0:1:0.1", "--starts", "16", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&path);
    assert_eq!(rows.len(), 11);
    assert_eq!(&rows[10][2], "1");
    for r in &rows {
        let v: f64 = r[3].parse().unwrap();
        assert!((v - 1.0).abs() <= 1e-3, "{r:?}");
    }

    let path = dir.path().join("delta.csv");
    let out = geoconst(&["sweep", "--space", "l1:2", "--constant", "delta", "--eps", "0:2:0.25", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let values: Vec<f64> = csv_rows(&path).iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(values.len(), 9);
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{values:?}");

    let out = geoconst(&["sweep", "--space", "l2:2", "--constant", "rho", "--tau", "0.5:1:5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("l2:2,rho,0.5,"));

    let again = geoconst(&["sweep", "--space", "l1:2", "--constant", "delta", "--eps", "0:2:0.25"]);
    assert_eq!(again.stdout, fs::read(&path).unwrap());

    let blocked = dir.path().join("missing-dir").join("out.csv");
    let out = geoconst(&["sweep", "--space", "l2:2", "--constant", "rho", "--tau", "1", "--output", blocked.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    let out = geoconst(&["verify", "--space", "l2:2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["result"]["data"]["summary"], "holds");
    assert_schema_valid(&doc);

    let out = geoconst(&["verify", "--space", "l1:2", "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    assert_schema_valid(&doc);
    let finding = &doc["result"]["data"]["findings"][0];
    assert!((finding["upper_cap"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-12);
    assert!((finding["lower_demand"].as_f64().unwrap() - 2.0).abs() < 1e-2);
    assert!(finding["witness"].is_object());

    let out = geoconst(&["verify", "--space", "l1:2", "--p", "0"]);
    assert_eq!(out.status.code(), Some(0));
}

fn compute_cached(dir: &Path, seed: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoconst"))
        .args(["compute", "--space", "l2:2", "--constant", "mr", "--p", "0.5", "--starts", "8", "--seed", seed])
        .arg("--cache-dir")
        .arg(dir)
        .env_remove(CACHE_ENV)
        .output()
        .unwrap()
}

fn without(mut doc: Value, keys: &[&str]) -> Value {
    for k in keys {
        doc.as_object_mut().unwrap().remove(*k);
    }
    doc
}

#[test]
fn cache_hits_and_misses() {
    let dir = tempfile::tempdir().unwrap();
    let first = json(&compute_cached(dir.path(), "3"));
    assert_eq!(first["cached"], Value::Bool(false));
    let second = json(&compute_cached(dir.path(), "3"));
    assert_eq!(second["cached"], Value::Bool(true));
    assert_eq!(without(first.clone(), &["cached"]), without(second.clone(), &["cached"]));
    assert_schema_valid(&second);

    let other = json(&compute_cached(dir.path(), "4"));
    assert_eq!(other["cached"], Value::Bool(false));

    let parameters = Parameters {
        constant: Some(ConstantKind::Mr),
        p: Some(0.5),
        starts: 8,
        grid: 180,
        max_iterations: 2000,
        ..Parameters::default()
    };
    let space = cli::parse_space("l2:2").unwrap();
    assert!(cache_lookup(dir.path(), &cache_key("compute", &space, &parameters, 3, TOOL_VERSION)).is_some());
    assert!(cache_lookup(dir.path(), &cache_key("compute", &space, &parameters, 3, "999.0.0")).is_none());
}

#[test]
fn corrupt_cache_entry_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let first = json(&compute_cached(dir.path(), "7"));
    let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    fs::write(&entries[0], "{ not json").unwrap();
    let out = compute_cached(dir.path(), "7");
    assert_eq!(out.status.code(), Some(0));
    let again = json(&out);
    assert_eq!(again["cached"], Value::Bool(false));
    assert_eq!(without(first, &["timestamp"]), without(again, &["timestamp"]));
    let repaired: RunRecord = serde_json::from_str(&fs::read_to_string(&entries[0]).unwrap()).unwrap();
    assert!(matches!(repaired.result, Payload::Estimate(_)));
}

#[test]
fn cache_dir_from_environment_and_flag_precedence() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let run = |flag: Option<&Path>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_geoconst"));
        cmd.args(["compute", "--space", "l2:2", "--constant", "rho", "--tau", "0.5", "--starts", "4"]).env(CACHE_ENV, env_dir.path());
        if let Some(f) = flag {
            cmd.arg("--cache-dir").arg(f);
        }
        cmd.output().unwrap()
    };
    assert_eq!(run(None).status.code(), Some(0));
    assert_eq!(fs::read_dir(env_dir.path()).unwrap().count(), 1);
    assert_eq!(json(&run(None))["cached"], Value::Bool(true));
    assert_eq!(json(&run(Some(flag_dir.path())))["cached"], Value::Bool(false));
    assert_eq!(fs::read_dir(flag_dir.path()).unwrap().count(), 1);
}

#[test]
fn identical_flags_identical_bytes() {
    let args = ["compute", "--space", "wl2:2:1,3", "--constant", "dw", "--seed", "9", "--starts", "8"];
    let a = geoconst(&args);
    let b = geoconst(&args);
    let strip = |o: &Output| -> Vec<String> {
        String::from_utf8_lossy(&o.stdout).lines().filter(|l| !l.contains("\"timestamp\"")).map(str::to_string).collect()
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(json(&a)["result"]["data"]["space"]["type"], "weighted_lp");
}

#[test]
fn in_process_runner_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(["geoconst", "compute", "--space", "l2:2", "--constant", "delta", "--eps", "0"], &mut out, &mut err);
    assert_eq!(code, 0);
    let doc: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(value(&doc), 0.0);
    let code = cli::run(["geoconst", "--help"], &mut out, &mut err);
    assert_eq!(code, 0);
}
