use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use singlab_cli::config::{merge_params, parse_config};
use singlab_cli::commands::ScanArgs;

fn singlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singlab")).args(args).env_remove("SINGLAB_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&value).unwrap()
}

fn assert_valid(validator: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:?}\n{doc}");
}

#[test]
fn preset_config_expands() {
    let cfg = parse_config("preset = \"cantor3x3\"").unwrap();
    let ifs = cfg.ifs.unwrap();
    assert_eq!(ifs.dim(), 2);
    assert_eq!(ifs.num_maps(), 4);
}

#[test]
fn out_of_range_ratio_names_the_field() {
    let text = "[ifs]\ndim = 1\n[[ifs.maps]]\nratio = 1.2\ntranslation = [0]\n";
    let err = parse_config(text).unwrap_err();
    assert_eq!(err.code, "config");
    assert!(err.message.contains("maps[0].ratio"), "{}", err.message);
}

#[test]
fn reflection_is_rejected() {
    let text = "[ifs]\ndim = 2\n[[ifs.maps]]\nratio = 0.5\nrotation = [[1, 0], [0, -1]]\ntranslation = [0, 0]\n";
    let err = parse_config(text).unwrap_err();
    assert!(err.message.contains("maps[0].rotation"), "{}", err.message);
    assert!(err.message.contains("det"), "{}", err.message);
}

#[test]
fn unknown_preset_lists_known_ones() {
    let err = parse_config("preset = \"koch\"").unwrap_err();
    assert_eq!(err.code, "config");
    for p in ["cantor3", "cantor3x3", "sierpinski3"] {
        assert!(err.message.contains(p), "{}", err.message);
    }
}

#[test]
fn exact_literals_survive_parsing() {
    let text = "[ifs]\ndim = 1\n[[ifs.maps]]\nratio = \"1/3\"\ntranslation = [0]\n[[ifs.maps]]\nratio = \"1/3\"\ntranslation = [\"2/3\"]\n";
    let ifs = parse_config(text).unwrap().ifs.unwrap();
    assert_eq!(ifs.ratios(), vec![1.0 / 3.0; 2]);
    assert_eq!(ifs.maps()[1].translation(), &[2.0 / 3.0]);
}

#[test]
fn unknown_params_are_rejected() {
    let params: toml::Table = toml::from_str("depth = 2\nbogus = 1").unwrap();
    let err = merge_params(&ScanArgs::default(), &params).unwrap_err();
    assert!(err.message.contains("params.bogus"), "{}", err.message);
}

#[test]
fn dimbound_reports_the_cantor_product_value() {
    let out = singlab(&["dimbound", "--preset", "cantor3x3", "--alphas", "from-file"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let bound = doc["result"]["bound"].as_f64().unwrap();
    assert!((bound - 4.0 * 2f64.ln() / (3.0 * 3f64.ln())).abs() < 1e-12);
    assert!(stdout(&out).contains("0.8412"));
    assert_valid(&schema("report.schema.json"), &doc);
}

#[test]
fn starved_scan_is_partial() {
    let out = singlab(&["scan", "--preset", "cantor3", "--budget-nodes", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "# truncated: true"), "{text}");
    assert!(text.contains("# seed: 0") && text.contains("# budget_nodes: 3"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 4, "header plus three rows");
}

#[test]
fn errors_use_the_envelope() {
    let out = singlab(&["dimbound", "--preset", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_valid(&schema("error.schema.json"), &doc);
    assert_eq!(doc["error"]["code"], "config");

    let out = singlab(&["dimbound", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["error"]["code"], "usage");

    let out = singlab(&["orbit", "--preset", "cantor3", "--x", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["error"]["code"], "outside_attractor");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "preset = \"cantor3\"\nseed = 5\n[budget]\nnodes = 7\n[params]\ndepth = 1\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = singlab(&["scan", "--config", cfg]);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["seed"], 5);
    assert_eq!(doc["budget"]["nodes"], 7);
    assert_eq!(doc["params"]["depth"], 1);
    let out = singlab(&["scan", "--config", cfg, "--seed", "9", "--depth", "2", "--preset", "cantor3x3"]);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["seed"], 9);
    assert_eq!(doc["params"]["depth"], 2);
    assert_eq!(doc["ifs"]["maps"], 4);
    assert_eq!(doc["result"]["rows"].as_array().unwrap().len(), 7, "node budget from the file still applies");
}

#[test]
fn output_file_is_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bound.json");
    let out = singlab(&["dimbound", "--preset", "cantor3x3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["command"], "dimbound");
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1, "no temporary files left behind");
}

#[test]
fn selftest_passes_and_validates() {
    let out = singlab(&["selftest", "--cases", "200", "--deterministic"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["passed"], true);
    assert_valid(&schema("report.schema.json"), &doc);
}

#[test]
fn every_subcommand_emits_a_valid_report() {
    let validator = schema("report.schema.json");
    let runs: [&[&str]; 7] = [
        &["alpha", "--preset", "cantor3x3", "--eps-from", "3", "--eps-to", "5", "--directions", "90"],
        &["frostman", "--preset", "cantor3x3", "--eps-from", "3", "--eps-to", "5"],
        &["rotcocycle", "--preset", "homog(0.5,1.0,3)", "--n-max", "2", "--theta-grid", "8"],
        &["contraction", "--preset", "cantor3", "--budget-samples", "4", "--k-max", "1"],
        &["orbit", "--preset", "interval2", "--x", "0.3", "--epochs", "3"],
        &["scan", "--preset", "cantor3", "--depth", "2"],
        &["dimbound", "--preset", "cantor3x3", "--alphas", "certified"],
    ];
    for args in runs {
        let out = singlab(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_valid(&validator, &doc);
    }
}

#[test]
fn thread_count_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_singlab"))
        .args(["dimbound", "--preset", "cantor3x3"])
        .env("SINGLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_singlab"))
        .args(["dimbound", "--preset", "cantor3x3", "--threads", "2"])
        .env("SINGLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "the flag wins over the environment");
}
