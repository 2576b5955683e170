#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn gridconf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridconf"))
        .args(args)
        .env_remove("GRIDCONF_DATA_DIR")
        .output()
        .expect("gridconf runs")
}

/// Runs `gridconf` and panics with its stderr unless it exits 0.
pub fn gridconf_ok(args: &[&str]) -> String {
    let out = gridconf(args);
    assert!(
        out.status.success(),
        "gridconf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("file exists")).expect("valid JSON")
}

pub fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"))
}

pub fn assert_schema(name: &str, instance: &Value) {
    let schema = read_json(&schema_path(name));
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| e.to_string())
        .collect();
    assert!(
        errors.is_empty(),
        "{name} schema violations: {errors:?}\n{instance:#}"
    );
}

pub fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .expect("csv opens")
        .records()
        .map(|r| r.expect("csv row"))
        .collect()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}
