use std::path::Path;
use std::process::{Command, Output};

use carlab::report::from_json;

fn carlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carlab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn passing_suite_exits_zero_with_versioned_json() {
    let out = carlab(&["run", "--suite", "no_event"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["schema_version"], 1);
    assert_eq!(value["status"], "pass");
    let report = from_json(&text).unwrap();
    let suite = report.suite("no_event").unwrap();
    assert!(suite.checks.iter().all(|c| !c.anchor.is_empty()));
    assert!(suite.checks.iter().any(|c| c.negative));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let a = carlab(&["run", "--suite", "no_event", "--seed", "11"]);
    let b = carlab(&["run", "--suite", "no_event", "--seed", "11"]);
    let c = carlab(&["run", "--suite", "no_event", "--seed", "12"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn csv_has_one_row_per_check() {
    let out = carlab(&["run", "--suite", "no_event", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(reader.headers().unwrap(), vec!["suite", "check", "value", "tol", "status", "anchor"]);
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    let json = from_json(&String::from_utf8(carlab(&["run", "--suite", "no_event"]).stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), json.suites[0].checks.len());
    assert!(rows.iter().all(|r| &r[0] == "no_event" && (&r[4] == "PASS" || &r[4] == "FAIL")));
}

#[test]
fn text_output_is_a_summary() {
    let out = carlab(&["run", "--suite", "no_event", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("carlab run no_event"));
    assert!(text.contains("[no_event] PASS"));
}

#[test]
fn sweep_csv_is_a_convergence_table() {
    let out = carlab(&["sweep", "--target", "picard_n", "--levels", "4", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(reader.headers().unwrap(), vec!["parameter", "error", "ratio"]);
    assert_eq!(reader.records().count(), 4);
}

#[test]
fn out_dir_receives_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested");
    let out = carlab(&["sweep", "--target", "small_time_t", "--levels", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(path.join("report.json").is_file());
    let table = std::fs::read_to_string(path.join("small_time_t_small_time_link_order.csv")).unwrap();
    assert!(table.starts_with("parameter,error,ratio"));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&carlab(&["run", "--suite", "bogus"])), 2);
    assert_eq!(code(&carlab(&["run"])), 2);
    assert_eq!(code(&carlab(&["sweep", "--target", "kraus_n", "--levels", "2"])), 2);
    assert_eq!(code(&carlab(&["sweep", "--target", "nope", "--levels", "4"])), 2);
    assert_eq!(code(&carlab(&["run", "--suite", "no_event", "--format", "xml"])), 2);
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let out = carlab(&["run", "--suite", "no_event", "--out", target.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot write"));
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "grid_pionts = 8\n");
    assert_eq!(code(&carlab(&["run", "--suite", "no_event", "--config", &unknown])), 2);
    let invalid = write_config(dir.path(), "grid_points = 200\n");
    assert_eq!(code(&carlab(&["run", "--suite", "no_event", "--config", &invalid])), 2);
    let nested = write_config(dir.path(), "[section]\nseed = 1\n");
    assert_eq!(code(&carlab(&["run", "--suite", "no_event", "--config", &nested])), 2);
    assert_eq!(code(&carlab(&["run", "--suite", "no_event", "--config", "/nonexistent/cfg.toml"])), 2);
}

#[test]
fn config_file_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = \"small\"\nseed = 5\nno_event_dim = 3\n");
    let from_file =
        from_json(&String::from_utf8(carlab(&["run", "--suite", "no_event", "--config", &cfg]).stdout).unwrap())
            .unwrap();
    assert_eq!((from_file.seed, from_file.preset.as_str()), (5, "small"));
    let overridden = from_json(
        &String::from_utf8(carlab(&["run", "--suite", "no_event", "--config", &cfg, "--seed", "9"]).stdout).unwrap(),
    )
    .unwrap();
    assert_eq!(overridden.seed, 9);
}

#[test]
fn shipped_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["default.toml", "quick.toml"] {
        let cfg = carlab::ExperimentConfig::load(&root.join(name)).unwrap();
        cfg.validate().unwrap();
    }
    let default = carlab::ExperimentConfig::load(&root.join("default.toml")).unwrap();
    assert_eq!(default, carlab::ExperimentConfig::default());
}
