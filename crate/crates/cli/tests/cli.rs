use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use imstn::engine::{slot_csv_header, SweepAxis};
use imstn_cli::{parse_spec, summary_header, ExperimentSpec};

const SMALL: &str = r#"{
  "name": "small",
  "base": {
    "horizon_slots": 40,
    "constellation": {"polar_planes": 2, "inclined_planes": 0, "satellites_per_polar_plane": 3}
  },
  "sweep": {"axis": "beta", "values": [0.2, 0.8]}
}"#;

fn imstn(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_imstn"));
    cmd.args(args).env_remove("IMSTN_OUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_spec(dir: &Path, text: &str) -> String {
    let path = dir.join("spec.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn run_writes_golden_headers_into_new_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), SMALL);
    let out = tmp.path().join("a/b/c");
    let o = imstn(&["run", &spec, "--out-dir", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let summary = first_line(&out.join("summary.csv"));
    assert_eq!(summary, summary_header(SweepAxis::Beta).join(","));
    assert!(summary.starts_with("beta,seed,averaged_slots,"), "{summary}");
    assert_eq!(fs::read_to_string(out.join("summary.csv")).unwrap().lines().count(), 3);

    let slots = out.join("run_001.csv");
    assert_eq!(first_line(&slots), slot_csv_header(4).join(","));
    assert_eq!(fs::read_to_string(&slots).unwrap().lines().count(), 41);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("runs=2"), "{stdout}");
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(imstn(&["run", &spec, "--out-dir", a.to_str().unwrap()], &[]).status.success());
    assert!(imstn(&["run", &spec, "--out-dir", b.to_str().unwrap(), "--parallel", "2"], &[]).status.success());
    for f in ["summary.csv", "run_000.csv", "run_001.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_override_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(imstn(&["run", &spec, "--out-dir", a.to_str().unwrap(), "--seed", "1"], &[]).status.success());
    assert!(imstn(&["run", &spec, "--out-dir", b.to_str().unwrap(), "--seed", "2"], &[]).status.success());
    assert_ne!(fs::read(a.join("run_000.csv")).unwrap(), fs::read(b.join("run_000.csv")).unwrap());
}

#[test]
fn env_var_sets_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), SMALL);
    let root = tmp.path().join("root");
    let o = imstn(&["run", &spec], &[("IMSTN_OUT_DIR", &root)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(root.join("small/summary.csv").is_file());
}

#[test]
fn dump_defaults_round_trips() {
    let o = imstn(&["dump-defaults"], &[]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(parse_spec(&text, "stdout").unwrap(), ExperimentSpec::default());
}

#[test]
fn invalid_specs_fail_with_field_name() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"base": {"control": {"beta": 2.0}}}"#, "beta"),
        (r#"{"base": {"horizon_slots": "many"}}"#, "horizon_slots"),
        (r#"{"bogus": 1}"#, "bogus"),
        (r#"{"sweep": {"axis": "beta", "values": []}}"#, "sweep"),
    ];
    for (text, needle) in cases {
        let spec = write_spec(tmp.path(), text);
        let o = imstn(&["run", &spec, "--out-dir", tmp.path().join("x").to_str().unwrap()], &[]);
        assert!(!o.status.success(), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{text}: {err}");
    }
    let o = imstn(&["run", tmp.path().join("missing.json").to_str().unwrap()], &[]);
    assert!(!o.status.success());
}

#[test]
fn recipes_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let spec = imstn_cli::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(spec.sweep.is_some(), "{}", path.display());
        n += 1;
    }
    assert_eq!(n, 7);
}
