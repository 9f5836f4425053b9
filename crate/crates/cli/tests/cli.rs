use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dvflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dvflow"))
        .args(args)
        .env_remove("OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run_config(text: &str) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), text);
    let out = dir.path().join("out");
    let o = dvflow(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (dir, o)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

const EQUILIBRIUM: &str = r#"
[model]
preset = "generic"
c_p = 1.0
gamma = 2.0
c_mu = 1.0
alpha = 1.0

[grid]
n = 32

[initial]
preset = "equilibrium"

[control]
end_time = 0.1

[output]
interval = 0.02
snapshot_times = [0.05]
plots_svg = true
"#;

const MAX_PRINCIPLE: &str = r#"
[model]
preset = "generic"
c_p = 1.0
gamma = 1.5
c_mu = 1.0
alpha = 1.0

[grid]
n = 64

[initial]
rho_mean = 1.0
rho_terms = [{ k = 1, amplitude = 0.3 }]
u_terms = [{ k = 1, amplitude = 0.05, phase = -1.5707963267948966 }]

[forcing]
kind = "time_only"
terms = [{ k = 0, amplitude = 0.1, envelope = { type = "sin", omega = 1.0 } }]

[control]
end_time = 0.5

[output]
interval = 0.01
"#;

const PINCH: &str = r#"
[model]
preset = "slender_jet"
surface_tension = 1.0
nu = 0.05

[initial]
preset = "jet_pinch"

[control]
end_time = 1.0

[output]
interval = 0.0
"#;

#[test]
fn timeseries_header_matches_golden_file() {
    let (dir, o) = run_config(EQUILIBRIUM);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/timeseries.csv")).unwrap();
    let golden = include_str!("golden/timeseries_header.csv");
    assert_eq!(text.lines().next().unwrap(), golden.trim_end());
    assert!(!text.contains('\r'));
}

#[test]
fn equilibrium_run_has_constant_columns() {
    let (dir, o) = run_config(EQUILIBRIUM);
    assert_eq!(o.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(dir.path().join("out/timeseries.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    for col in [1, 2, 3, 4, 5] {
        let first: f64 = rows[0][col].parse().unwrap();
        for r in &rows {
            let v: f64 = r[col].parse().unwrap();
            assert!((v - first).abs() <= 1e-13 * first.abs().max(1.0), "column {col}");
        }
    }
    assert!(rows[0][17].is_empty());
    assert!(dir.path().join("out/snapshot_0000.csv").exists());
    assert!(dir.path().join("out/plots/energy.svg").exists());
    let s = summary(dir.path());
    assert_eq!(s["status"], "completed");
    // resolved defaults are echoed
    assert_eq!(s["config"]["control"]["cfl_adv"], 0.4);
    assert_eq!(s["config"]["grid"]["scheme"], "spectral");
}

#[test]
fn max_principle_scenario_reports_ok() {
    let (dir, o) = run_config(MAX_PRINCIPLE);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path());
    assert_eq!(s["max_principle"]["ok"], true);
    assert_eq!(s["density_floor"]["ok"], true);
}

#[test]
fn pinch_exits_with_vacuum_status() {
    let (dir, o) = run_config(PINCH);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path());
    assert_eq!(s["status"], "vacuum_approach");
    assert!(s["min_rho"]["t"].as_f64().unwrap() > 0.0);
    let x = s["min_rho"]["x"].as_f64().unwrap();
    assert!(x > 0.0 && x <= 1.0);
}

#[test]
fn runs_are_byte_reproducible() {
    let (a, _) = run_config(MAX_PRINCIPLE);
    let (b, _) = run_config(MAX_PRINCIPLE);
    for f in ["timeseries.csv", "summary.json"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn config_errors_exit_4() {
    let (_, o) = run_config("[model]\npreset = \"generic\"\nc_p = 1.0\ngamma = 2.0\nc_mu = 1.0\nalpha = 1.0\nbogus = 3\n");
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let (_, o) = run_config(
        "[model]\npreset = \"generic\"\nc_p = 1.0\ngamma = 2.0\nc_mu = 1.0\nalpha = 1.0\n[initial]\nrho_mean = 0.5\nrho_terms = [{ k = 1, amplitude = 1.0 }]\n",
    );
    assert_eq!(o.status.code(), Some(4));

    let o = dvflow(&["run", "--config", "/nonexistent/config.toml", "--out", "/tmp/x"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn out_dir_env_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), EQUILIBRIUM);
    let target = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_dvflow"))
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(target.join("summary.json").exists());
}

fn sweep_config(grid: &str) -> String {
    format!(
        "[model]\npreset = \"generic\"\nc_p = 1.0\ngamma = 2.0\nc_mu = 1.0\nalpha = 1.0\n[grid]\nn = 32\n[control]\nend_time = 0.05\n[output]\ninterval = 0.01\n[sweep]\n{grid}\n"
    )
}

#[test]
fn sweep_rows_are_sorted_by_tuple() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &sweep_config("gamma = [2.0, 1.5]\nalpha = [1.0, 0.5]\nc_p = [1.0]\namplitude = [0.2]"),
    );
    let out = dir.path().join("out");
    let o = dvflow(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let keys: Vec<(f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(&r[5], "completed");
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(keys, vec![(1.5, 0.5), (1.5, 1.0), (2.0, 0.5), (2.0, 1.0)]);
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &sweep_config("gamma = []"));
    let out = dir.path().join("out");
    let o = dvflow(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn classify_prints_regime_table() {
    let o = dvflow(&["classify", "--c-p", "1", "--gamma", "1.5", "--c-mu", "1", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("applies"));
    let o = dvflow(&["classify", "--gamma", "1.5"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn verify_subset_passes_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = dvflow(&["verify", "--only", "jet_mapping,regime_table", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_with_mutation_fails_named_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = dvflow(&["verify", "--only", "w_equation", "--mutate", "w-quadratic", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL w_equation"));
}

#[test]
fn verify_rejects_unknown_check() {
    let o = dvflow(&["verify", "--only", "nonsense", "--out", "/tmp/dvflow-unused"]);
    assert_eq!(o.status.code(), Some(4));
}
