use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scramble::phase::{read_csv, SweepResult};
use scramble_cli::manifest::RunManifest;
use tempfile::TempDir;

fn scramble(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scramble")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const MINIMAL: &str = r#"
model = "fruc"
gamma = 0.5
n_list = [4]
p_grid = [0.0, 0.5]
tau_grid = [0.0, 0.25]
realizations = 3
seed = 7
quantities = ["negativity", "D_RS"]
"#;

fn sweep(dir: &Path, config: &Path, out: &str, extra: &[&str]) -> Output {
    let out_dir = dir.join(out);
    let mut args = vec!["sweep", "--config", config.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    scramble(&args)
}

#[test]
fn minimal_sweep_writes_three_files() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sweep.toml", MINIMAL);
    let out = sweep(tmp.path(), &cfg, "out", &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let dir = tmp.path().join("out");
    for f in ["sweep.csv", "sweep.json", "manifest.json"] {
        assert!(dir.join(f).is_file(), "{f} missing");
    }
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("N,p,tau,realization,quantity,value"));
    // 2 p values x 2 tau values x 3 realizations x 2 quantities
    assert_eq!(csv.lines().count(), 1 + 24);

    let manifest = RunManifest::read(&dir).unwrap();
    assert_eq!(manifest.master_seed, 7);
    assert_eq!(manifest.outputs.len(), 2);
    assert!(manifest.finished >= manifest.started);
    assert!(manifest.mismatches(&dir).is_empty());
}

#[test]
fn csv_and_json_carry_the_same_records() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sweep.toml", MINIMAL);
    assert_eq!(code(&sweep(tmp.path(), &cfg, "out", &[])), 0);
    let dir = tmp.path().join("out");
    let json: SweepResult = serde_json::from_str(&fs::read_to_string(dir.join("sweep.json")).unwrap()).unwrap();
    let csv = read_csv(fs::read_to_string(dir.join("sweep.csv")).unwrap().as_bytes()).unwrap();
    assert_eq!(json.records, csv);
    let again: SweepResult = serde_json::from_str(&serde_json::to_string(&json).unwrap()).unwrap();
    assert_eq!(again, json);
}

#[test]
fn missing_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let text = MINIMAL.replace("gamma = 0.5\n", "");
    let cfg = write(tmp.path(), "sweep.toml", &text);
    let out = sweep(tmp.path(), &cfg, "out", &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("gamma"), "{}", stderr(&out));
}

#[test]
fn bad_value_reports_its_line() {
    let tmp = TempDir::new().unwrap();
    let text = MINIMAL.replace("realizations = 3", "realizations = \"three\"");
    let cfg = write(tmp.path(), "sweep.toml", &text);
    let out = sweep(tmp.path(), &cfg, "out", &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 7"), "{}", stderr(&out));
}

#[test]
fn oversized_sweep_hits_the_resource_guard() {
    let tmp = TempDir::new().unwrap();
    let text = MINIMAL.replace("n_list = [4]", "n_list = [32]");
    let cfg = write(tmp.path(), "sweep.toml", &text);
    let out = sweep(tmp.path(), &cfg, "out", &[]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn seed_flag_overrides_and_reruns_reproduce() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sweep.toml", MINIMAL);
    assert_eq!(code(&sweep(tmp.path(), &cfg, "a", &["--seed", "11"])), 0);
    assert_eq!(code(&sweep(tmp.path(), &cfg, "b", &["--seed", "11", "--threads", "1"])), 0);
    assert_eq!(code(&sweep(tmp.path(), &cfg, "c", &[])), 0);
    let read = |d: &str| fs::read(tmp.path().join(d).join("sweep.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));

    let manifest = RunManifest::read(&tmp.path().join("a")).unwrap();
    assert_eq!(manifest.master_seed, 11);
    let echo = write(tmp.path(), "echo.json", &manifest.config.to_string());
    assert_eq!(code(&sweep(tmp.path(), &echo, "d", &[])), 0);
    let rerun = RunManifest::read(&tmp.path().join("d")).unwrap();
    assert_eq!(rerun.outputs, manifest.outputs);
}

#[test]
fn manifest_detects_single_byte_corruption() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sweep.toml", MINIMAL);
    assert_eq!(code(&sweep(tmp.path(), &cfg, "out", &[])), 0);
    let dir = tmp.path().join("out");
    let manifest = RunManifest::read(&dir).unwrap();
    for name in ["sweep.csv", "sweep.json"] {
        let path = dir.join(name);
        let original = fs::read(&path).unwrap();
        for at in [0, original.len() / 2, original.len() - 1] {
            let mut bytes = original.clone();
            bytes[at] ^= 0x01;
            fs::write(&path, &bytes).unwrap();
            assert_eq!(manifest.mismatches(&dir), vec![name.to_string()]);
        }
        fs::write(&path, &original).unwrap();
    }
    assert!(manifest.mismatches(&dir).is_empty());
}

#[test]
fn threads_env_var_is_accepted() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sweep.toml", MINIMAL);
    let out_dir = tmp.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_scramble"))
        .env("SCRAMBLE_THREADS", "2")
        .args(["sweep", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

fn verify(dir: &Path, params: &str) -> (Output, String) {
    let cfg = write(dir, "theory.toml", params);
    let out_dir = dir.join("report");
    let out = scramble(&["verify-theory", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    let report = fs::read_to_string(out_dir.join("verify_theory.csv")).unwrap_or_default();
    (out, report)
}

fn report_row<'a>(report: &'a str, quantity: &str, relation: &str) -> Vec<&'a str> {
    report
        .lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|c| c[0] == quantity && c[1] == relation)
        .unwrap_or_else(|| panic!("no {quantity} row"))
}

#[test]
fn verify_theory_two_qubits() {
    let tmp = TempDir::new().unwrap();
    let (out, report) = verify(tmp.path(), "n = 2\ngamma = 0.5\np = 0.5\nsamples = 10000\nseed = 3\n");
    assert_eq!(code(&out), 0, "{report}");
    assert_eq!(report.lines().next(), Some("quantity,relation,closed_form,mc_mean,mc_se,pass"));
    let row = report_row(&report, "purity_S", "eq");
    assert!((row[2].parse::<f64>().unwrap() - 0.6).abs() < 1e-12);
    assert_eq!(row[5], "true");
}

#[test]
fn verify_theory_drs_bound() {
    let tmp = TempDir::new().unwrap();
    let (out, report) = verify(tmp.path(), "n = 6\ngamma = 0.3333333333333333\np = 0.3333333333333333\nsamples = 300\n");
    assert_eq!(code(&out), 0, "{report}");
    assert_eq!(report_row(&report, "D_RS", "le")[5], "true");
}

#[test]
fn corrupted_closed_form_fails_verification() {
    let tmp = TempDir::new().unwrap();
    let (out, report) =
        verify(tmp.path(), "n = 2\ngamma = 0.5\np = 0.5\nsamples = 2000\ncorrupt_closed_form = true\n");
    assert_eq!(code(&out), 1);
    assert_eq!(report_row(&report, "purity_S", "eq")[5], "false");
}

#[test]
fn zero_budget_is_a_parameter_error() {
    let tmp = TempDir::new().unwrap();
    let (out, _) = verify(tmp.path(), "n = 2\ngamma = 0.5\np = 0.5\nsamples = 0\n");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("budget"));
}

fn synthetic_sweep(sizes: &[u32]) -> String {
    let mut s = String::from("N,p,tau,realization,quantity,value\n");
    for &n in sizes {
        for i in 0..=5 {
            let p = i as f64 * 0.2;
            for tau in [0.0, 1.0] {
                for r in 0..2 {
                    let v = (n as f64 * (p - 0.4)).exp();
                    s += &format!("{n},{p:.16e},{tau:.16e},{r},negativity,{v:.16e}\n");
                }
            }
        }
    }
    s
}

fn critical(dir: &Path, csv: &str, extra: &[&str]) -> (Output, String) {
    let path = write(dir, "sweep.csv", csv);
    let out_dir = dir.join("crit");
    let mut args = vec![
        "critical",
        "--sweep",
        path.to_str().unwrap(),
        "--quantity",
        "negativity",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = scramble(&args);
    (out, fs::read_to_string(out_dir.join("critical.csv")).unwrap_or_default())
}

#[test]
fn critical_on_synthetic_crossing() {
    let tmp = TempDir::new().unwrap();
    let (out, csv) = critical(tmp.path(), &synthetic_sweep(&[4, 8, 12]), &["--direction", "p"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("coordinate,critical_value,err_lo,err_hi,flag"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let f = |i: usize| row[i].parse::<f64>().unwrap();
        assert!((f(1) - 0.4).abs() < 1e-9, "{row:?}");
        assert!(f(2).abs() < 1e-9 && f(3).abs() < 1e-9, "{row:?}");
        assert_eq!(row[4], "ok");
    }
}

#[test]
fn critical_needs_three_sizes() {
    let tmp = TempDir::new().unwrap();
    let (out, _) = critical(tmp.path(), &synthetic_sweep(&[4, 8]), &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("need >= 3 sizes"), "{}", stderr(&out));
}

#[test]
fn critical_rejects_malformed_csv() {
    let tmp = TempDir::new().unwrap();
    let mut csv = synthetic_sweep(&[4, 8, 12]);
    csv += "4,0.5,not-a-number,0,negativity,1.0\n";
    let (out, _) = critical(tmp.path(), &csv, &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));
}

#[test]
fn fruc_desk_sweep_negativity_crossing() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "sweep.toml",
        r#"
model = "fruc"
gamma = 0.2
n_list = [4, 6, 8, 10]
p_grid = "0:1"
tau_grid = [1.0]
realizations = 20
seed = 5
quantities = ["negativity"]
"#,
    );
    let out = sweep(tmp.path(), &cfg, "out", &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let path = tmp.path().join("out").join("sweep.csv");
    let out_dir = tmp.path().join("crit");
    let out = scramble(&[
        "critical",
        "--sweep",
        path.to_str().unwrap(),
        "--quantity",
        "negativity",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("critical.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let value: f64 = row[1].parse().unwrap();
    assert!((0.25..=0.55).contains(&value), "{row:?}");
}

#[test]
fn self_averaging_writes_chi_table() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "chi.toml", "n_list = [4, 6]\nrealizations = 20\np = 0.5\ngamma = 0.5\n");
    let out_dir = tmp.path().join("out");
    let out = scramble(&["self-averaging", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("self_averaging.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("N,chi1,chi2,"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&scramble(&["frobnicate"])), 2);
    assert_eq!(code(&scramble(&["sweep"])), 2);
    assert_eq!(code(&scramble(&["--help"])), 0);
}
