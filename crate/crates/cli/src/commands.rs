use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use scramble::phase::{
    self, build_surfaces, estimate_critical_line, read_csv, write_csv, Quantity, ScanDirection, SweepConfig,
};
use scramble::theory::{self, MomentKind, TheoryParams};

use crate::error::{CliError, CliResult, Status};
use crate::manifest::{hash_outputs, unix_now, RunManifest};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const THEORY_REPORT: &str = "verify_theory.csv";
pub const CRITICAL_CSV: &str = "critical.csv";
pub const CHI_CSV: &str = "self_averaging.csv";

const N_SE: f64 = 5.0;
const SLACK: f64 = 1e-12;

/// Reads a TOML file, or JSON when the extension is `.json`.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.trim_end())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
}

fn finish(
    command: &str,
    seed: u64,
    config: impl Serialize,
    started: f64,
    dir: &Path,
    outputs: &[&str],
) -> CliResult<()> {
    let manifest = RunManifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed: seed,
        config: serde_json::to_value(config).map_err(|e| CliError::usage(e.to_string()))?,
        started,
        finished: unix_now(),
        outputs: hash_outputs(dir, outputs)?,
    };
    manifest.write(dir)
}

/// Runs a sweep and writes `sweep.csv`, `sweep.json` and the manifest.
pub fn cmd_sweep(config_path: &Path, out_dir: &Path, seed: Option<u64>) -> CliResult<Status> {
    let started = unix_now();
    let mut config: SweepConfig = load_config(config_path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    phase::check_resources(&config)?;
    let result = phase::run_sweep(&config)?;
    for c in &result.cells {
        eprintln!("N={} p={:.6} tau={:.6} {} = {:.6e} +- {:.2e} ({})", c.n, c.p, c.tau, c.quantity, c.mean, c.se, c.count);
    }
    create_dir(out_dir)?;
    write_file(out_dir, SWEEP_CSV, |w| write_csv(&result.records, w))?;
    write_file(out_dir, SWEEP_JSON, |w| {
        serde_json::to_writer(&mut *w, &result)?;
        writeln!(w)
    })?;
    finish("sweep", config.seed, &config, started, out_dir, &[SWEEP_CSV, SWEEP_JSON])?;
    Ok(Status::Success)
}

/// Parameters of `verify-theory`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryCheck {
    pub n: u32,
    pub gamma: f64,
    pub p: f64,
    /// Monte-Carlo realizations.
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    /// Test hook: scales every closed-form value by 1.5.
    #[serde(default)]
    pub corrupt_closed_form: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    AtMost,
    AtLeast,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Equal => "eq",
            Relation::AtMost => "le",
            Relation::AtLeast => "ge",
        }
    }
}

/// One line of the theory report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub quantity: String,
    pub relation: Relation,
    pub closed_form: f64,
    pub mean: f64,
    pub se: f64,
    pub pass: bool,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn row(quantity: &str, relation: Relation, closed_form: f64, xs: &[f64]) -> ReportRow {
    let (mean, se) = mean_se(xs);
    let tol = N_SE * se + SLACK * closed_form.abs().max(1.0);
    let pass = match relation {
        Relation::Equal => (mean - closed_form).abs() <= tol,
        Relation::AtMost => mean <= closed_form + tol,
        Relation::AtLeast => mean >= closed_form - tol,
    };
    ReportRow { quantity: quantity.into(), relation, closed_form, mean, se, pass }
}

/// Compares the Haar closed forms and bounds with global-Haar Monte Carlo.
pub fn theory_report(check: &TheoryCheck) -> CliResult<Vec<ReportRow>> {
    if check.samples == 0 {
        return Err(CliError::usage("invalid parameter: Monte-Carlo budget must be at least 1"));
    }
    let q = TheoryParams::new(check.n, check.gamma, check.p)?;
    let n_r = (check.gamma * check.n as f64).round() as usize;
    let n_s = (check.p * check.n as f64).round() as usize;
    let samples = phase::haar_samples(check.n as usize, n_r, n_s, check.samples, check.seed)?;
    let scale = if check.corrupt_closed_form { 1.5 } else { 1.0 };
    let col = |f: fn(&phase::HaarSample) -> f64| samples.iter().map(f).collect::<Vec<_>>();

    let mut rows = Vec::new();
    for kind in MomentKind::ALL {
        let xs = match kind {
            MomentKind::PurityS => col(|s| s.purity_s),
            MomentKind::PurityRs => col(|s| s.purity_rs),
            MomentKind::ProbSq => col(|s| s.prob_sq),
            MomentKind::CondWeightSq => col(|s| s.cond_weight_sq),
        };
        rows.push(row(kind.name(), Relation::Equal, scale * theory::replica2_moment(kind, &q), &xs));
    }
    rows.push(row(
        "distance_mixed",
        Relation::AtMost,
        scale * theory::bound_decoupling(&q),
        &col(|s| s.distance_mixed),
    ));
    let mi = theory::bound_mutual_information(&q);
    if mi.applicable {
        rows.push(row("mutual_info", Relation::AtLeast, scale * mi.value, &col(|s| s.mutual_info)));
    }
    rows.push(row("D_RS", Relation::AtMost, scale * theory::bound_drs_upper(&q), &col(|s| s.d_rs)));
    rows.push(row("D_RS", Relation::AtLeast, scale * theory::bound_drs_lower(&q), &col(|s| s.d_rs)));
    Ok(rows)
}

pub fn cmd_verify_theory(params_path: &Path, out_dir: &Path, seed: Option<u64>) -> CliResult<Status> {
    let started = unix_now();
    let mut check: TheoryCheck = load_config(params_path)?;
    if let Some(s) = seed {
        check.seed = s;
    }
    let rows = theory_report(&check)?;
    create_dir(out_dir)?;
    write_file(out_dir, THEORY_REPORT, |w| {
        writeln!(w, "quantity,relation,closed_form,mc_mean,mc_se,pass")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{:.16e},{:.16e},{:.16e},{}",
                r.quantity,
                r.relation.symbol(),
                r.closed_form,
                r.mean,
                r.se,
                r.pass
            )?;
        }
        Ok(())
    })?;
    for r in &rows {
        println!(
            "{:<16} {} {:>14.8e}  mc {:>14.8e} +- {:.2e}  {}",
            r.quantity,
            r.relation.symbol(),
            r.closed_form,
            r.mean,
            r.se,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    finish("verify-theory", check.seed, &check, started, out_dir, &[THEORY_REPORT])?;
    Ok(if rows.iter().all(|r| r.pass) { Status::Success } else { Status::VerificationFailed })
}

#[derive(Serialize)]
struct CriticalArgs<'a> {
    sweep: &'a Path,
    quantity: Quantity,
    direction: ScanDirection,
}

/// Estimates the critical line of `quantity` from a sweep CSV.
pub fn cmd_critical(sweep_csv: &Path, quantity: &str, direction: ScanDirection, out_dir: &Path) -> CliResult<Status> {
    let started = unix_now();
    let quantity: Quantity = quantity.parse()?;
    let file = File::open(sweep_csv).map_err(|e| CliError::io(sweep_csv, e))?;
    let records = read_csv(BufReader::new(file))
        .map_err(|e| CliError::usage(format!("{}: {e}", sweep_csv.display())))?;
    let surfaces = build_surfaces(&records, quantity)?;
    let estimates = estimate_critical_line(&surfaces, quantity, direction, &[])?;
    create_dir(out_dir)?;
    write_file(out_dir, CRITICAL_CSV, |w| {
        writeln!(w, "coordinate,critical_value,err_lo,err_hi,flag")?;
        for e in &estimates {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                e.coordinate,
                e.value,
                e.value - e.lower,
                e.upper - e.value,
                e.flag.name()
            )?;
        }
        Ok(())
    })?;
    let args = CriticalArgs { sweep: sweep_csv, quantity, direction };
    finish("critical", 0, &args, started, out_dir, &[CRITICAL_CSV])?;
    Ok(Status::Success)
}

/// Parameters of `self-averaging`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfAveragingConfig {
    pub n_list: Vec<u32>,
    pub realizations: u64,
    pub p: f64,
    pub gamma: f64,
    #[serde(default)]
    pub seed: u64,
}

pub fn cmd_self_averaging(config_path: &Path, out_dir: &Path, seed: Option<u64>) -> CliResult<Status> {
    let started = unix_now();
    let mut config: SelfAveragingConfig = load_config(config_path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let chi = phase::self_averaging_chi(&config.n_list, config.realizations, config.p, config.gamma, config.seed)?;
    create_dir(out_dir)?;
    write_file(out_dir, CHI_CSV, |w| {
        writeln!(w, "N,chi1,chi2,excluded,cond_weight_sq,cond_weight_sq_se,prob_sq,prob_sq_se")?;
        for c in &chi {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                c.n, c.chi1, c.chi2, c.excluded, c.cond_weight_sq, c.cond_weight_sq_se, c.prob_sq, c.prob_sq_se
            )?;
        }
        Ok(())
    })?;
    for c in &chi {
        println!("N={:<3} chi1={:.6e} chi2={:.6e}", c.n, c.chi1, c.chi2);
    }
    finish("self-averaging", config.seed, &config, started, out_dir, &[CHI_CSV])?;
    Ok(Status::Success)
}
