//! The five subcommands. Each returns a report and writes its artifacts; the
//! binary maps reports to exit codes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use taxis_core::diagnostics::{
    audit_inequality, bisect_constant, boundedness_monitor, check_mass_conservation, check_w_bound, gronwall_check,
    gronwall_window, windowed, AuditConstants, AuditReport, BoundednessReport, DiagnosticsRecord, GronwallInputs,
    GronwallReport, Inequality, MassReport, WBoundReport,
};
use taxis_core::model::{validate_initial_data, validate_resupply, InitialDataReport, ResupplyReport};
use taxis_core::stepper::{run, SnapshotSchedule, Trajectory};
use taxis_core::weakform::{
    calibrate_allowance, eps_refinement, evaluate, random_bumps, v_mass_inequality, EpsLadder, RefinementTable,
    TestFunction, VMassReport, V_MASS_TOL,
};
use thiserror::Error;

use crate::config::{load_config, ConfigError, RunConfig};
use crate::io::{
    read_diagnostics, read_json, write_diagnostics, write_json, write_snapshot, IoError, Manifest, ManifestEntry,
};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Setup(String),
}

fn setup<E: std::fmt::Display>(e: E) -> CommandError {
    CommandError::Setup(e.to_string())
}

fn ensure_dir(dir: &Path) -> Result<(), CommandError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Fs { path: dir.display().to_string(), source }.into())
}

/// Resupply admissibility is checked over unit windows up to this horizon at least.
const RESUPPLY_HORIZON: f64 = 1.0;

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub initial: InitialDataReport,
    pub resupply: ResupplyReport,
    pub admissible: bool,
}

pub fn cmd_validate(config_path: &Path) -> Result<ValidateReport, CommandError> {
    let cfg = load_config(config_path)?;
    validate_config(&cfg)
}

pub fn validate_config(cfg: &RunConfig) -> Result<ValidateReport, CommandError> {
    let initial = validate_initial_data(&cfg.initial_data());
    let spec = cfg.resupply_spec().map_err(setup)?;
    let horizon = cfg.model.t_final.max(RESUPPLY_HORIZON);
    let resupply = validate_resupply(&spec, &cfg.grid, 1.0, horizon).map_err(setup)?;
    let admissible = initial.passed() && resupply.admissible;
    Ok(ValidateReport { initial, resupply, admissible })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortRecord {
    pub invariant: String,
    pub message: String,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: String,
    pub completed: bool,
    pub abort: Option<AbortRecord>,
    pub t_reached: f64,
    pub steps: usize,
    pub beta: f64,
    pub lambda: f64,
    pub w0_sup: f64,
    pub r_star: f64,
    pub min_u: f64,
    pub min_v: f64,
    pub min_w: f64,
    pub clipped_cells: usize,
    pub mass: MassReport,
    pub w_bound: WBoundReport,
    /// Absent when the run recorded fewer than three samples.
    pub monitor: Option<BoundednessReport>,
    pub all_no_growth: Option<bool>,
}

fn schedule(stride: usize) -> SnapshotSchedule {
    if stride == 0 {
        SnapshotSchedule::FinalOnly
    } else {
        SnapshotSchedule::Stride(stride)
    }
}

fn simulate(cfg: &RunConfig, schedule: SnapshotSchedule) -> Result<Trajectory, CommandError> {
    let report = validate_config(cfg)?;
    if !report.admissible {
        return Err(CommandError::Setup(format!(
            "configuration is not admissible: {}",
            report.initial.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
        )));
    }
    let spec = cfg.resupply_spec().map_err(setup)?;
    run(&cfg.model, &spec, &cfg.initial_data(), schedule).map_err(setup)
}

/// Writes `diagnostics.csv`, snapshots with `manifest.json`, and `run_report.json`.
pub fn cmd_run(config_path: &Path, out: Option<&Path>) -> Result<(RunReport, PathBuf), CommandError> {
    let cfg = load_config(config_path)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.directory.clone());
    let report = run_to_dir(&cfg, &dir)?;
    Ok((report, dir))
}

pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<RunReport, CommandError> {
    ensure_dir(dir)?;
    let traj = simulate(cfg, schedule(cfg.output.snapshot_stride))?;
    let wants = |f: &str| cfg.output.formats.iter().any(|x| x == f);

    if wants("csv") {
        write_diagnostics(&dir.join("diagnostics.csv"), &traj.diagnostics)?;
    }
    if wants("binary") {
        let mut entries = Vec::new();
        for (index, s) in traj.snapshots.iter().enumerate() {
            let mut files = Vec::new();
            for (name, f) in [("u", &s.u), ("v", &s.v), ("w", &s.w)] {
                let file = format!("snap_{index:05}_{name}.bin");
                write_snapshot(&dir.join(&file), name, f, s.t)?;
                files.push(file);
            }
            entries.push(ManifestEntry { index, t: s.t, files });
        }
        let g = cfg.grid;
        let manifest = Manifest { nx: g.nx(), ny: g.ny(), lx: g.lx(), ly: g.ly(), snapshots: entries };
        write_json(&dir.join("manifest.json"), &manifest)?;
    }

    let spec = cfg.resupply_spec().map_err(setup)?;
    let w0_sup = traj.initial.w.max();
    let r_star = spec.r_star();
    let d = &traj.diagnostics;
    let monitor = if d.len() >= 3 { Some(boundedness_monitor(d).map_err(setup)?) } else { None };
    let fold =
        |f: fn(&taxis_core::stepper::StepReport) -> f64, init: f64| traj.steps.iter().map(f).fold(init, f64::min);
    let report = RunReport {
        config: cfg.to_text(),
        completed: traj.completed(),
        abort: traj.abort.as_ref().map(|e| AbortRecord {
            invariant: e.invariant().to_string(),
            message: e.to_string(),
            t: traj.final_state.t,
        }),
        t_reached: traj.final_state.t,
        steps: traj.steps.len(),
        beta: cfg.model.beta,
        lambda: cfg.model.lambda,
        w0_sup,
        r_star,
        min_u: fold(|s| s.min_u, traj.initial.u.min()),
        min_v: fold(|s| s.min_v, traj.initial.v.min()),
        min_w: fold(|s| s.min_w, traj.initial.w.min()),
        clipped_cells: traj.steps.iter().map(|s| s.clipped_cells).sum(),
        mass: check_mass_conservation(d, cfg.audit.mass_tol).map_err(setup)?,
        w_bound: check_w_bound(d, cfg.audit.m.unwrap_or(w0_sup + r_star), cfg.audit.w_bound_tol).map_err(setup)?,
        all_no_growth: monitor.as_ref().map(|m| m.all_no_growth()),
        monitor,
    };
    write_json(&dir.join("run_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Default)]
pub struct AuditOptions {
    pub bisect_c: bool,
    pub c: Option<f64>,
    pub m: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
}

/// Fraction of interior samples an audit must satisfy.
pub const AUDIT_TARGET: f64 = 0.99;
/// Upper end of the bisection bracket.
pub const C_MAX: f64 = 1e6;

#[derive(Debug, Clone, Serialize)]
pub struct InequalitySummary {
    pub constants: AuditConstants,
    pub samples: usize,
    pub fraction_ok: f64,
    pub worst_residual: f64,
    pub worst_t: f64,
    pub pass: bool,
    /// Smallest feasible constant, when bisection was requested.
    pub bisected_c: Option<Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditRunReport {
    pub mass: MassReport,
    pub w_bound: WBoundReport,
    pub grad_w: InequalitySummary,
    pub quasi_energy: InequalitySummary,
    pub gronwall: Option<GronwallReport>,
    pub gronwall_note: Option<String>,
    pub all_pass: bool,
}

fn summarize(
    series: &[DiagnosticsRecord],
    which: Inequality,
    constants: AuditConstants,
    tol: f64,
    bisect: bool,
) -> Result<InequalitySummary, CommandError> {
    let rep: AuditReport = audit_inequality(series, which, constants, tol).map_err(setup)?;
    let bisected_c = if bisect {
        Some(bisect_constant(series, which, constants, AUDIT_TARGET, tol, C_MAX).map_err(setup)?)
    } else {
        None
    };
    Ok(InequalitySummary {
        constants,
        samples: rep.residuals.len(),
        fraction_ok: rep.fraction_ok,
        worst_residual: rep.worst_residual,
        worst_t: rep.worst_t,
        pass: rep.fraction_ok >= AUDIT_TARGET,
        bisected_c,
    })
}

/// Comparison inputs built from the combined functional `y` and
/// `z = C int v^2 + 2 int |grad sqrt r|^2 + C`, with `a = 1 / min y` so that
/// `y' + y <= z` implies `y' <= a y z`, and `b`, `c` the observed window maxima.
pub fn gronwall_inputs(series: &[DiagnosticsRecord], c: f64) -> Result<GronwallInputs, String> {
    let times: Vec<f64> = series.iter().map(|r| r.t).collect();
    let y: Vec<f64> = series.iter().map(|r| r.combined_y).collect();
    let z: Vec<f64> = series.iter().map(|r| c * r.v_sq + 2.0 * r.gradroot_r + c).collect();
    if times.len() < 3 {
        return Err(format!("needs at least 3 samples, found {}", times.len()));
    }
    let theta = gronwall_window(times[times.len() - 1] - times[0]);
    let min_y = y.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_y > 0.0) {
        return Err("combined functional vanishes; no finite a".into());
    }
    let b = windowed(&times, &y, theta).map_err(|e| e.to_string())?.max();
    let cz = windowed(&times, &z, theta).map_err(|e| e.to_string())?.max();
    Ok(GronwallInputs { times, y, z, a: 1.0 / min_y, b, c: cz })
}

pub fn cmd_audit(run_dir: &Path, opts: &AuditOptions) -> Result<AuditRunReport, CommandError> {
    let series = read_diagnostics(&run_dir.join("diagnostics.csv"))?;
    let run: RunReport = read_json(&run_dir.join("run_report.json"))?;
    let cfg = crate::config::parse_config(&run.config, &run_dir.join("run_report.json").display().to_string())?;
    let a = &cfg.audit;
    let constants = AuditConstants {
        c: opts.c.unwrap_or(a.c),
        m: opts.m.or(a.m).unwrap_or(run.w0_sup + run.r_star),
        delta: opts.delta.unwrap_or(a.delta),
        lambda: opts.lambda.unwrap_or(run.lambda),
    };
    let mass = check_mass_conservation(&series, a.mass_tol).map_err(setup)?;
    let w_bound = check_w_bound(&series, constants.m, a.w_bound_tol).map_err(setup)?;
    let grad_w = summarize(&series, Inequality::GradW, constants, a.audit_tol, opts.bisect_c)?;
    let quasi_energy = summarize(&series, Inequality::QuasiEnergy, constants, a.audit_tol, opts.bisect_c)?;
    let (gronwall, gronwall_note) = match gronwall_inputs(&series, constants.c) {
        Ok(inp) => (Some(gronwall_check(&inp, a.gronwall_slack).map_err(setup)?), None),
        Err(note) => (None, Some(note)),
    };
    let gronwall_ok = gronwall.as_ref().is_none_or(|g| !g.hypotheses_hold || g.conclusion_holds);
    let all_pass = mass.pass && w_bound.pass && grad_w.pass && quasi_energy.pass && gronwall_ok;
    let report = AuditRunReport { mass, w_bound, grad_w, quasi_energy, gronwall, gronwall_note, all_pass };
    write_json(&run_dir.join("audit_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpResult {
    pub bump: TestFunction,
    pub residual_u: f64,
    pub residual_w: f64,
    pub slack_v: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakReport {
    pub seed: u64,
    pub allowance: f64,
    pub bumps: Vec<BumpResult>,
    pub v_mass: VMassReport,
    pub all_pass: bool,
}

fn require_logistic(cfg: &RunConfig) -> Result<(), CommandError> {
    if cfg.model.beta != 2.0 {
        return Err(CommandError::Setup(format!(
            "this command studies the logistic case; the configuration has beta = {}",
            cfg.model.beta
        )));
    }
    Ok(())
}

/// Writes `weak_report.json` into the output directory.
pub fn cmd_weak(config_path: &Path, n: usize, seed: u64, out: Option<&Path>) -> Result<WeakReport, CommandError> {
    let cfg = load_config(config_path)?;
    require_logistic(&cfg)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.directory.clone());
    ensure_dir(&dir)?;
    let traj = simulate(&cfg, SnapshotSchedule::EveryStep)?;
    if let Some(e) = &traj.abort {
        return Err(CommandError::Setup(format!("run aborted at t = {}: {e}", traj.final_state.t)));
    }
    let bumps = random_bumps(&cfg.grid, cfg.model.t_final, n, seed);
    let eval = evaluate(&traj, &bumps).map_err(setup)?;
    let spec = cfg.resupply_spec().map_err(setup)?;
    let allowance = if n == 0 {
        0.0
    } else {
        calibrate_allowance(&cfg.model, &spec, &cfg.initial_data(), &bumps).map_err(setup)?.0
    };
    let results: Vec<BumpResult> = bumps
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let (ru, rw, sv) = (eval.residual_u[k], eval.residual_w[k], eval.slack_v[k]);
            BumpResult {
                bump: *b,
                residual_u: ru,
                residual_w: rw,
                slack_v: sv,
                pass: ru.abs() <= allowance && rw.abs() <= allowance && sv >= -allowance,
            }
        })
        .collect();
    let v_mass = v_mass_inequality(&traj, V_MASS_TOL);
    let all_pass = v_mass.pass && results.iter().all(|r| r.pass);
    let report = WeakReport { seed, allowance, bumps: results, v_mass, all_pass };
    write_json(&dir.join("weak_report.json"), &report)?;
    Ok(report)
}

/// Writes `sweep.csv` and `sweep_report.json`.
pub fn cmd_sweep(config_path: &Path, eps: &[f64], out: Option<&Path>) -> Result<RefinementTable, CommandError> {
    let cfg = load_config(config_path)?;
    require_logistic(&cfg)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.directory.clone());
    ensure_dir(&dir)?;
    let interval = sweep_interval(cfg.model.t_final);
    let ladder = EpsLadder::new(
        eps.to_vec(),
        cfg.model.clone(),
        cfg.resupply_spec().map_err(setup)?,
        cfg.initial_data(),
        interval,
    )
    .map_err(setup)?;
    let table = eps_refinement(&ladder);
    let mut csv = String::from("eps_a,eps_b,du,dv,dw\n");
    for r in &table.rows {
        csv += &format!("{:?},{:?},{:?},{:?},{:?}\n", r.eps_a, r.eps_b, r.du, r.dv, r.dw);
    }
    let path = dir.join("sweep.csv");
    fs::write(&path, csv).map_err(|source| IoError::Fs { path: path.display().to_string(), source })?;
    write_json(&dir.join("sweep_report.json"), &table)?;
    Ok(table)
}

/// Sampling interval shared by all ladder runs: a hundredth of the horizon.
pub fn sweep_interval(t_final: f64) -> f64 {
    if t_final > 0.0 {
        t_final / 100.0
    } else {
        1.0
    }
}
