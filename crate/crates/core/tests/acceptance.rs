//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxis_core::diagnostics::{
    bisect_constant, boundedness_monitor, check_mass_conservation, check_w_bound, gronwall_check, AuditConstants,
    GronwallInputs, Inequality, MASS_TOL, W_BOUND_TOL,
};
use taxis_core::grid::{GridSpec, ScalarField};
use taxis_core::model::{ModelConfig, ResupplySpec};
use taxis_core::presets::{standard_beta2, standard_beta3, Preset, STANDARD_R0};
use taxis_core::stepper::{run, step, SimState, SnapshotSchedule, StepReport, Trajectory};
use taxis_core::weakform::{
    calibrate_allowance, eps_refinement, evaluate, random_bumps, v_mass_inequality, EpsLadder, V_MASS_TOL,
};

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Step reports of every simulation in the suite, for the nonnegativity criterion.
#[derive(Default)]
struct StepLog {
    runs: Vec<(String, bool, Vec<StepReport>)>,
}

impl StepLog {
    fn add(&mut self, label: impl Into<String>, traj: &Trajectory) {
        self.runs.push((label.into(), traj.completed(), traj.steps.clone()));
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

// ---------------------------------------------------------------- 1, 2, 8

fn beta3_short(log: &mut StepLog) -> Vec<Outcome> {
    let sc = standard_beta3(64, 10.0).unwrap();
    let data = sc.initial_data();
    let clock = Instant::now();
    let traj = run(&sc.cfg, &sc.resupply, &data, SnapshotSchedule::FinalOnly).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    log.add("beta3 64x64 t=10", &traj);
    let d = &traj.diagnostics;

    let mass = check_mass_conservation(d, MASS_TOL).unwrap();
    let bound = data.w0.max() + STANDARD_R0;
    let wb = check_w_bound(d, bound, W_BOUND_TOL).unwrap();
    vec![
        Outcome {
            id: 1,
            name: "mass conservation (64x64, beta=3, t=10)",
            pass: traj.completed() && mass.pass && secs < 120.0,
            detail: format!(
                "max relative drift {:.3e} (tol {:.0e}), {} steps in {secs:.1}s",
                mass.max_rel_deviation,
                MASS_TOL,
                traj.steps.len()
            ),
        },
        Outcome {
            id: 2,
            name: "nutrient sup bound",
            pass: traj.completed() && wb.pass,
            detail: format!("max sup_w {:.6} <= {:.6} + {:.0e}", wb.max_sup_w, bound, W_BOUND_TOL),
        },
    ]
}

// ---------------------------------------------------------------- 4

/// Uniform-state reduction: `v' = v - v^3`, `w' = r - (u + v + 1) w`, `u` fixed.
fn rk4_reference(u: f64, v0: f64, w0: f64, r: f64, t_end: f64) -> (f64, f64) {
    let f = |v: f64, w: f64| (v - v * v * v, r - (u + v + 1.0) * w);
    let n = (t_end / 1e-4).round() as usize;
    let h = t_end / n as f64;
    let (mut v, mut w) = (v0, w0);
    for _ in 0..n {
        let k1 = f(v, w);
        let k2 = f(v + 0.5 * h * k1.0, w + 0.5 * h * k1.1);
        let k3 = f(v + 0.5 * h * k2.0, w + 0.5 * h * k2.1);
        let k4 = f(v + h * k3.0, w + h * k3.1);
        v += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        w += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (v, w)
}

fn uniform_oracle(log: &mut StepLog) -> Outcome {
    let (u, v0, w0, r0, t_end) = (0.8, 0.5, 2.0, 0.3, 5.0);
    let (v_ref, w_ref) = rk4_reference(u, v0, w0, r0, t_end);
    // the logistic part has a closed form; it guards the reference itself
    let v_exact = (1.0 / (1.0 + (1.0 / (v0 * v0) - 1.0) * (-2.0 * t_end).exp())).sqrt();
    let ref_ok = (v_ref - v_exact).abs() < 1e-12;

    let grid = GridSpec::unit_square(8).unwrap();
    let data = Preset::Uniform { u, v: v0, w: w0 }.build(grid);
    let spec = ResupplySpec::constant(r0).unwrap();
    let mut errs = Vec::new();
    let mut within = true;
    for dt in [1e-2, 5e-3, 2.5e-3] {
        let cfg = ModelConfig { t_final: t_end, dt_init: dt, ..ModelConfig::new(3.0, 0.0) };
        let traj = run(&cfg, &spec, &data, SnapshotSchedule::FinalOnly).unwrap();
        log.add(format!("uniform dt={dt}"), &traj);
        let s = &traj.final_state;
        let ev = s.v.values().iter().map(|x| (x - v_ref).abs()).fold(0.0, f64::max);
        let ew = s.w.values().iter().map(|x| (x - w_ref).abs()).fold(0.0, f64::max);
        within &= traj.completed() && (s.t - t_end).abs() < 1e-12 && ev <= 5.0 * dt && ew <= 5.0 * dt;
        errs.push((dt, ev, ew));
    }
    let ratios: Vec<(f64, f64)> = errs.windows(2).map(|p| (p[0].1 / p[1].1, p[0].2 / p[1].2)).collect();
    let ratios_ok = ratios.iter().all(|&(a, b)| (1.6..=2.4).contains(&a) && (1.6..=2.4).contains(&b));
    let table: Vec<String> = errs.iter().map(|(dt, ev, ew)| format!("dt={dt}: ev={ev:.2e} ew={ew:.2e}")).collect();
    let rtab: Vec<String> = ratios.iter().map(|(a, b)| format!("{a:.3}/{b:.3}")).collect();
    Outcome {
        id: 4,
        name: "uniform-state ODE oracle",
        pass: ref_ok && within && ratios_ok,
        detail: format!("{}; halving ratios v/w {}", table.join(", "), rtab.join(", ")),
    }
}

// ---------------------------------------------------------------- 5

fn eigenmode_decay(log: &mut StepLog) -> Outcome {
    let n = 32;
    let grid = GridSpec::unit_square(n).unwrap();
    let h = grid.h();
    let (kx, ky) = (1.0, 2.0);
    let mode = ScalarField::from_fn(grid, |x, y| (kx * PI * x).cos() * (ky * PI * y).cos());
    let lam = (2.0 - 2.0 * (kx * PI * h).cos()) / (h * h) + (2.0 - 2.0 * (ky * PI * h).cos()) / (h * h);
    let norm2: f64 = mode.values().iter().map(|m| m * m).sum();
    let amplitude = |f: &ScalarField| {
        let mean = f.values().iter().sum::<f64>() / f.values().len() as f64;
        f.values().iter().zip(mode.values()).map(|(a, m)| (a - mean) * m).sum::<f64>() / norm2
    };

    // no nutrient and no scroungers: no taxis, no reactions, u only diffuses
    let cfg = ModelConfig { solver_tol: 1e-13, ..ModelConfig::new(3.0, 0.0) };
    let dt = 1e-3;
    let mut state =
        SimState { t: 0.0, u: mode.map(|m| 1.0 + 0.5 * m), v: ScalarField::zeros(grid), w: ScalarField::zeros(grid) };
    let expected = 1.0 / (1.0 + dt * lam);
    let mut worst: f64 = 0.0;
    let mut reports = Vec::new();
    let mut ok = true;
    for _ in 0..20 {
        let before = amplitude(&state.u);
        match step(&state, &cfg, &ResupplySpec::zero(), dt) {
            Ok((next, rep)) => {
                worst = worst.max(rel_err(amplitude(&next.u) / before, expected));
                reports.push(rep);
                state = next;
            }
            Err(_) => {
                ok = false;
                break;
            }
        }
    }
    log.runs.push(("eigenmode".into(), ok, reports));
    Outcome {
        id: 5,
        name: "diffusion eigenmode decay",
        pass: ok && worst <= 1e-6,
        detail: format!("per-step ratio {expected:.10}, worst relative deviation {worst:.2e} over 20 steps"),
    }
}

// ---------------------------------------------------------------- 6, 8

fn beta3_long(log: &mut StepLog) -> Vec<Outcome> {
    let sc = standard_beta3(64, 50.0).unwrap();
    let data = sc.initial_data();
    let clock = Instant::now();
    let traj = run(&sc.cfg, &sc.resupply, &data, SnapshotSchedule::FinalOnly).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    log.add("beta3 64x64 t=50", &traj);
    let d = &traj.diagnostics;

    let monitor = boundedness_monitor(d).unwrap();
    let flags: Vec<String> =
        monitor.entries.iter().map(|e| format!("{}={}", e.name, if e.no_growth { "ok" } else { "GROWTH" })).collect();

    let base = AuditConstants { c: 0.0, m: data.w0.max() + STANDARD_R0, delta: 0.5, lambda: sc.cfg.lambda };
    let c = bisect_constant(d, Inequality::GradW, base, 0.99, 0.0, 1e6).unwrap();
    vec![
        Outcome {
            id: 6,
            name: "boundedness shadow (beta=3, t=50)",
            pass: traj.completed() && monitor.all_no_growth() && secs < 600.0,
            detail: format!("{} steps in {secs:.1}s; {}", traj.steps.len(), flags.join(" ")),
        },
        Outcome {
            id: 8,
            name: "gradient inequality audit, bisected C",
            pass: matches!(c, Some(c) if c <= 1e6),
            detail: match c {
                Some(c) => format!("smallest C with >= 99% nonnegative residuals: {c:.4e} (M = {:.4})", base.m),
                None => "no feasible C <= 1e6".into(),
            },
        },
    ]
}

// ---------------------------------------------------------------- 7

/// Exact solution `y = y0 exp(a k Z)` of `y' = k a y z` for a monotone
/// `z = z1 + z0 e^{-kappa t}` (or its rising mirror), sampled at `n + 1` points.
struct Exact {
    times: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    a: f64,
    b: f64,
    c: f64,
}

fn exact_solution(rng: &mut ChaCha8Rng, rate_factor: f64) -> Exact {
    let t_end = rng.gen_range(0.5..8.0);
    let n = 2000;
    let a = rng.gen_range(0.05..1.5);
    let (z0, z1, kappa) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..1.0), rng.gen_range(0.1..4.0));
    let rising = rng.gen_bool(0.5);
    let y0 = rng.gen_range(0.1..5.0);
    let z = |t: f64| if rising { z1 + z0 * (1.0 - (-kappa * t).exp()) } else { z1 + z0 * (-kappa * t).exp() };
    let big_z = |t: f64| {
        let decay = z0 * (1.0 - (-kappa * t).exp()) / kappa;
        if rising {
            (z1 + z0) * t - decay
        } else {
            z1 * t + decay
        }
    };
    let y = |t: f64| y0 * (rate_factor * a * big_z(t)).exp();
    let times: Vec<f64> = (0..=n).map(|k| t_end * k as f64 / n as f64).collect();
    let theta = (t_end / 2.0).min(1.0);
    // y is increasing, so its largest window is the last; z is monotone
    let simpson = |lo: f64, hi: f64| {
        let m = 4000;
        let hh = (hi - lo) / m as f64;
        let mut s = y(lo) + y(hi);
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * y(lo + k as f64 * hh);
        }
        s * hh / 3.0
    };
    let b = simpson(t_end - theta, t_end) * 1.01;
    let c = (big_z(theta) - big_z(0.0)).max(big_z(t_end) - big_z(t_end - theta)).max(1e-9) * 1.01;
    Exact { y: times.iter().map(|&t| y(t)).collect(), z: times.iter().map(|&t| z(t)).collect(), times, a, b, c }
}

fn inputs(e: &Exact) -> GronwallInputs {
    GronwallInputs { times: e.times.clone(), y: e.y.clone(), z: e.z.clone(), a: e.a, b: e.b, c: e.c }
}

fn gronwall_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut held = 0;
    let mut tightest: f64 = 0.0;
    for _ in 0..100 {
        let e = exact_solution(&mut rng, 1.0);
        let rep = gronwall_check(&inputs(&e), 0.0).unwrap();
        // the conclusion is checked here against the sampled maximum, not the report's flag
        let max_y = e.y.iter().copied().fold(0.0, f64::max);
        let bound = e.y[0].max(e.b) * (2.0 * e.a * e.c).exp();
        if rep.hypotheses_hold && rep.conclusion_holds && max_y <= bound {
            held += 1;
        }
        tightest = tightest.max(max_y / bound);
    }

    let mut flagged = 0;
    for k in 0..20 {
        let mut inp = match k % 4 {
            // grows twice as fast as the rate allows
            0 => {
                let e = exact_solution(&mut rng, 2.0);
                inputs(&e)
            }
            // window integral of y exceeds b
            1 => {
                let e = exact_solution(&mut rng, 1.0);
                GronwallInputs { b: e.b * 0.5, ..inputs(&e) }
            }
            // window integral of z exceeds c
            2 => {
                let e = exact_solution(&mut rng, 1.0);
                GronwallInputs { c: e.c * 0.5, ..inputs(&e) }
            }
            // an upward jump
            _ => inputs(&exact_solution(&mut rng, 1.0)),
        };
        if k % 4 == 3 {
            let j = inp.y.len() / 2;
            for v in &mut inp.y[j..] {
                *v *= 1.5;
            }
        }
        if !gronwall_check(&inp, 0.0).unwrap().hypotheses_hold {
            flagged += 1;
        }
    }
    Outcome {
        id: 7,
        name: "Gronwall-type checker",
        pass: held == 100 && flagged == 20,
        detail: format!(
            "{held}/100 exact solutions satisfy the bound (max y / bound {tightest:.3}); {flagged}/20 violating series flagged"
        ),
    }
}

// ---------------------------------------------------------------- 9

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn weak_criteria(log: &mut StepLog) -> Outcome {
    let t_final = 1.0;
    let mut levels = Vec::new();
    let mut slack_ok = true;
    let mut vmass_ok = true;
    let mut slack_notes = Vec::new();
    for n in [16usize, 32, 64] {
        let mut sc = standard_beta2(n, t_final, 0.05).unwrap();
        sc.cfg.dt_init = 0.16 / n as f64;
        let data = sc.initial_data();
        let traj = run(&sc.cfg, &sc.resupply, &data, SnapshotSchedule::EveryStep).unwrap();
        log.add(format!("beta2 weak n={n}"), &traj);
        let bumps = random_bumps(&sc.grid, t_final, 10, 7);
        let eval = evaluate(&traj, &bumps).unwrap();
        let (allowance, _) = calibrate_allowance(&sc.cfg, &sc.resupply, &data, &bumps).unwrap();
        let min_slack = eval.slack_v.iter().copied().fold(f64::INFINITY, f64::min);
        slack_ok &= traj.completed() && min_slack >= -allowance;
        slack_notes.push(format!("n={n}: min slack {min_slack:.2e} vs -{allowance:.2e}"));
        let vm = v_mass_inequality(&traj, V_MASS_TOL);
        vmass_ok &= vm.pass;
        levels.push((rms(&eval.residual_u), rms(&eval.residual_w)));
    }
    let ratios: Vec<(f64, f64)> = levels.windows(2).map(|p| (p[0].0 / p[1].0, p[0].1 / p[1].1)).collect();
    let ratios_ok = ratios.iter().all(|&(a, b)| (1.5..=2.5).contains(&a) && (1.5..=2.5).contains(&b));
    let lv: Vec<String> = levels.iter().map(|(u, w)| format!("{u:.2e}/{w:.2e}")).collect();
    let rt: Vec<String> = ratios.iter().map(|(u, w)| format!("{u:.3}/{w:.3}")).collect();
    Outcome {
        id: 9,
        name: "logistic weak criteria (eps=0.05)",
        pass: ratios_ok && slack_ok && vmass_ok,
        detail: format!(
            "rms residual u/w {}; ratios {}; {}; v mass {}",
            lv.join(" -> "),
            rt.join(", "),
            slack_notes.join(", "),
            if vmass_ok { "ok" } else { "violated" }
        ),
    }
}

// ---------------------------------------------------------------- 10

fn eps_ladder() -> Outcome {
    let sc = standard_beta2(32, 5.0, 0.1).unwrap();
    let clock = Instant::now();
    let ladder =
        EpsLadder::new(vec![0.1, 0.05, 0.025, 0.0125], sc.cfg.clone(), sc.resupply.clone(), sc.initial_data(), 0.05)
            .unwrap();
    let table = eps_refinement(&ladder);
    let secs = clock.elapsed().as_secs_f64();
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("({}, {}): {:.2e} {:.2e} {:.2e}", r.eps_a, r.eps_b, r.du, r.dv, r.dw))
        .collect();
    Outcome {
        id: 10,
        name: "regularization ladder is Cauchy",
        pass: table.cauchy && table.failures.is_empty() && table.rows.len() == 3 && secs < 600.0,
        detail: format!("du dv dw per pair {} in {secs:.1}s", rows.join("; ")),
    }
}

// ---------------------------------------------------------------- 3

fn nonnegativity(log: &StepLog) -> Outcome {
    let mut steps = 0;
    let mut clipped = 0;
    let mut bad = Vec::new();
    for (label, completed, reports) in &log.runs {
        steps += reports.len();
        clipped += reports.iter().map(|r| r.clipped_cells).sum::<usize>();
        let negative = reports.iter().any(|r| r.min_u < 0.0 || r.min_v < 0.0 || r.min_w < 0.0);
        if !completed || negative {
            bad.push(label.clone());
        }
    }
    Outcome {
        id: 3,
        name: "nonnegativity in every run",
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{} runs, {steps} steps, min u, v, w >= 0 throughout, {clipped} cells clipped", log.runs.len())
        } else {
            format!("violations in {}", bad.join(", "))
        },
    }
}

fn main() -> ExitCode {
    let mut log = StepLog::default();
    let mut out = Vec::new();
    out.extend(beta3_short(&mut log));
    out.push(uniform_oracle(&mut log));
    out.push(eigenmode_decay(&mut log));
    out.extend(beta3_long(&mut log));
    out.push(gronwall_lemma());
    out.push(weak_criteria(&mut log));
    out.push(eps_ladder());
    out.push(nonnegativity(&log));
    out.sort_by_key(|o| o.id);

    for o in &out {
        println!("{} [{:>2}] {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.name, o.detail);
    }
    let failed = out.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", out.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
