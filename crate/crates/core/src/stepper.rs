//! First-order IMEX integrator for the regularized forager-scrounger-nutrient
//! system.
//!
//! Each step applies, per species, explicit upwinded taxis, implicit
//! diffusion and then a pointwise Patankar-type reaction update that keeps
//! every component nonnegative independently of the step size.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{record, DiagnosticsError, DiagnosticsRecord};
use crate::grid::{
    face_average, face_gradient, flux_divergence, laplacian_into, upwind_advective_flux, GridError, GridSpec,
    ScalarField,
};
use crate::model::{resupply_field, validate_initial_data, InitialData, ModelConfig, ModelError, ResupplySpec};
use crate::par;

/// Undershoots below `-CLIP_TOL * sup` abort the step; smaller ones are clipped.
pub const CLIP_TOL: f64 = 1e-12;
/// Smallest admissible time step.
pub const DT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: ScalarField,
    pub v: ScalarField,
    pub w: ScalarField,
}

impl SimState {
    pub fn initial(data: &InitialData) -> Self {
        Self { t: 0.0, u: data.u0.clone(), v: data.v0.clone(), w: data.w0.clone() }
    }

    pub fn grid(&self) -> &GridSpec {
        self.u.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub dt_used: f64,
    pub solver_iters_u: usize,
    pub solver_iters_v: usize,
    pub solver_iters_w: usize,
    pub min_u: f64,
    pub min_v: f64,
    pub min_w: f64,
    pub clipped_cells: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("conjugate gradients stalled after {iterations} iterations at relative residual {residual:e}")]
pub struct SolverError {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("{field} diffusion solve failed: {source}")]
    Solver { field: &'static str, source: SolverError },
    #[error("{field} went negative beyond the clip tolerance: min {min:e}, sup {sup:e}")]
    Negativity { field: &'static str, min: f64, sup: f64 },
    #[error("{field} became non-finite")]
    NonFinite { field: &'static str },
    #[error("time step {dt:e} fell below the floor {floor:e}", floor = DT_FLOOR)]
    DtFloor { dt: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

impl StepError {
    /// Short name of the violated invariant, used in abort records.
    pub fn invariant(&self) -> &'static str {
        match self {
            StepError::Solver { .. } => "solver_convergence",
            StepError::Negativity { .. } => "nonnegativity",
            StepError::NonFinite { .. } => "finiteness",
            StepError::DtFloor { .. } => "dt_floor",
            StepError::Model(_) => "model",
            StepError::Grid(_) => "grid",
            StepError::Diagnostics(_) => "diagnostics",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzSolution {
    pub field: ScalarField,
    pub iterations: usize,
    pub residual: f64,
}

/// Solve `(I - coeff * Lap_N) x = rhs` by conjugate gradients.
///
/// Starts from `x = rhs`, so the initial residual has zero sum and every
/// search direction stays in the mean-zero subspace; `int x = int rhs` up to
/// roundoff.
pub fn solve_helmholtz(
    rhs: &ScalarField,
    coeff: f64,
    tol: f64,
    max_iter: usize,
) -> Result<HelmholtzSolution, SolverError> {
    let g = *rhs.grid();
    let n = g.cells();
    let b = rhs.values();
    let b_norm = par::dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(HelmholtzSolution { field: ScalarField::zeros(g), iterations: 0, residual: 0.0 });
    }
    let apply = |x: &[f64], lap: &mut Vec<f64>, out: &mut Vec<f64>| {
        laplacian_into(&g, x, lap);
        par::fill(out, |k| x[k] - coeff * lap[k]);
    };

    let mut x = b.to_vec();
    let mut lap = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply(&x, &mut lap, &mut ap);
    let mut r = par::build(n, |k| b[k] - ap[k]);
    let mut p = r.clone();
    let mut rs = par::dot(&r, &r);
    let target = tol * b_norm;
    let mut iterations = 0;
    while rs.sqrt() > target {
        if iterations == max_iter {
            return Err(SolverError { iterations, residual: rs.sqrt() / b_norm });
        }
        apply(&p, &mut lap, &mut ap);
        let pap = par::dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolverError { iterations, residual: rs.sqrt() / b_norm });
        }
        let alpha = rs / pap;
        par::update(&mut x, |k, xk| xk + alpha * p[k]);
        par::update(&mut r, |k, rk| rk - alpha * ap[k]);
        let rs_new = par::dot(&r, &r);
        let beta = rs_new / rs;
        par::update(&mut p, |k, pk| r[k] + beta * pk);
        rs = rs_new;
        iterations += 1;
    }
    Ok(HelmholtzSolution { field: ScalarField::from_raw(g, x), iterations, residual: rs.sqrt() / b_norm })
}

/// Clip undershoots of magnitude below `CLIP_TOL * sup`; abort on larger ones.
fn enforce_sign(f: &mut ScalarField, field: &'static str) -> Result<usize, StepError> {
    if !f.is_finite() {
        return Err(StepError::NonFinite { field });
    }
    let min = f.min();
    if min >= 0.0 {
        return Ok(0);
    }
    let sup = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if min < -CLIP_TOL * sup {
        return Err(StepError::Negativity { field, min, sup });
    }
    let mut clipped = 0;
    for v in f.values_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clipped += 1;
        }
    }
    Ok(clipped)
}

/// Velocity of the forager taxis on faces: `avg(F'(u)) * grad w`.
fn forager_velocity(state: &SimState, cfg: &ModelConfig) -> Result<crate::grid::FluxField, GridError> {
    let resp = cfg.response();
    let mobility = face_average(&state.u.map(|s| resp.derivative(s)));
    mobility.mul(&face_gradient(&state.w))
}

/// Step size from the advective and reactive caps, bounded by `dt_init`.
pub fn adapt_dt(state: &SimState, cfg: &ModelConfig) -> Result<f64, StepError> {
    let h = state.grid().h();
    let speed = forager_velocity(state, cfg)?.max_abs().max(face_gradient(&state.u).max_abs());
    let mut dt = cfg.dt_init;
    if speed > 0.0 {
        dt = dt.min(cfg.cfl_advect * h / speed);
    }
    let vmax = state.v.max().max(0.0);
    dt = dt.min(cfg.cfl_react / vmax.powf(cfg.beta - 1.0).max(1.0));
    if !(dt >= DT_FLOOR) {
        return Err(StepError::DtFloor { dt });
    }
    Ok(dt)
}

/// Advance `state` by `dt`.
pub fn step(
    state: &SimState,
    cfg: &ModelConfig,
    spec: &ResupplySpec,
    dt: f64,
) -> Result<(SimState, StepReport), StepError> {
    if !(dt >= DT_FLOOR) {
        return Err(StepError::DtFloor { dt });
    }
    let resp = cfg.response();
    let mut clipped = 0;
    let solve = |rhs: &ScalarField, field: &'static str| {
        solve_helmholtz(rhs, dt, cfg.solver_tol, cfg.solver_max_iter)
            .map_err(|source| StepError::Solver { field, source })
    };

    // foragers: taxis up grad w, then diffusion
    let flux_u = upwind_advective_flux(&state.u, &forager_velocity(state, cfg)?)?;
    let div_u = flux_divergence(&flux_u)?;
    let mut u_star = state.u.zip_map(&div_u, |u, d| u - dt * d)?;
    clipped += enforce_sign(&mut u_star, "u")?;
    let sol_u = solve(&u_star, "u")?;
    let mut u_new = sol_u.field;
    clipped += enforce_sign(&mut u_new, "u")?;

    // scroungers: taxis up grad u, diffusion, logistic source
    let flux_v = upwind_advective_flux(&state.v, &face_gradient(&state.u))?;
    let div_v = flux_divergence(&flux_v)?;
    let mut v_star = state.v.zip_map(&div_v, |v, d| v - dt * d)?;
    clipped += enforce_sign(&mut v_star, "v")?;
    let sol_v = solve(&v_star, "v")?;
    let mut v_new = sol_v.field;
    clipped += enforce_sign(&mut v_new, "v")?;
    let growth = cfg.beta - 1.0;
    par::update(v_new.values_mut(), |_, v| (v + dt * v) / (1.0 + dt * v.powf(growth)));

    // nutrient: diffusion, then absorption and resupply
    let sol_w = solve(&state.w, "w")?;
    let mut w_new = sol_w.field;
    clipped += enforce_sign(&mut w_new, "w")?;
    let r = resupply_field(spec, state.grid(), state.t)?;
    {
        let (uv, vv, rv) = (u_new.values(), v_new.values(), r.values());
        par::update(w_new.values_mut(), |k, w| {
            (w + dt * rv[k]) / (1.0 + dt * (resp.value(uv[k]) + resp.value(vv[k]) + 1.0))
        });
    }
    for (f, name) in [(&v_new, "v"), (&w_new, "w")] {
        if !f.is_finite() {
            return Err(StepError::NonFinite { field: name });
        }
    }

    let report = StepReport {
        dt_used: dt,
        solver_iters_u: sol_u.iterations,
        solver_iters_v: sol_v.iterations,
        solver_iters_w: sol_w.iterations,
        min_u: u_new.min(),
        min_v: v_new.min(),
        min_w: w_new.min(),
        clipped_cells: clipped,
    };
    Ok((SimState { t: state.t + dt, u: u_new, v: v_new, w: w_new }, report))
}

/// Which states `run` keeps besides the initial and final ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SnapshotSchedule {
    FinalOnly,
    EveryStep,
    /// Every `n`-th step.
    Stride(usize),
    /// At every multiple of the interval; steps are shortened to land on them.
    Interval(f64),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid model configuration: {0}")]
    Config(#[from] ModelError),
    #[error("initial data rejected: {0}")]
    InitialData(String),
    #[error("resupply profile and initial data live on different grids")]
    GridMismatch,
    #[error("initial diagnostics failed: {0}")]
    Diagnostics(#[from] DiagnosticsError),
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub cfg: ModelConfig,
    pub resupply: ResupplySpec,
    pub initial: SimState,
    pub snapshots: Vec<SimState>,
    /// One record per step, plus the initial record.
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub steps: Vec<StepReport>,
    pub final_state: SimState,
    pub abort: Option<StepError>,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }

    pub fn grid(&self) -> &GridSpec {
        self.initial.grid()
    }

    /// Snapshot times.
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

const LANDING_TOL: f64 = 1e-12;
/// Leftovers shorter than this, relative to the landing time, are absorbed
/// into the current step instead of becoming a sliver step.
const SLIVER_TOL: f64 = 1e-9;

/// Integrate from `t = 0` to `cfg.t_final`.
///
/// Validation failures are errors; a step abort ends the run early and is
/// recorded in [`Trajectory::abort`] with everything computed so far.
pub fn run(
    cfg: &ModelConfig,
    spec: &ResupplySpec,
    data: &InitialData,
    schedule: SnapshotSchedule,
) -> Result<Trajectory, RunError> {
    cfg.validate()?;
    spec.validate()?;
    let report = validate_initial_data(data);
    if !report.passed() {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(RunError::InitialData(msgs.join("; ")));
    }
    if let crate::model::ResupplyKind::Separable { g, .. } = &spec.kind {
        if g.grid() != data.u0.grid() {
            return Err(RunError::GridMismatch);
        }
    }

    let initial = SimState::initial(data);
    let mut traj = Trajectory {
        cfg: cfg.clone(),
        resupply: spec.clone(),
        initial: initial.clone(),
        snapshots: vec![initial.clone()],
        diagnostics: vec![record(&initial, cfg, spec, 0.0)?],
        steps: Vec::new(),
        final_state: initial.clone(),
        abort: None,
    };

    let t_final = cfg.t_final;
    let mut state = initial;
    let mut n_step = 0usize;
    while state.t < t_final {
        let outcome = adapt_dt(&state, cfg).and_then(|mut dt| {
            let mut landing = t_final;
            if let SnapshotSchedule::Interval(iv) = schedule {
                let next = ((state.t / iv + LANDING_TOL).floor() + 1.0) * iv;
                landing = landing.min(next);
            }
            let remaining = landing - state.t;
            let lands = remaining - dt <= SLIVER_TOL * landing.abs().max(1.0);
            if lands {
                dt = remaining;
            }
            let (mut next, rep) = step(&state, cfg, spec, dt)?;
            if lands {
                next.t = landing;
            }
            let rec = record(&next, cfg, spec, dt)?;
            Ok((next, rep, rec, lands))
        });
        match outcome {
            Ok((next, rep, rec, landed)) => {
                n_step += 1;
                let keep = match schedule {
                    SnapshotSchedule::FinalOnly => false,
                    SnapshotSchedule::EveryStep => true,
                    SnapshotSchedule::Stride(n) => n > 0 && n_step.is_multiple_of(n),
                    SnapshotSchedule::Interval(_) => landed,
                };
                let at_end = next.t >= t_final;
                if keep || at_end {
                    traj.snapshots.push(next.clone());
                }
                traj.steps.push(rep);
                traj.diagnostics.push(rec);
                state = next;
            }
            Err(e) => {
                traj.abort = Some(e);
                break;
            }
        }
    }
    traj.final_state = state;
    Ok(traj)
}
