//! Generalized-solution criteria evaluated on computed trajectories, and the
//! refinement study in the regularization parameter.
//!
//! Space integrals use cell-centre quadrature, time integrals the trapezoid
//! rule over the trajectory's snapshots. Gradients are face differences
//! averaged to cell centres.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{center_gradient, face_gradient, GridSpec, ScalarField};
use crate::model::{resupply_field, InitialData, ModelConfig, ModelError, ResupplySpec};
use crate::par;
use crate::stepper::{run, RunError, SimState, SnapshotSchedule, Trajectory};

#[derive(Debug, Error)]
pub enum WeakError {
    #[error("test function support ends at t = {end}, beyond the trajectory's last snapshot {t_final}")]
    SupportBeyondHorizon { end: f64, t_final: f64 },
    #[error("test function must be nonnegative (amplitude {0})")]
    NegativeTestFunction(f64),
    #[error("test function radii must be positive")]
    BadRadii,
    #[error("trajectory needs at least two snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("regularization ladder must be non-increasing and positive: {0:?}")]
    BadLadder(Vec<f64>),
    #[error("the refinement study needs beta = 2, got {0}")]
    NotLogistic(f64),
    #[error("uniform-state oracle run failed: {0}")]
    Oracle(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[inline]
fn bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let b = (-1.0 / q).exp();
    (b, -2.0 * s / (q * q) * b)
}

/// `A b((x-x0)/rx) b((y-y0)/ry) b((t-t0)/rt)` with `b(s) = exp(-1/(1-s^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: (f64, f64, f64),
    pub radii: (f64, f64, f64),
    pub amplitude: f64,
}

/// Value and derivatives of a test function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub dt: f64,
    pub dx: f64,
    pub dy: f64,
}

impl TestFunction {
    pub fn new(center: (f64, f64, f64), radii: (f64, f64, f64), amplitude: f64) -> Result<Self, WeakError> {
        if !(radii.0 > 0.0 && radii.1 > 0.0 && radii.2 > 0.0) {
            return Err(WeakError::BadRadii);
        }
        Ok(Self { center, radii, amplitude })
    }

    pub fn zero() -> Self {
        Self { center: (0.0, 0.0, 0.0), radii: (1.0, 1.0, 1.0), amplitude: 0.0 }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { amplitude: alpha * self.amplitude, ..*self }
    }

    /// Last time in the support.
    pub fn t_end(&self) -> f64 {
        self.center.2 + self.radii.2
    }

    pub fn jet(&self, x: f64, y: f64, t: f64) -> Jet {
        let (bx, dbx) = bump((x - self.center.0) / self.radii.0);
        let (by, dby) = bump((y - self.center.1) / self.radii.1);
        let (bt, dbt) = bump((t - self.center.2) / self.radii.2);
        let a = self.amplitude;
        Jet {
            value: a * bx * by * bt,
            dt: a * bx * by * dbt / self.radii.2,
            dx: a * dbx * by * bt / self.radii.0,
            dy: a * bx * dby * bt / self.radii.1,
        }
    }

    fn sample(&self, g: &GridSpec, t: f64) -> Vec<Jet> {
        (0..g.cells())
            .map(|k| {
                let (x, y) = g.center_of(k);
                self.jet(x, y, t)
            })
            .collect()
    }
}

/// Random bumps with centres and radii fitted inside `[0, lx] x [0, ly] x [0, t_final)`.
pub fn random_bumps(grid: &GridSpec, t_final: f64, n: usize, seed: u64) -> Vec<TestFunction> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let rx = rng.gen_range(0.15..0.4) * grid.lx();
            let ry = rng.gen_range(0.15..0.4) * grid.ly();
            let rt = rng.gen_range(0.2..0.45) * t_final;
            let cx = rng.gen_range(0.0..grid.lx());
            let cy = rng.gen_range(0.0..grid.ly());
            // about half of the bumps reach back across t = 0
            let ct = rng.gen_range(0.0..(t_final - rt) * 0.999);
            TestFunction { center: (cx, cy, ct), radii: (rx, ry, rt), amplitude: rng.gen_range(0.5..2.0) }
        })
        .collect()
}

fn check_support(traj: &Trajectory, phi: &TestFunction) -> Result<(), WeakError> {
    if traj.snapshots.len() < 2 {
        return Err(WeakError::TooFewSnapshots(traj.snapshots.len()));
    }
    let t_final = traj.snapshots[traj.snapshots.len() - 1].t;
    if phi.amplitude != 0.0 && phi.t_end() > t_final * (1.0 + 1e-12) {
        return Err(WeakError::SupportBeyondHorizon { end: phi.t_end(), t_final });
    }
    Ok(())
}

/// Trapezoid weights for the snapshot times.
fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let half = 0.5 * (times[k + 1] - times[k]);
        w[k] += half;
        w[k + 1] += half;
    }
    w
}

/// `sum_t w_t * area * sum_cells integrand(state, jets)`.
fn space_time<F>(traj: &Trajectory, phi: &TestFunction, integrand: F) -> Result<f64, WeakError>
where
    F: Fn(&SimState, &[Jet]) -> Result<f64, WeakError> + Sync + Send,
{
    let g = *traj.grid();
    let times = traj.times();
    let weights = trapezoid_weights(&times);
    let pieces: Vec<Result<f64, WeakError>> =
        par::map_jobs(&traj.snapshots.iter().zip(weights).collect::<Vec<_>>(), |(s, w)| {
            if *w == 0.0 {
                return Ok(0.0);
            }
            let jets = phi.sample(&g, s.t);
            Ok(*w * g.cell_area() * integrand(s, &jets)?)
        });
    let mut total = 0.0;
    for p in pieces {
        total += p?;
    }
    Ok(total)
}

/// `-int f0 phi(., 0)`.
fn initial_term(f0: &ScalarField, phi: &TestFunction, t0: f64) -> f64 {
    let g = f0.grid();
    let jets = phi.sample(g, t0);
    -g.cell_area() * f0.values().iter().zip(&jets).map(|(f, j)| f * j.value).sum::<f64>()
}

/// LHS minus RHS of the forager identity
/// `-int int u phi_t - int u0 phi(., 0) = -int int grad u . grad phi + int int u F'(u) grad w . grad phi`.
pub fn weak_residual_u(traj: &Trajectory, phi: &TestFunction) -> Result<f64, WeakError> {
    check_support(traj, phi)?;
    let resp = traj.cfg.response();
    let body = space_time(traj, phi, |s, jets| {
        let (ux, uy) = center_gradient(&s.u);
        let (wx, wy) = center_gradient(&s.w);
        let u = s.u.values();
        let mut acc = 0.0;
        for (k, j) in jets.iter().enumerate() {
            let mob = u[k] * resp.derivative(u[k]);
            acc += -u[k] * j.dt + (ux[k] * j.dx + uy[k] * j.dy) - mob * (wx[k] * j.dx + wy[k] * j.dy);
        }
        Ok(acc)
    })?;
    Ok(body + initial_term(&traj.initial.u, phi, traj.initial.t))
}

/// LHS minus RHS of the nutrient identity
/// `-int int w phi_t - int w0 phi(., 0) = -int int grad w . grad phi + int int (-(F(u)+F(v))w - w + r) phi`.
pub fn weak_residual_w(traj: &Trajectory, phi: &TestFunction) -> Result<f64, WeakError> {
    check_support(traj, phi)?;
    let resp = traj.cfg.response();
    let spec = &traj.resupply;
    let body = space_time(traj, phi, |s, jets| {
        let (wx, wy) = center_gradient(&s.w);
        let r = resupply_field(spec, s.grid(), s.t)?;
        let (u, v, w, r) = (s.u.values(), s.v.values(), s.w.values(), r.values());
        let mut acc = 0.0;
        for (k, j) in jets.iter().enumerate() {
            let source = -(resp.value(u[k]) + resp.value(v[k])) * w[k] - w[k] + r[k];
            acc += -w[k] * j.dt + (wx[k] * j.dx + wy[k] * j.dy) - source * j.value;
        }
        Ok(acc)
    })?;
    Ok(body + initial_term(&traj.initial.w, phi, traj.initial.t))
}

/// `int |grad L|^2 psi` with `L` differenced across interior faces and `psi`
/// taken at face midpoints.
fn face_energy(l: &ScalarField, psi: &TestFunction, t: f64) -> f64 {
    let g = *l.grid();
    let h = g.h();
    let grad = face_gradient(l);
    let mut acc = 0.0;
    for j in 0..g.ny() {
        for i in 1..g.nx() {
            let d = grad.xflux()[j * (g.nx() + 1) + i];
            if d != 0.0 {
                acc += d * d * psi.jet(i as f64 * h, (j as f64 + 0.5) * h, t).value;
            }
        }
    }
    for j in 1..g.ny() {
        for i in 0..g.nx() {
            let d = grad.yflux()[j * g.nx() + i];
            if d != 0.0 {
                acc += d * d * psi.jet((i as f64 + 0.5) * h, j as f64 * h, t).value;
            }
        }
    }
    acc
}

/// LHS minus RHS of the scrounger inequality tested with `psi >= 0`:
/// `-int int ln(v+1) psi_t - int ln(v0+1) psi(., 0)`
/// `>= int int |grad ln(v+1)|^2 psi - int int grad ln(v+1) . grad psi`
/// `- int int v/(v+1) (grad u . grad ln(v+1)) psi + int int v/(v+1) grad u . grad psi`
/// `+ int int v(1 - v^(beta-1))/(v+1) psi`.
pub fn weak_slack_v(traj: &Trajectory, psi: &TestFunction) -> Result<f64, WeakError> {
    if psi.amplitude < 0.0 {
        return Err(WeakError::NegativeTestFunction(psi.amplitude));
    }
    check_support(traj, psi)?;
    let beta = traj.cfg.beta;
    let body = space_time(traj, psi, |s, jets| {
        let l = s.v.map(f64::ln_1p);
        let (lx, ly) = center_gradient(&l);
        let (ux, uy) = center_gradient(&s.u);
        let (lv, v) = (l.values(), s.v.values());
        let mut acc = 0.0;
        for (k, j) in jets.iter().enumerate() {
            let q = v[k] / (v[k] + 1.0);
            let lhs = -lv[k] * j.dt;
            let rhs = -(lx[k] * j.dx + ly[k] * j.dy) - q * (ux[k] * lx[k] + uy[k] * ly[k]) * j.value
                + q * (ux[k] * j.dx + uy[k] * j.dy)
                + v[k] * (1.0 - v[k].powf(beta - 1.0)) / (v[k] + 1.0) * j.value;
            acc += lhs - rhs;
        }
        acc -= face_energy(&l, psi, s.t);
        Ok(acc)
    })?;
    let l0 = traj.initial.v.map(f64::ln_1p);
    Ok(body + initial_term(&l0, psi, traj.initial.t))
}

/// Weak quantities of one trajectory against a family of test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakEvaluation {
    pub residual_u: Vec<f64>,
    pub residual_w: Vec<f64>,
    pub slack_v: Vec<f64>,
}

impl WeakEvaluation {
    /// Largest magnitude over all three quantities.
    pub fn max_defect(&self) -> f64 {
        self.residual_u.iter().chain(&self.residual_w).chain(&self.slack_v).fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Root mean square of each quantity, in the order u, w, v.
    pub fn rms(&self) -> (f64, f64, f64) {
        let rms =
            |v: &[f64]| if v.is_empty() { 0.0 } else { (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt() };
        (rms(&self.residual_u), rms(&self.residual_w), rms(&self.slack_v))
    }
}

pub fn evaluate(traj: &Trajectory, bumps: &[TestFunction]) -> Result<WeakEvaluation, WeakError> {
    let mut e = WeakEvaluation { residual_u: Vec::new(), residual_w: Vec::new(), slack_v: Vec::new() };
    for b in bumps {
        e.residual_u.push(weak_residual_u(traj, b)?);
        e.residual_w.push(weak_residual_w(traj, b)?);
        e.slack_v.push(weak_slack_v(traj, &TestFunction { amplitude: b.amplitude.abs(), ..*b })?);
    }
    Ok(e)
}

/// Allowance multiplier applied to the uniform-state oracle's weak defect.
pub const ALLOWANCE_FACTOR: f64 = 3.0;

/// Spatially uniform data with the same means as `data`.
pub fn uniform_oracle_data(data: &InitialData) -> InitialData {
    let mean = |f: &ScalarField| crate::grid::integrate(f) / f.grid().area();
    let g = *data.u0.grid();
    InitialData {
        u0: ScalarField::constant(g, mean(&data.u0)),
        v0: ScalarField::constant(g, mean(&data.v0)),
        w0: ScalarField::constant(g, mean(&data.w0)),
    }
}

/// Constant resupply at the spatial mean of `r(., 0)`.
pub fn uniform_oracle_resupply(spec: &ResupplySpec, grid: &GridSpec) -> Result<ResupplySpec, WeakError> {
    let r0 = resupply_field(spec, grid, 0.0)?;
    Ok(ResupplySpec::constant(crate::grid::integrate(&r0) / grid.area())?)
}

/// Discretization allowance for residual and slack pass/fail:
/// `ALLOWANCE_FACTOR` times the largest weak defect of the uniform-state
/// oracle run with the same grid, time step policy and test functions.
pub fn calibrate_allowance(
    cfg: &ModelConfig,
    spec: &ResupplySpec,
    data: &InitialData,
    bumps: &[TestFunction],
) -> Result<(f64, WeakEvaluation), WeakError> {
    let grid = *data.u0.grid();
    let oracle =
        run(cfg, &uniform_oracle_resupply(spec, &grid)?, &uniform_oracle_data(data), SnapshotSchedule::EveryStep)
            .map_err(|e| WeakError::Oracle(describe(e)))?;
    if let Some(e) = &oracle.abort {
        return Err(WeakError::Oracle(e.to_string()));
    }
    let eval = evaluate(&oracle, bumps)?;
    Ok((ALLOWANCE_FACTOR * eval.max_defect(), eval))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VMassReport {
    pub times: Vec<f64>,
    /// `mass_v(0) + int_0^t (int v - int v^beta) - mass_v(t)`
    pub margins: Vec<f64>,
    pub tolerance: f64,
    pub worst_margin: f64,
    pub worst_t: f64,
    pub pass: bool,
}

/// Default tolerance on the scrounger mass inequality, relative to `max(1, mass_v(0))`.
pub const V_MASS_TOL: f64 = 1e-3;

/// `mass_v(t) <= mass_v(0) + int_0^t int (v - v^beta) + tol` at every record.
pub fn v_mass_inequality(traj: &Trajectory, rel_tol: f64) -> VMassReport {
    let d = &traj.diagnostics;
    let m0 = d[0].mass_v;
    let tolerance = rel_tol * m0.max(1.0);
    let mut acc = 0.0;
    let mut times = Vec::with_capacity(d.len());
    let mut margins = Vec::with_capacity(d.len());
    for k in 0..d.len() {
        if k > 0 {
            let (a, b) = (&d[k - 1], &d[k]);
            acc += 0.5 * (b.t - a.t) * ((a.mass_v - a.v_beta) + (b.mass_v - b.v_beta));
        }
        times.push(d[k].t);
        margins.push(m0 + acc - d[k].mass_v);
    }
    let (wi, worst) =
        margins.iter().copied().enumerate().fold((0, f64::INFINITY), |a, (k, m)| if m < a.1 { (k, m) } else { a });
    VMassReport { worst_t: times[wi], pass: worst >= -tolerance, times, margins, tolerance, worst_margin: worst }
}

/// Regularization parameters for the refinement study, sharing one setup.
#[derive(Debug, Clone)]
pub struct EpsLadder {
    eps: Vec<f64>,
    pub cfg: ModelConfig,
    pub resupply: ResupplySpec,
    pub data: InitialData,
    /// Common sampling interval for the space-time distances.
    pub sample_interval: f64,
}

impl EpsLadder {
    /// `eps` must be positive and non-increasing; repeated values are allowed.
    pub fn new(
        eps: Vec<f64>,
        cfg: ModelConfig,
        resupply: ResupplySpec,
        data: InitialData,
        sample_interval: f64,
    ) -> Result<Self, WeakError> {
        if cfg.beta != 2.0 {
            return Err(WeakError::NotLogistic(cfg.beta));
        }
        let ordered = eps.windows(2).all(|p| p[1] <= p[0]);
        if eps.is_empty() || !ordered || eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(WeakError::BadLadder(eps));
        }
        if !(sample_interval > 0.0) {
            return Err(WeakError::BadRadii);
        }
        Ok(Self { eps, cfg, resupply, data, sample_interval })
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub eps_a: f64,
    pub eps_b: f64,
    pub du: f64,
    pub dv: f64,
    pub dw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderFailure {
    pub eps: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTable {
    pub rows: Vec<DistanceRow>,
    pub failures: Vec<LadderFailure>,
    /// Every distance column non-increasing along the ladder.
    pub cauchy: bool,
}

/// `(int_0^T int_Omega |a - b|^2)^(1/2)` for each field, over matching snapshots.
pub fn space_time_distance(a: &Trajectory, b: &Trajectory) -> Option<(f64, f64, f64)> {
    if a.snapshots.len() != b.snapshots.len() || a.grid() != b.grid() {
        return None;
    }
    let times = a.times();
    if times.iter().zip(b.times()).any(|(x, y)| (x - y).abs() > 1e-9 * x.abs().max(1.0)) {
        return None;
    }
    if times.len() < 2 {
        return Some((0.0, 0.0, 0.0));
    }
    let weights = trapezoid_weights(&times);
    let area = a.grid().cell_area();
    let sq = |x: &ScalarField, y: &ScalarField| {
        let (x, y) = (x.values(), y.values());
        area * par::sum_by(x.len(), |k| (x[k] - y[k]) * (x[k] - y[k]))
    };
    let mut acc = (0.0, 0.0, 0.0);
    for ((sa, sb), w) in a.snapshots.iter().zip(&b.snapshots).zip(weights) {
        acc.0 += w * sq(&sa.u, &sb.u);
        acc.1 += w * sq(&sa.v, &sb.v);
        acc.2 += w * sq(&sa.w, &sb.w);
    }
    Some((acc.0.sqrt(), acc.1.sqrt(), acc.2.sqrt()))
}

/// Run the regularized system for every ladder entry and tabulate the
/// distances between consecutive entries.
pub fn eps_refinement(ladder: &EpsLadder) -> RefinementTable {
    let runs: Vec<Result<Trajectory, String>> = par::map_jobs(ladder.eps(), |&eps| {
        let cfg = ModelConfig { epsilon: eps, ..ladder.cfg.clone() };
        match run(&cfg, &ladder.resupply, &ladder.data, SnapshotSchedule::Interval(ladder.sample_interval)) {
            Ok(t) => match &t.abort {
                None => Ok(t),
                Some(e) => Err(format!("aborted at t = {}: {e}", t.final_state.t)),
            },
            Err(e) => Err(describe(e)),
        }
    });
    let mut failures = Vec::new();
    for (eps, r) in ladder.eps().iter().zip(&runs) {
        if let Err(error) = r {
            failures.push(LadderFailure { eps: *eps, error: error.clone() });
        }
    }
    let mut rows = Vec::new();
    for k in 0..runs.len().saturating_sub(1) {
        if let (Ok(a), Ok(b)) = (&runs[k], &runs[k + 1]) {
            if let Some((du, dv, dw)) = space_time_distance(a, b) {
                rows.push(DistanceRow { eps_a: ladder.eps()[k], eps_b: ladder.eps()[k + 1], du, dv, dw });
            }
        }
    }
    let cauchy = rows.windows(2).all(|p| p[1].du <= p[0].du && p[1].dv <= p[0].dv && p[1].dw <= p[0].dw);
    RefinementTable { rows, failures, cauchy }
}

fn describe(e: RunError) -> String {
    e.to_string()
}
