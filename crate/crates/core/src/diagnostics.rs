//! Integral functionals of a state, a-priori bound monitors, differential
//! inequality audits and a discrete checker for the Gronwall-type comparison
//! `y' <= a y z`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{dirichlet_integral, dirichlet_quotient, integrate, laplacian_neumann, GridError};
use crate::model::{gradroot_integral, resupply_field, ModelConfig, ModelError, ResupplySpec};
use crate::par;
use crate::stepper::SimState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("functional {0} evaluated to a non-finite value")]
    NonFinite(&'static str),
    #[error("series needs at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("window {tau} exceeds the series span {span}")]
    WindowTooLong { tau: f64, span: f64 },
    #[error("window must be positive, got {0}")]
    BadWindow(f64),
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("sample times must be strictly increasing (index {0})")]
    NonIncreasingTime(usize),
    #[error("constants must be positive: {0}")]
    BadConstant(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Functionals of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub sup_w: f64,
    /// `int |grad w|^2`
    pub grad_w_sq: f64,
    /// `int |Lap w|^2`
    pub lap_w_sq: f64,
    /// `int |grad u|^2 / u`
    pub dirichlet_u: f64,
    /// `int (u ln u + 1/e)`
    pub entropy_u: f64,
    /// `int u ln u + 1/2 int |grad w|^2 / w`
    pub energy_f: f64,
    /// `entropy_u + 1/2 int |grad w|^2 / w + lambda int |grad w|^2`
    pub combined_y: f64,
    pub v_beta: f64,
    pub v_sq: f64,
    /// `int |grad sqrt r|^2`
    pub gradroot_r: f64,
    pub dt_used: f64,
    pub u_sq: f64,
}

impl DiagnosticsRecord {
    /// Column names, in serialization order.
    pub const COLUMNS: [&'static str; 17] = [
        "t",
        "mass_u",
        "mass_v",
        "sup_u",
        "sup_v",
        "sup_w",
        "grad_w_sq",
        "lap_w_sq",
        "dirichlet_u",
        "entropy_u",
        "energy_F",
        "combined_y",
        "v_beta",
        "v_sq",
        "gradroot_r",
        "dt_used",
        "u_sq",
    ];

    pub fn to_array(&self) -> [f64; 17] {
        [
            self.t,
            self.mass_u,
            self.mass_v,
            self.sup_u,
            self.sup_v,
            self.sup_w,
            self.grad_w_sq,
            self.lap_w_sq,
            self.dirichlet_u,
            self.entropy_u,
            self.energy_f,
            self.combined_y,
            self.v_beta,
            self.v_sq,
            self.gradroot_r,
            self.dt_used,
            self.u_sq,
        ]
    }

    pub fn from_array(a: [f64; 17]) -> Self {
        Self {
            t: a[0],
            mass_u: a[1],
            mass_v: a[2],
            sup_u: a[3],
            sup_v: a[4],
            sup_w: a[5],
            grad_w_sq: a[6],
            lap_w_sq: a[7],
            dirichlet_u: a[8],
            entropy_u: a[9],
            energy_f: a[10],
            combined_y: a[11],
            v_beta: a[12],
            v_sq: a[13],
            gradroot_r: a[14],
            dt_used: a[15],
            u_sq: a[16],
        }
    }

    /// `int u ln u + 1/2 int |grad w|^2/w + |Omega|/e`, recovered from the
    /// combined functional.
    pub fn quasi_energy(&self, lambda: f64) -> f64 {
        self.combined_y - lambda * self.grad_w_sq
    }
}

#[inline]
fn xlogx(s: f64) -> f64 {
    if s > 0.0 {
        s * s.ln()
    } else {
        0.0
    }
}

/// Evaluate every functional on `state`.
pub fn record(
    state: &SimState,
    cfg: &ModelConfig,
    spec: &ResupplySpec,
    dt_used: f64,
) -> Result<DiagnosticsRecord, DiagnosticsError> {
    let g = *state.grid();
    let area = g.cell_area();
    let (u, v) = (state.u.values(), state.v.values());
    let inv_e = (-1.0f64).exp();

    let grad_w_sq = dirichlet_integral(&state.w);
    let lap = laplacian_neumann(&state.w);
    let lap_w_sq = area * par::dot(lap.values(), lap.values());
    let dirichlet_u = dirichlet_quotient(&state.u, &state.u, cfg.u_floor)?;
    let fisher_w = dirichlet_quotient(&state.w, &state.w, cfg.w_floor)?;
    let ulogu = area * par::sum_by(u.len(), |k| xlogx(u[k]));
    let entropy_u = area * par::sum_by(u.len(), |k| xlogx(u[k]) + inv_e);
    let beta = cfg.beta;
    let gradroot_r = match spec.uniform_value() {
        Some(_) => 0.0,
        None => gradroot_integral(&resupply_field(spec, &g, state.t)?),
    };

    let rec = DiagnosticsRecord {
        t: state.t,
        mass_u: integrate(&state.u),
        mass_v: integrate(&state.v),
        sup_u: state.u.max(),
        sup_v: state.v.max(),
        sup_w: state.w.max(),
        grad_w_sq,
        lap_w_sq,
        dirichlet_u,
        entropy_u,
        energy_f: ulogu + 0.5 * fisher_w,
        combined_y: entropy_u + 0.5 * fisher_w + cfg.lambda * grad_w_sq,
        v_beta: area * par::sum_by(v.len(), |k| v[k].max(0.0).powf(beta)),
        v_sq: area * par::dot(v, v),
        gradroot_r,
        dt_used,
        u_sq: area * par::dot(u, u),
    };
    for (name, val) in DiagnosticsRecord::COLUMNS.iter().zip(rec.to_array()) {
        if !val.is_finite() {
            return Err(DiagnosticsError::NonFinite(name));
        }
    }
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub max_rel_deviation: f64,
    pub worst_t: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Default relative tolerance on forager mass drift.
pub const MASS_TOL: f64 = 1e-10;

pub fn check_mass_conservation(series: &[DiagnosticsRecord], tolerance: f64) -> Result<MassReport, DiagnosticsError> {
    let first = series.first().ok_or(DiagnosticsError::TooShort { needed: 1, got: 0 })?;
    let m0 = first.mass_u;
    let mut worst = (0.0, first.t);
    for r in series {
        let dev = (r.mass_u - m0).abs() / m0.abs();
        if dev > worst.0 {
            worst = (dev, r.t);
        }
    }
    Ok(MassReport { max_rel_deviation: worst.0, worst_t: worst.1, tolerance, pass: worst.0 <= tolerance })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WBoundReport {
    pub bound: f64,
    pub max_sup_w: f64,
    pub worst_t: f64,
    pub pass: bool,
}

/// Default additive slack on the nutrient sup bound.
pub const W_BOUND_TOL: f64 = 1e-8;

/// `sup_w(t) <= bound + slack` for every record.
pub fn check_w_bound(series: &[DiagnosticsRecord], bound: f64, slack: f64) -> Result<WBoundReport, DiagnosticsError> {
    let first = series.first().ok_or(DiagnosticsError::TooShort { needed: 1, got: 0 })?;
    let mut worst = (first.sup_w, first.t);
    for r in series {
        if r.sup_w > worst.0 {
            worst = (r.sup_w, r.t);
        }
    }
    Ok(WBoundReport { bound, max_sup_w: worst.0, worst_t: worst.1, pass: worst.0 <= bound + slack })
}

/// `int_t^{t+tau} base(s) ds` for every sample start time with `t + tau <= T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedSeries {
    pub tau: f64,
    pub starts: Vec<f64>,
    pub values: Vec<f64>,
}

impl WindowedSeries {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_times(times: &[f64]) -> Result<(), DiagnosticsError> {
    for (k, pair) in times.windows(2).enumerate() {
        if !(pair[1] > pair[0]) {
            return Err(DiagnosticsError::NonIncreasingTime(k + 1));
        }
    }
    Ok(())
}

/// Cumulative trapezoid integral of the piecewise-linear interpolant.
fn cumulative(times: &[f64], base: &[f64]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(times.len());
    acc.push(0.0);
    for k in 1..times.len() {
        let prev = acc[k - 1];
        acc.push(prev + 0.5 * (times[k] - times[k - 1]) * (base[k] + base[k - 1]));
    }
    acc
}

/// Integral of the interpolant from `times[0]` to `t`.
fn integral_to(times: &[f64], base: &[f64], cum: &[f64], t: f64) -> f64 {
    let k = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(k) => return cum[k],
        Err(k) => k,
    };
    if k == 0 {
        return 0.0;
    }
    if k >= times.len() {
        return cum[times.len() - 1];
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let s = (t - t0) / (t1 - t0);
    let bt = base[k - 1] + s * (base[k] - base[k - 1]);
    cum[k - 1] + 0.5 * (t - t0) * (base[k - 1] + bt)
}

/// Sliding-window integrals over the sample grid.
pub fn windowed(times: &[f64], base: &[f64], tau: f64) -> Result<WindowedSeries, DiagnosticsError> {
    if times.len() != base.len() {
        return Err(DiagnosticsError::LengthMismatch(times.len(), base.len()));
    }
    if times.len() < 2 {
        return Err(DiagnosticsError::TooShort { needed: 2, got: times.len() });
    }
    check_times(times)?;
    if !(tau > 0.0) {
        return Err(DiagnosticsError::BadWindow(tau));
    }
    let span = times[times.len() - 1] - times[0];
    if tau > span * (1.0 + 1e-12) {
        return Err(DiagnosticsError::WindowTooLong { tau, span });
    }
    let cum = cumulative(times, base);
    let t_end = times[times.len() - 1];
    let mut starts = Vec::new();
    let mut values = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        if t + tau > t_end * (1.0 + 1e-12) + 1e-12 {
            break;
        }
        let hi = (t + tau).min(t_end);
        starts.push(t);
        values.push(integral_to(times, base, &cum, hi) - cum[k]);
    }
    Ok(WindowedSeries { tau, starts, values })
}

/// `theta = min(1, T/2)`.
pub fn gronwall_window(span: f64) -> f64 {
    (span / 2.0).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GronwallInputs {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl GronwallInputs {
    pub fn theta(&self) -> f64 {
        gronwall_window(self.times[self.times.len() - 1] - self.times[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub theta: f64,
    pub derivative_ok: bool,
    pub y_window_ok: bool,
    pub z_window_ok: bool,
    pub hypotheses_hold: bool,
    pub max_y_window: f64,
    pub max_z_window: f64,
    pub bound: f64,
    pub max_y: f64,
    /// Only asserted when the hypotheses hold.
    pub conclusion_holds: bool,
}

/// Relative allowance on window and conclusion comparisons.
const GRONWALL_REL: f64 = 1e-9;

/// Discrete check of `y' <= a y z`, the windowed bounds on `y` and `z`, and
/// the conclusion `y <= max(y(0), b) e^{2ac}`.
///
/// The derivative hypothesis is tested per interval as
/// `(y_{k+1} - y_k)/dt <= a max(y_k, y_{k+1}) max(z_k, z_{k+1}) + slack`,
/// which holds for any exact solution with `z` piecewise constant on the
/// sample intervals.
pub fn gronwall_check(inp: &GronwallInputs, slack: f64) -> Result<GronwallReport, DiagnosticsError> {
    let n = inp.times.len();
    if inp.y.len() != n {
        return Err(DiagnosticsError::LengthMismatch(n, inp.y.len()));
    }
    if inp.z.len() != n {
        return Err(DiagnosticsError::LengthMismatch(n, inp.z.len()));
    }
    if n < 3 {
        return Err(DiagnosticsError::TooShort { needed: 3, got: n });
    }
    check_times(&inp.times)?;
    if !(inp.a > 0.0 && inp.b > 0.0 && inp.c > 0.0) {
        return Err(DiagnosticsError::BadConstant(format!("a={}, b={}, c={}", inp.a, inp.b, inp.c)));
    }
    let theta = inp.theta();
    let mut derivative_ok = true;
    for k in 0..n - 1 {
        let dt = inp.times[k + 1] - inp.times[k];
        let dy = (inp.y[k + 1] - inp.y[k]) / dt;
        let rhs = inp.a * inp.y[k].max(inp.y[k + 1]) * inp.z[k].max(inp.z[k + 1]);
        if dy > rhs + slack {
            derivative_ok = false;
            break;
        }
    }
    let max_y_window = windowed(&inp.times, &inp.y, theta)?.max();
    let max_z_window = windowed(&inp.times, &inp.z, theta)?.max();
    let y_window_ok = max_y_window <= inp.b * (1.0 + GRONWALL_REL);
    let z_window_ok = max_z_window <= inp.c * (1.0 + GRONWALL_REL);
    let hypotheses_hold = derivative_ok && y_window_ok && z_window_ok;
    let bound = inp.y[0].max(inp.b) * (2.0 * inp.a * inp.c).exp();
    let max_y = inp.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GronwallReport {
        theta,
        derivative_ok,
        y_window_ok,
        z_window_ok,
        hypotheses_hold,
        max_y_window,
        max_z_window,
        bound,
        max_y,
        conclusion_holds: hypotheses_hold && max_y <= bound * (1.0 + GRONWALL_REL),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Inequality {
    /// `1/2 d/dt int|grad w|^2 + int|grad w|^2 + 1/4 int|Lap w|^2
    ///  <= C int|grad u|^2/u + M^2 int v^2 + C`
    GradW,
    /// `d/dt E + E + 1/2 int|grad u|^2/u
    ///  <= delta int|Lap w|^2 + 1/(4 delta) int v^2 + 2 int|grad sqrt r|^2 + C`
    /// with `E = int (u ln u + 1/e) + 1/2 int |grad w|^2/w`.
    QuasiEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConstants {
    pub c: f64,
    pub m: f64,
    pub delta: f64,
    /// Weight used when the series was recorded.
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub which: Inequality,
    pub constants: AuditConstants,
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fraction_ok: f64,
    pub worst_residual: f64,
    pub worst_t: f64,
}

/// Residual `RHS - LHS` at every interior sample, with time derivatives by
/// centred differences. Endpoints are dropped.
pub fn audit_inequality(
    series: &[DiagnosticsRecord],
    which: Inequality,
    constants: AuditConstants,
    tolerance: f64,
) -> Result<AuditReport, DiagnosticsError> {
    if series.len() < 3 {
        return Err(DiagnosticsError::TooShort { needed: 3, got: series.len() });
    }
    let times: Vec<f64> = series.iter().map(|r| r.t).collect();
    check_times(&times)?;
    let AuditConstants { c, m, delta, lambda } = constants;
    if which == Inequality::QuasiEnergy && !(delta > 0.0) {
        return Err(DiagnosticsError::BadConstant(format!("delta = {delta}")));
    }
    let functional = |r: &DiagnosticsRecord| match which {
        Inequality::GradW => r.grad_w_sq,
        Inequality::QuasiEnergy => r.quasi_energy(lambda),
    };
    let mut out_t = Vec::with_capacity(series.len() - 2);
    let mut residuals = Vec::with_capacity(series.len() - 2);
    for k in 1..series.len() - 1 {
        let (prev, cur, next) = (&series[k - 1], &series[k], &series[k + 1]);
        let deriv = (functional(next) - functional(prev)) / (next.t - prev.t);
        let (lhs, rhs) = match which {
            Inequality::GradW => {
                (0.5 * deriv + cur.grad_w_sq + 0.25 * cur.lap_w_sq, c * cur.dirichlet_u + m * m * cur.v_sq + c)
            }
            Inequality::QuasiEnergy => (
                deriv + functional(cur) + 0.5 * cur.dirichlet_u,
                delta * cur.lap_w_sq + cur.v_sq / (4.0 * delta) + 2.0 * cur.gradroot_r + c,
            ),
        };
        out_t.push(cur.t);
        residuals.push(rhs - lhs);
    }
    let ok = residuals.iter().filter(|&&r| r >= -tolerance).count();
    let (worst_idx, worst_residual) =
        residuals
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, r)| if r < acc.1 { (k, r) } else { acc });
    Ok(AuditReport {
        which,
        constants,
        fraction_ok: ok as f64 / residuals.len() as f64,
        worst_residual,
        worst_t: out_t[worst_idx],
        times: out_t,
        residuals,
    })
}

/// Smallest `C` in `[0, c_max]` (to relative precision `1e-6`) for which at
/// least `target_fraction` of the residuals are `>= -tolerance`.
///
/// Residuals are nondecreasing in `C`, so bisection applies. Returns `None`
/// when even `c_max` is infeasible.
pub fn bisect_constant(
    series: &[DiagnosticsRecord],
    which: Inequality,
    base: AuditConstants,
    target_fraction: f64,
    tolerance: f64,
    c_max: f64,
) -> Result<Option<f64>, DiagnosticsError> {
    let feasible = |c: f64| -> Result<bool, DiagnosticsError> {
        let rep = audit_inequality(series, which, AuditConstants { c, ..base }, tolerance)?;
        Ok(rep.fraction_ok >= target_fraction)
    };
    if !feasible(c_max)? {
        return Ok(None);
    }
    if feasible(0.0)? {
        return Ok(Some(0.0));
    }
    let (mut lo, mut hi) = (0.0, c_max);
    while hi - lo > 1e-6 * hi.max(1e-12) {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorEntry {
    pub name: String,
    pub max_all: f64,
    pub max_final_half: f64,
    pub second_quarter_mean: f64,
    pub last_quarter_mean: f64,
    pub no_growth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub tau: f64,
    pub entries: Vec<MonitorEntry>,
}

impl BoundednessReport {
    pub fn all_no_growth(&self) -> bool {
        self.entries.iter().all(|e| e.no_growth)
    }

    pub fn entry(&self, name: &str) -> Option<&MonitorEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Allowed ratio of the last-quarter mean to the second-quarter mean.
pub const GROWTH_ALLOWANCE: f64 = 1.05;

/// Quarter means below this fraction of the series peak count as roundoff.
pub const GROWTH_NOISE_FLOOR: f64 = 1e-12;

/// Summarize one series over time quarters.
pub fn growth_entry(name: &str, times: &[f64], values: &[f64]) -> MonitorEntry {
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let span = t1 - t0;
    let in_range = |lo: f64, hi: f64| -> Vec<f64> {
        times.iter().zip(values).filter(|(&t, _)| t >= t0 + lo * span && t <= t0 + hi * span).map(|(_, &v)| v).collect()
    };
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_all = max(values);
    let max_final_half = max(&in_range(0.5, 1.0));
    let second = mean(&in_range(0.25, 0.5));
    let last = mean(&in_range(0.75, 1.0));
    let floor = GROWTH_NOISE_FLOOR * max_all.abs();
    let no_growth = max_final_half <= max_all && last <= GROWTH_ALLOWANCE * second + floor;
    MonitorEntry {
        name: name.to_string(),
        max_all,
        max_final_half,
        second_quarter_mean: second,
        last_quarter_mean: last,
        no_growth,
    }
}

type Column = fn(&DiagnosticsRecord) -> f64;

/// Growth flags for every monitored functional of a completed run.
pub fn boundedness_monitor(series: &[DiagnosticsRecord]) -> Result<BoundednessReport, DiagnosticsError> {
    if series.len() < 3 {
        return Err(DiagnosticsError::TooShort { needed: 3, got: series.len() });
    }
    let times: Vec<f64> = series.iter().map(|r| r.t).collect();
    check_times(&times)?;
    let tau = gronwall_window(times[times.len() - 1] - times[0]);
    let col = |f: fn(&DiagnosticsRecord) -> f64| series.iter().map(f).collect::<Vec<f64>>();
    let mut entries = Vec::new();
    let plain: [(&str, Column); 6] = [
        ("grad_w_sq", |r| r.grad_w_sq),
        ("combined_y", |r| r.combined_y),
        ("mass_v", |r| r.mass_v),
        ("sup_u", |r| r.sup_u),
        ("sup_v", |r| r.sup_v),
        ("sup_w", |r| r.sup_w),
    ];
    for (name, f) in plain {
        entries.push(growth_entry(name, &times, &col(f)));
    }
    let windowed_cols: [(&str, Column); 2] = [("windowed_v_beta", |r| r.v_beta), ("windowed_u_sq", |r| r.u_sq)];
    for (name, f) in windowed_cols {
        let ws = windowed(&times, &col(f), tau)?;
        entries.push(growth_entry(name, &ws.starts, &ws.values));
    }
    Ok(BoundednessReport { tau, entries })
}
