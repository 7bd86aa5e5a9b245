//! Model parameters, the taxis response `F`, the nutrient resupply `r` and
//! admissibility checks on initial data.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{dirichlet_integral, integrate, GridSpec, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("beta = {0} is outside the supported range beta >= 2")]
    BetaOutOfRange(f64),
    #[error("beta = 2 requires a regularization epsilon > 0, got {0}")]
    MissingRegularization(f64),
    #[error("beta = {beta} > 2 runs the unregularized response; epsilon must be 0, got {epsilon}")]
    SpuriousRegularization { beta: f64, epsilon: f64 },
    #[error("invalid time settings: {0}")]
    BadTime(String),
    #[error("invalid numerical setting: {0}")]
    BadNumerics(String),
    #[error("response evaluated at negative density {0}")]
    NegativeArgument(f64),
    #[error("resupply is invalid: {0}")]
    BadResupply(String),
    #[error("resupply profile lives on a different grid")]
    GridMismatch,
}

/// Parameters of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Logistic exponent of the scrounger source `v(1 - v^(beta-1))`.
    pub beta: f64,
    /// Regularization of the response; 0 for `beta > 2`.
    pub epsilon: f64,
    pub t_final: f64,
    pub dt_init: f64,
    pub cfl_advect: f64,
    pub cfl_react: f64,
    /// Floor on face-averaged `w` in `|grad w|^2 / w`.
    pub w_floor: f64,
    /// Floor on face-averaged `u` in `|grad u|^2 / u`.
    pub u_floor: f64,
    /// Weight of `int |grad w|^2` in the combined functional.
    pub lambda: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl ModelConfig {
    /// Defaults for everything except the model pair `(beta, epsilon)`.
    pub fn new(beta: f64, epsilon: f64) -> Self {
        Self {
            beta,
            epsilon,
            t_final: 1.0,
            dt_init: 1e-2,
            cfl_advect: 0.2,
            cfl_react: 0.5,
            w_floor: 1e-10,
            u_floor: 1e-10,
            lambda: 1.0,
            solver_tol: 1e-10,
            solver_max_iter: 10_000,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.beta >= 2.0 && self.beta.is_finite()) {
            return Err(ModelError::BetaOutOfRange(self.beta));
        }
        if self.beta == 2.0 {
            if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
                return Err(ModelError::MissingRegularization(self.epsilon));
            }
        } else if self.epsilon != 0.0 {
            return Err(ModelError::SpuriousRegularization { beta: self.beta, epsilon: self.epsilon });
        }
        if !(self.dt_init > 0.0 && self.dt_init.is_finite()) {
            return Err(ModelError::BadTime(format!("dt_init must be positive, got {}", self.dt_init)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(ModelError::BadTime(format!("t_final must be >= 0, got {}", self.t_final)));
        }
        if !(self.cfl_advect > 0.0 && self.cfl_advect <= 1.0) {
            return Err(ModelError::BadNumerics(format!("cfl_advect must lie in (0, 1], got {}", self.cfl_advect)));
        }
        if !(self.cfl_react > 0.0 && self.cfl_react.is_finite()) {
            return Err(ModelError::BadNumerics(format!("cfl_react must be positive, got {}", self.cfl_react)));
        }
        for (name, v) in [("w_floor", self.w_floor), ("u_floor", self.u_floor), ("solver_tol", self.solver_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::BadNumerics(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(ModelError::BadNumerics(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.solver_max_iter == 0 {
            return Err(ModelError::BadNumerics("solver_max_iter must be positive".into()));
        }
        Ok(())
    }

    pub fn response(&self) -> Response {
        if self.beta > 2.0 {
            Response::Identity
        } else {
            Response::Saturating { epsilon: self.epsilon }
        }
    }
}

/// The response `F`: identity for `beta > 2`, `s / (1 + eps s)` for `beta = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Response {
    Identity,
    Saturating { epsilon: f64 },
}

impl Response {
    /// `F(s)` for `s >= 0`; no sign check.
    #[inline]
    pub fn value(self, s: f64) -> f64 {
        match self {
            Response::Identity => s,
            Response::Saturating { epsilon } => s / (1.0 + epsilon * s),
        }
    }

    #[inline]
    pub fn derivative(self, s: f64) -> f64 {
        match self {
            Response::Identity => 1.0,
            Response::Saturating { epsilon } => {
                let d = 1.0 + epsilon * s;
                1.0 / (d * d)
            }
        }
    }
}

pub fn f_eval(s: f64, cfg: &ModelConfig) -> Result<f64, ModelError> {
    if s < 0.0 || s.is_nan() {
        return Err(ModelError::NegativeArgument(s));
    }
    Ok(cfg.response().value(s))
}

pub fn f_prime(s: f64, cfg: &ModelConfig) -> Result<f64, ModelError> {
    if s < 0.0 || s.is_nan() {
        return Err(ModelError::NegativeArgument(s));
    }
    Ok(cfg.response().derivative(s))
}

/// Bounded nonnegative time modulation of a separable resupply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeProfile {
    Constant(f64),
    /// `exp(-rate t)`
    Exponential {
        rate: f64,
    },
    /// `mean + amplitude sin(2 pi t / period)`, requires `mean >= |amplitude|`
    Periodic {
        mean: f64,
        amplitude: f64,
        period: f64,
    },
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant(c) => c,
            TimeProfile::Exponential { rate } => (-rate * t).exp(),
            TimeProfile::Periodic { mean, amplitude, period } => {
                mean + amplitude * (2.0 * std::f64::consts::PI * t / period).sin()
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            TimeProfile::Constant(c) => c,
            TimeProfile::Exponential { .. } => 1.0,
            TimeProfile::Periodic { mean, amplitude, .. } => mean + amplitude.abs(),
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let ok = match *self {
            TimeProfile::Constant(c) => c >= 0.0 && c.is_finite(),
            TimeProfile::Exponential { rate } => rate >= 0.0 && rate.is_finite(),
            TimeProfile::Periodic { mean, amplitude, period } => {
                mean.is_finite() && amplitude.is_finite() && mean >= amplitude.abs() && period > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::BadResupply(format!("time profile {self:?} is not bounded and nonnegative")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResupplyKind {
    Zero,
    Constant(f64),
    /// `r(x, t) = g(x) s(t)`
    Separable {
        g: ScalarField,
        s: TimeProfile,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResupplySpec {
    pub kind: ResupplyKind,
}

impl ResupplySpec {
    pub fn zero() -> Self {
        Self { kind: ResupplyKind::Zero }
    }

    pub fn constant(r0: f64) -> Result<Self, ModelError> {
        let spec = Self { kind: ResupplyKind::Constant(r0) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn separable(g: ScalarField, s: TimeProfile) -> Result<Self, ModelError> {
        let spec = Self { kind: ResupplyKind::Separable { g, s } };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match &self.kind {
            ResupplyKind::Zero => Ok(()),
            ResupplyKind::Constant(r0) => {
                if *r0 >= 0.0 && r0.is_finite() {
                    Ok(())
                } else {
                    Err(ModelError::BadResupply(format!("constant rate must be >= 0, got {r0}")))
                }
            }
            ResupplyKind::Separable { g, s } => {
                s.validate()?;
                if g.min() < 0.0 {
                    return Err(ModelError::BadResupply(format!("spatial profile has negative value {}", g.min())));
                }
                Ok(())
            }
        }
    }

    /// `sup |r|` over space and time.
    pub fn r_star(&self) -> f64 {
        match &self.kind {
            ResupplyKind::Zero => 0.0,
            ResupplyKind::Constant(r0) => *r0,
            ResupplyKind::Separable { g, s } => g.max().max(0.0) * s.sup(),
        }
    }

    /// The rate, if it is constant in space and time.
    pub fn uniform_value(&self) -> Option<f64> {
        match &self.kind {
            ResupplyKind::Zero => Some(0.0),
            ResupplyKind::Constant(r0) => Some(*r0),
            ResupplyKind::Separable { .. } => None,
        }
    }
}

/// Sample `r(., t)` on `grid`.
pub fn resupply_field(spec: &ResupplySpec, grid: &GridSpec, t: f64) -> Result<ScalarField, ModelError> {
    match &spec.kind {
        ResupplyKind::Zero => Ok(ScalarField::zeros(*grid)),
        ResupplyKind::Constant(r0) => Ok(ScalarField::constant(*grid, *r0)),
        ResupplyKind::Separable { g, s } => {
            if g.grid() != grid {
                return Err(ModelError::GridMismatch);
            }
            let st = s.eval(t);
            Ok(g.map(|x| x * st))
        }
    }
}

/// Gaussian bump `amplitude * exp(-|x - c|^2 / (2 sigma^2))` at cell centres.
pub fn gaussian(grid: GridSpec, amplitude: f64, cx: f64, cy: f64, sigma: f64) -> ScalarField {
    let s2 = 2.0 * sigma * sigma;
    ScalarField::from_fn(grid, move |x, y| {
        let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        amplitude * (-d2 / s2).exp()
    })
}

/// Floor inside the square root when differentiating `sqrt(r)`.
pub const SQRT_FLOOR: f64 = 1e-14;

/// `int |grad sqrt(r(., t))|^2` by face differences.
pub fn gradroot_integral(r: &ScalarField) -> f64 {
    dirichlet_integral(&r.map(|v| (v.max(0.0) + SQRT_FLOOR).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResupplyReport {
    pub r_star: f64,
    pub windowed_gradroot_sup: f64,
    pub negative_samples: usize,
    pub ladder_points: usize,
    pub admissible: bool,
}

/// Sub-intervals per window in the time quadrature.
const WINDOW_SUBSTEPS: usize = 40;

/// Check boundedness and the windowed `int_t^{t+window} int |grad sqrt r|^2`.
///
/// Start times run over `0, window/10, ...` up to `t_end`.
pub fn validate_resupply(
    spec: &ResupplySpec,
    grid: &GridSpec,
    window: f64,
    t_end: f64,
) -> Result<ResupplyReport, ModelError> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(ModelError::BadTime(format!("window must be positive, got {window}")));
    }
    let r_star = spec.r_star();
    let spacing = window / 10.0;
    let ladder_points = (t_end.max(0.0) / spacing + 1e-9).floor() as usize + 1;

    // G(s) on a fine grid of step window/WINDOW_SUBSTEPS covering every window.
    let sub = window / WINDOW_SUBSTEPS as f64;
    let per_ladder = WINDOW_SUBSTEPS / 10;
    let n_samples = (ladder_points - 1) * per_ladder + WINDOW_SUBSTEPS + 1;
    let mut negative_samples = 0;
    let mut g_series = Vec::with_capacity(n_samples);
    for n in 0..n_samples {
        let r = resupply_field(spec, grid, n as f64 * sub)?;
        negative_samples += r.values().iter().filter(|&&v| v < 0.0).count();
        g_series.push(gradroot_integral(&r));
    }
    let mut sup: f64 = 0.0;
    for k in 0..ladder_points {
        let lo = k * per_ladder;
        let seg = &g_series[lo..=lo + WINDOW_SUBSTEPS];
        let mut acc = 0.5 * (seg[0] + seg[WINDOW_SUBSTEPS]);
        acc += seg[1..WINDOW_SUBSTEPS].iter().sum::<f64>();
        sup = sup.max(acc * sub);
    }
    let admissible = negative_samples == 0 && r_star.is_finite() && sup.is_finite();
    Ok(ResupplyReport { r_star, windowed_gradroot_sup: sup, negative_samples, ladder_points, admissible })
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub u0: ScalarField,
    pub v0: ScalarField,
    pub w0: ScalarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub min: f64,
    pub max: f64,
    pub integral: f64,
}

impl FieldSummary {
    pub fn of(f: &ScalarField) -> Self {
        Self { min: f.min(), max: f.max(), integral: integrate(f) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialViolation {
    GridMismatch,
    NonFinite(String),
    Negative { field: String, min: f64 },
    IdenticallyZero(String),
    NotStrictlyPositive { field: String, min: f64 },
}

impl fmt::Display for InitialViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialViolation::GridMismatch => write!(f, "initial fields do not share one grid"),
            InitialViolation::NonFinite(name) => write!(f, "{name} contains non-finite values"),
            InitialViolation::Negative { field, min } => write!(f, "{field} has negative values (min {min})"),
            InitialViolation::IdenticallyZero(name) => write!(f, "{name} identically zero"),
            InitialViolation::NotStrictlyPositive { field, min } => {
                write!(f, "{field} not strictly positive (min {min}); the initial nutrient must be > 0 everywhere")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDataReport {
    pub u0: FieldSummary,
    pub v0: FieldSummary,
    pub w0: FieldSummary,
    pub violations: Vec<InitialViolation>,
}

impl InitialDataReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_initial_data(data: &InitialData) -> InitialDataReport {
    let mut violations = Vec::new();
    if data.u0.grid() != data.v0.grid() || data.u0.grid() != data.w0.grid() {
        violations.push(InitialViolation::GridMismatch);
    }
    for (name, f) in [("u0", &data.u0), ("v0", &data.v0), ("w0", &data.w0)] {
        if !f.is_finite() {
            violations.push(InitialViolation::NonFinite(name.into()));
        }
    }
    for (name, f) in [("u0", &data.u0), ("v0", &data.v0)] {
        let min = f.min();
        if min < 0.0 {
            violations.push(InitialViolation::Negative { field: name.into(), min });
        }
        if f.values().iter().all(|&v| v == 0.0) {
            violations.push(InitialViolation::IdenticallyZero(name.into()));
        }
    }
    let wmin = data.w0.min();
    if !(wmin > 0.0) {
        violations.push(InitialViolation::NotStrictlyPositive { field: "w0".into(), min: wmin });
    }
    InitialDataReport {
        u0: FieldSummary::of(&data.u0),
        v0: FieldSummary::of(&data.v0),
        w0: FieldSummary::of(&data.w0),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cfg2(eps: f64) -> ModelConfig {
        ModelConfig::new(2.0, eps)
    }

    #[test]
    fn config_case_split() {
        assert!(ModelConfig::new(3.0, 0.0).validate().is_ok());
        assert!(cfg2(0.1).validate().is_ok());
        assert_eq!(cfg2(0.0).validate(), Err(ModelError::MissingRegularization(0.0)));
        assert!(matches!(ModelConfig::new(3.0, 0.1).validate(), Err(ModelError::SpuriousRegularization { .. })));
        assert!(matches!(ModelConfig::new(1.5, 0.0).validate(), Err(ModelError::BetaOutOfRange(_))));
        let mut c = ModelConfig::new(3.0, 0.0);
        c.cfl_advect = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn response_values() {
        let c3 = ModelConfig::new(3.0, 0.0);
        assert_eq!(f_eval(0.0, &c3).unwrap(), 0.0);
        assert_eq!(f_eval(0.0, &cfg2(0.5)).unwrap(), 0.0);
        assert_eq!(f_eval(7.5, &c3).unwrap(), 7.5);
        assert_eq!(f_eval(2.0, &cfg2(0.5)).unwrap(), 1.0);
        assert_eq!(f_prime(0.0, &c3).unwrap(), 1.0);
        assert_eq!(f_prime(0.0, &cfg2(0.5)).unwrap(), 1.0);
        assert_eq!(f_prime(1.0, &cfg2(1.0)).unwrap(), 0.25);
        assert!(f_eval(-1.0, &c3).is_err());
        assert!(f_prime(-1e-3, &cfg2(0.5)).is_err());
    }

    #[test]
    fn derivative_matches_central_difference() {
        let delta = 1e-5;
        for cfg in [cfg2(0.5), cfg2(1e-3), ModelConfig::new(2.5, 0.0)] {
            let mut s = 1e-4;
            while s <= 1e6 {
                let fd = (f_eval(s + delta, &cfg).unwrap() - f_eval(s - delta, &cfg).unwrap()) / (2.0 * delta);
                let exact = f_prime(s, &cfg).unwrap();
                // roundoff in the difference grows like eps * F(s) / delta
                let tol = 1e-8 + 4.0 * f64::EPSILON * f_eval(s, &cfg).unwrap() / delta;
                assert!((fd - exact).abs() <= tol, "s={s}: {fd} vs {exact}");
                s *= 1.7;
            }
        }
    }

    proptest! {
        #[test]
        fn response_bounds(s in 0.0f64..1e6, eps in 1e-4f64..10.0) {
            let c = cfg2(eps);
            let f = f_eval(s, &c).unwrap();
            prop_assert!(f >= 0.0 && f <= s);
            prop_assert!(f <= 1.0 / eps * (1.0 + 1e-15));
            let d = f_prime(s, &c).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn resupply_within_bounds(
            t in 0.0f64..50.0, amp in 0.0f64..3.0, rate in 0.0f64..2.0,
            mean in 0.0f64..2.0, frac in 0.0f64..1.0, which in 0usize..4,
        ) {
            let g = GridSpec::unit_square(6).unwrap();
            let spec = match which {
                0 => ResupplySpec::zero(),
                1 => ResupplySpec::constant(amp).unwrap(),
                2 => ResupplySpec::separable(gaussian(g, amp, 0.4, 0.6, 0.2), TimeProfile::Exponential { rate }).unwrap(),
                _ => ResupplySpec::separable(
                    gaussian(g, amp, 0.5, 0.5, 0.3),
                    TimeProfile::Periodic { mean, amplitude: frac * mean, period: 2.0 },
                ).unwrap(),
            };
            let r = resupply_field(&spec, &g, t).unwrap();
            prop_assert!(r.min() >= 0.0);
            prop_assert!(r.max() <= spec.r_star() * (1.0 + 1e-15));
        }
    }

    #[test]
    fn resupply_field_kinds() {
        let g = GridSpec::unit_square(8).unwrap();
        assert!(resupply_field(&ResupplySpec::zero(), &g, 3.0).unwrap().values().iter().all(|&v| v == 0.0));
        let c = resupply_field(&ResupplySpec::constant(0.3).unwrap(), &g, 7.0).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.3));

        let bump = gaussian(g, 2.0, 0.3, 0.6, 0.15);
        let spec = ResupplySpec::separable(bump, TimeProfile::Exponential { rate: 1.0 }).unwrap();
        for t in [0.0, 0.5, 2.0] {
            let r = resupply_field(&spec, &g, t).unwrap();
            for j in 0..8 {
                for i in 0..8 {
                    let (x, y) = g.center(i, j);
                    let d2 = (x - 0.3f64).powi(2) + (y - 0.6f64).powi(2);
                    let expect = 2.0 * (-d2 / (2.0 * 0.15 * 0.15)).exp() * (-t).exp();
                    assert_relative_eq!(r.at(i, j), expect, max_relative = 1e-14);
                }
            }
        }
        assert!(ResupplySpec::constant(-0.1).is_err());
        assert!(ResupplySpec::separable(
            ScalarField::constant(g, 1.0),
            TimeProfile::Periodic { mean: 0.1, amplitude: 0.5, period: 1.0 }
        )
        .is_err());
    }

    #[test]
    fn constant_resupply_is_admissible() {
        let g = GridSpec::unit_square(10).unwrap();
        for spec in [ResupplySpec::zero(), ResupplySpec::constant(0.7).unwrap()] {
            let rep = validate_resupply(&spec, &g, 1.0, 5.0).unwrap();
            assert_eq!(rep.windowed_gradroot_sup, 0.0);
            assert!(rep.admissible);
            assert_eq!(rep.ladder_points, 51);
        }
    }

    #[test]
    fn gaussian_gradroot_matches_quadrature() {
        // |grad sqrt g|^2 = g |x - c|^2 / (4 sigma^4); on the plane it integrates to pi * A,
        // and the nearest edge sits 4.5 sigma away, truncating ~5e-4 of it.
        let (amp, sigma, cx, cy) = (1.5, 0.1, 0.5, 0.45);
        let g = GridSpec::unit_square(128).unwrap();
        let spec = ResupplySpec::separable(gaussian(g, amp, cx, cy, sigma), TimeProfile::Constant(1.0)).unwrap();
        let window = 0.7;
        let rep = validate_resupply(&spec, &g, window, 2.0).unwrap();

        let mut midpoint = 0.0;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let (x, y) = g.center(i, j);
                let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                midpoint += amp * (-d2 / (2.0 * sigma * sigma)).exp() * d2 / (4.0 * sigma.powi(4));
            }
        }
        midpoint *= g.cell_area();
        assert_relative_eq!(midpoint, PI * amp, max_relative = 1e-3);
        assert_relative_eq!(rep.windowed_gradroot_sup, window * midpoint, max_relative = 5e-3);
        assert!(rep.admissible);
    }

    #[test]
    fn initial_data_checks() {
        let g = GridSpec::unit_square(4).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let ok = InitialData { u0: one.clone(), v0: one.clone(), w0: one.clone() };
        let rep = validate_initial_data(&ok);
        assert!(rep.passed());
        assert_relative_eq!(rep.u0.integral, 1.0);

        let mut w0 = one.clone();
        w0.values_mut()[5] = 0.0;
        let rep = validate_initial_data(&InitialData { u0: one.clone(), v0: one.clone(), w0 });
        assert!(!rep.passed());
        assert!(rep.violations[0].to_string().contains("w0 not strictly positive"));

        let rep = validate_initial_data(&InitialData { u0: ScalarField::zeros(g), v0: one.clone(), w0: one.clone() });
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].to_string(), "u0 identically zero");

        let mut v0 = one.clone();
        v0.values_mut()[0] = -0.5;
        let rep = validate_initial_data(&InitialData { u0: ScalarField::zeros(g), v0, w0: ScalarField::zeros(g) });
        assert_eq!(rep.violations.len(), 3);
    }
}
