//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [domain]
//! nx = 64
//! [model]
//! beta = 3
//! ```
//!
//! Every error carries the file name and the line it refers to.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use taxis_core::grid::GridSpec;
use taxis_core::model::{
    gaussian, validate_initial_data, InitialViolation, ModelConfig, ModelError, ResupplySpec, TimeProfile,
};
use taxis_core::presets::Preset;
use taxis_core::InitialData;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.file, l, self.message),
            None => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum ResupplyConfig {
    Zero,
    Constant {
        r0: f64,
    },
    /// `amplitude * exp(-|x-c|^2 / (2 sigma^2)) * s(t)`
    Gaussian {
        amplitude: f64,
        center: (f64, f64),
        sigma: f64,
        profile: TimeProfile,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Keep every n-th step; 0 keeps only the initial and final states.
    pub snapshot_stride: usize,
    pub formats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub c: f64,
    /// Nutrient bound; `None` means `sup w0 + r_*`.
    pub m: Option<f64>,
    pub delta: f64,
    pub lambda: f64,
    pub mass_tol: f64,
    pub w_bound_tol: f64,
    pub solver_tol: f64,
    pub audit_tol: f64,
    pub gronwall_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub model: ModelConfig,
    pub preset: Preset,
    pub resupply: ResupplyConfig,
    pub output: OutputConfig,
    pub audit: AuditConfig,
}

pub const FORMATS: [&str; 2] = ["csv", "binary"];

impl RunConfig {
    pub fn initial_data(&self) -> InitialData {
        self.preset.build(self.grid)
    }

    pub fn resupply_spec(&self) -> Result<ResupplySpec, ModelError> {
        match &self.resupply {
            ResupplyConfig::Zero => Ok(ResupplySpec::zero()),
            ResupplyConfig::Constant { r0 } => ResupplySpec::constant(*r0),
            ResupplyConfig::Gaussian { amplitude, center, sigma, profile } => {
                ResupplySpec::separable(gaussian(self.grid, *amplitude, center.0, center.1, *sigma), *profile)
            }
        }
    }

    /// Canonical text form; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let g = &self.grid;
        let m = &self.model;
        s += &format!("[domain]\nnx = {}\nny = {}\nlx = {:?}\nly = {:?}\n\n", g.nx(), g.ny(), g.lx(), g.ly());
        s += &format!("[model]\nbeta = {:?}\nepsilon = {:?}\n\n", m.beta, m.epsilon);
        s += "[initial]\n";
        match &self.preset {
            Preset::Uniform { u, v, w } => {
                s += &format!("preset = uniform\nu = {u:?}\nv = {v:?}\nw = {w:?}\n");
            }
            Preset::GaussianBump { u, v, w, amplitude, center, sigma } => {
                s += &format!(
                    "preset = gaussian_bump\nu = {u:?}\nv = {v:?}\nw = {w:?}\namplitude = {amplitude:?}\n\
                     center_x = {:?}\ncenter_y = {:?}\nsigma = {sigma:?}\n",
                    center.0, center.1
                );
            }
            Preset::PerturbedUniform { u, v, w, amplitude, modes, seed } => {
                s += &format!(
                    "preset = perturbed_uniform\nu = {u:?}\nv = {v:?}\nw = {w:?}\namplitude = {amplitude:?}\n\
                     modes = {modes}\nseed = {seed}\n"
                );
            }
        }
        s += "\n[resupply]\n";
        match &self.resupply {
            ResupplyConfig::Zero => s += "kind = zero\n",
            ResupplyConfig::Constant { r0 } => s += &format!("kind = constant\nr0 = {r0:?}\n"),
            ResupplyConfig::Gaussian { amplitude, center, sigma, profile } => {
                s += &format!(
                    "kind = gaussian\namplitude = {amplitude:?}\ncenter_x = {:?}\ncenter_y = {:?}\nsigma = {sigma:?}\n",
                    center.0, center.1
                );
                match profile {
                    TimeProfile::Constant(c) => s += &format!("profile = constant\nlevel = {c:?}\n"),
                    TimeProfile::Exponential { rate } => s += &format!("profile = exponential\nrate = {rate:?}\n"),
                    TimeProfile::Periodic { mean, amplitude, period } => {
                        s += &format!(
                            "profile = periodic\nmean = {mean:?}\nswing = {amplitude:?}\nperiod = {period:?}\n"
                        )
                    }
                }
            }
        }
        s += &format!(
            "\n[time]\nt_final = {:?}\ndt_init = {:?}\ncfl_advect = {:?}\ncfl_react = {:?}\n",
            m.t_final, m.dt_init, m.cfl_advect, m.cfl_react
        );
        let o = &self.output;
        s += &format!(
            "\n[output]\ndirectory = {}\nsnapshot_stride = {}\nformats = {}\n",
            o.directory.display(),
            o.snapshot_stride,
            o.formats.join(", ")
        );
        let a = &self.audit;
        s += &format!("\n[audit]\nC = {:?}\n", a.c);
        if let Some(mv) = a.m {
            s += &format!("M = {mv:?}\n");
        }
        s += &format!(
            "delta = {:?}\nlambda = {:?}\nmass_tol = {:?}\nw_bound_tol = {:?}\nsolver_tol = {:?}\naudit_tol = {:?}\n\
             gronwall_slack = {:?}\n",
            a.delta, a.lambda, a.mass_tol, a.w_bound_tol, a.solver_tol, a.audit_tol, a.gronwall_slack
        );
        s
    }
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Raw sections with line numbers.
struct Raw {
    file: String,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    section_lines: BTreeMap<String, usize>,
}

const SECTIONS: [&str; 7] = ["domain", "model", "initial", "resupply", "time", "output", "audit"];

impl Raw {
    fn parse(text: &str, file: &str) -> Result<Self, ConfigError> {
        let err = |line: usize, message: String| ConfigError { file: file.to_string(), line: Some(line), message };
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut section_lines = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line_no, format!("malformed section header `{line}`")))?
                    .trim()
                    .to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(err(
                        line_no,
                        format!("unknown section [{name}]; expected one of {}", SECTIONS.join(", ")),
                    ));
                }
                if section_lines.contains_key(&name) {
                    return Err(err(line_no, format!("section [{name}] appears twice")));
                }
                section_lines.insert(name.clone(), line_no);
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| err(line_no, format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(err(line_no, "empty key".to_string()));
            }
            let sec = current.as_ref().ok_or_else(|| err(line_no, format!("`{key}` appears before any section")))?;
            let map = sections.get_mut(sec).expect("section registered");
            if let Some(prev) = map.get(key) {
                return Err(err(line_no, format!("duplicate key `{key}` (first set on line {})", prev.line)));
            }
            map.insert(key.to_string(), Entry { value: value.to_string(), line: line_no, used: false });
        }
        Ok(Self { file: file.to_string(), sections, section_lines })
    }

    fn err(&self, line: Option<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError { file: self.file.clone(), line, message: message.into() }
    }

    fn key_line(&self, section: &str, key: &str) -> Option<usize> {
        self.sections.get(section).and_then(|m| m.get(key)).map(|e| e.line)
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.sections
            .get(section)
            .and_then(|m| m.get(key))
            .map(|e| e.line)
            .or_else(|| self.section_lines.get(section).copied())
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self.sections.get_mut(section)?.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn get<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>, ConfigError> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(Some(line), format!("cannot parse `{v}` for [{section}] {key}"))),
        }
    }

    fn real(&mut self, section: &str, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        match self.get::<f64>(section, key)? {
            Some(v) if !v.is_finite() => {
                Err(self.err(self.line_of(section, key), format!("[{section}] {key} must be finite")))
            }
            Some(v) => Ok(v),
            None => default.ok_or_else(|| {
                self.err(self.section_lines.get(section).copied(), format!("missing required key [{section}] {key}"))
            }),
        }
    }

    fn count(&mut self, section: &str, key: &str, default: Option<usize>) -> Result<usize, ConfigError> {
        match self.get::<usize>(section, key)? {
            Some(v) => Ok(v),
            None => default.ok_or_else(|| {
                self.err(self.section_lines.get(section).copied(), format!("missing required key [{section}] {key}"))
            }),
        }
    }

    fn word(
        &mut self,
        section: &str,
        key: &str,
        default: Option<&str>,
    ) -> Result<(String, Option<usize>), ConfigError> {
        match self.take(section, key) {
            Some((v, line)) => Ok((v, Some(line))),
            None => default.map(|d| (d.to_string(), None)).ok_or_else(|| {
                self.err(self.section_lines.get(section).copied(), format!("missing required key [{section}] {key}"))
            }),
        }
    }

    fn reject_unused(&self) -> Result<(), ConfigError> {
        for (sec, map) in &self.sections {
            for (key, e) in map {
                if !e.used {
                    return Err(self.err(Some(e.line), format!("unknown or inapplicable key `{key}` in [{sec}]")));
                }
            }
        }
        Ok(())
    }
}

/// Line to blame for a model validation failure.
fn model_error_line(raw: &Raw, e: &ModelError) -> Option<usize> {
    match e {
        ModelError::BetaOutOfRange(_) => raw.line_of("model", "beta"),
        ModelError::MissingRegularization(_) | ModelError::SpuriousRegularization { .. } => {
            raw.key_line("model", "epsilon").or_else(|| raw.line_of("model", "beta"))
        }
        ModelError::BadTime(msg) if msg.starts_with("dt_init") => raw.line_of("time", "dt_init"),
        ModelError::BadTime(_) => raw.line_of("time", "t_final"),
        ModelError::BadResupply(_) | ModelError::NegativeArgument(_) => raw.section_lines.get("resupply").copied(),
        _ => raw.section_lines.get("time").copied(),
    }
}

pub fn parse_config(text: &str, file: &str) -> Result<RunConfig, ConfigError> {
    let mut raw = Raw::parse(text, file)?;

    let nx = raw.count("domain", "nx", None)?;
    let ny = raw.count("domain", "ny", Some(nx))?;
    let lx = raw.real("domain", "lx", Some(1.0))?;
    let ly = raw.real("domain", "ly", Some(lx * ny as f64 / nx.max(1) as f64))?;
    let grid = GridSpec::new(nx, ny, lx, ly).map_err(|e| raw.err(raw.line_of("domain", "nx"), e.to_string()))?;

    let beta = raw.real("model", "beta", None)?;
    let epsilon = raw.real("model", "epsilon", Some(0.0))?;

    let (preset_name, preset_line) = raw.word("initial", "preset", None)?;
    let u = raw.real("initial", "u", Some(1.0))?;
    let v = raw.real("initial", "v", Some(0.5))?;
    let w = raw.real("initial", "w", Some(1.0))?;
    let preset = match preset_name.as_str() {
        "uniform" => Preset::Uniform { u, v, w },
        "gaussian_bump" => Preset::GaussianBump {
            u,
            v,
            w,
            amplitude: raw.real("initial", "amplitude", Some(1.0))?,
            center: (
                raw.real("initial", "center_x", Some(0.5 * lx))?,
                raw.real("initial", "center_y", Some(0.5 * ly))?,
            ),
            sigma: raw.real("initial", "sigma", Some(0.1 * lx))?,
        },
        "perturbed_uniform" => {
            let seed_line = raw.key_line("initial", "seed");
            let seed = raw.get::<u64>("initial", "seed")?.ok_or_else(|| {
                raw.err(seed_line.or(preset_line), "perturbed_uniform draws random modes and needs an explicit `seed`")
            })?;
            let amplitude = raw.real("initial", "amplitude", Some(0.1))?;
            if !(0.0..1.0).contains(&amplitude) {
                return Err(raw.err(raw.line_of("initial", "amplitude"), "perturbation amplitude must lie in [0, 1)"));
            }
            Preset::PerturbedUniform { u, v, w, amplitude, modes: raw.count("initial", "modes", Some(3))?, seed }
        }
        other => {
            return Err(raw.err(
                preset_line,
                format!("unknown preset `{other}`; expected uniform, gaussian_bump or perturbed_uniform"),
            ))
        }
    };

    let (kind, kind_line) = raw.word("resupply", "kind", Some("zero"))?;
    let resupply = match kind.as_str() {
        "zero" => ResupplyConfig::Zero,
        "constant" => ResupplyConfig::Constant { r0: raw.real("resupply", "r0", None)? },
        "gaussian" => {
            let amplitude = raw.real("resupply", "amplitude", None)?;
            let center =
                (raw.real("resupply", "center_x", Some(0.5 * lx))?, raw.real("resupply", "center_y", Some(0.5 * ly))?);
            let sigma = raw.real("resupply", "sigma", Some(0.1 * lx))?;
            let (profile_name, profile_line) = raw.word("resupply", "profile", Some("constant"))?;
            let profile = match profile_name.as_str() {
                "constant" => TimeProfile::Constant(raw.real("resupply", "level", Some(1.0))?),
                "exponential" => TimeProfile::Exponential { rate: raw.real("resupply", "rate", None)? },
                "periodic" => TimeProfile::Periodic {
                    mean: raw.real("resupply", "mean", None)?,
                    amplitude: raw.real("resupply", "swing", None)?,
                    period: raw.real("resupply", "period", None)?,
                },
                other => {
                    return Err(raw.err(
                        profile_line,
                        format!("unknown time profile `{other}`; expected constant, exponential or periodic"),
                    ))
                }
            };
            ResupplyConfig::Gaussian { amplitude, center, sigma, profile }
        }
        other => {
            return Err(
                raw.err(kind_line, format!("unknown resupply kind `{other}`; expected zero, constant or gaussian"))
            )
        }
    };

    let defaults = ModelConfig::new(beta, epsilon);
    let mut model = ModelConfig {
        t_final: raw.real("time", "t_final", None)?,
        dt_init: raw.real("time", "dt_init", Some(defaults.dt_init))?,
        cfl_advect: raw.real("time", "cfl_advect", Some(defaults.cfl_advect))?,
        cfl_react: raw.real("time", "cfl_react", Some(defaults.cfl_react))?,
        ..defaults
    };

    let (dir, _) = raw.word("output", "directory", Some("out"))?;
    let snapshot_stride = raw.count("output", "snapshot_stride", Some(0))?;
    let (formats_raw, formats_line) = raw.word("output", "formats", Some("csv, binary"))?;
    let formats: Vec<String> = formats_raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if let Some(bad) = formats.iter().find(|f| !FORMATS.contains(&f.as_str())) {
        return Err(raw.err(formats_line, format!("unknown output format `{bad}`; expected {}", FORMATS.join(", "))));
    }

    let audit = AuditConfig {
        c: raw.real("audit", "C", Some(1.0))?,
        m: raw.get::<f64>("audit", "M")?,
        delta: raw.real("audit", "delta", Some(0.5))?,
        lambda: raw.real("audit", "lambda", Some(defaults.lambda))?,
        mass_tol: raw.real("audit", "mass_tol", Some(taxis_core::diagnostics::MASS_TOL))?,
        w_bound_tol: raw.real("audit", "w_bound_tol", Some(taxis_core::diagnostics::W_BOUND_TOL))?,
        solver_tol: raw.real("audit", "solver_tol", Some(defaults.solver_tol))?,
        audit_tol: raw.real("audit", "audit_tol", Some(0.0))?,
        gronwall_slack: raw.real("audit", "gronwall_slack", Some(0.0))?,
    };
    for (key, val) in [("delta", audit.delta), ("lambda", audit.lambda), ("solver_tol", audit.solver_tol)] {
        if !(val > 0.0) {
            return Err(raw.err(raw.line_of("audit", key), format!("[audit] {key} must be positive")));
        }
    }
    model.lambda = audit.lambda;
    model.solver_tol = audit.solver_tol;
    raw.reject_unused()?;

    model.validate().map_err(|e| raw.err(model_error_line(&raw, &e), e.to_string()))?;
    let cfg = RunConfig {
        grid,
        model,
        preset,
        resupply,
        output: OutputConfig { directory: PathBuf::from(dir), snapshot_stride, formats },
        audit,
    };
    cfg.resupply_spec().map_err(|e| raw.err(raw.section_lines.get("resupply").copied(), e.to_string()))?;

    let report = validate_initial_data(&cfg.initial_data());
    if let Some(v) = report.violations.first() {
        let field = match v {
            InitialViolation::Negative { field, .. } | InitialViolation::NotStrictlyPositive { field, .. } => field,
            InitialViolation::IdenticallyZero(field) | InitialViolation::NonFinite(field) => field,
            InitialViolation::GridMismatch => "",
        };
        let key = field.strip_suffix('0').unwrap_or("preset");
        return Err(raw.err(raw.line_of("initial", key).or(preset_line), v.to_string()));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        file: file.clone(),
        line: None,
        message: format!("cannot read: {e}"),
    })?;
    parse_config(&text, &file)
}
