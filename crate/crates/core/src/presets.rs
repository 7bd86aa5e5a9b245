//! Initial-data presets and the standard scenarios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::grid::{GridError, GridSpec, ScalarField};
use crate::model::{gaussian, InitialData, ModelConfig, ResupplySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Preset {
    Uniform {
        u: f64,
        v: f64,
        w: f64,
    },
    /// Base levels plus a Gaussian bump in `u` and `v`.
    GaussianBump {
        u: f64,
        v: f64,
        w: f64,
        amplitude: f64,
        center: (f64, f64),
        sigma: f64,
    },
    /// Base levels times `1 + amplitude * P`, where `P` is a seeded
    /// combination of Neumann cosine modes with `|P| <= 1`.
    PerturbedUniform {
        u: f64,
        v: f64,
        w: f64,
        amplitude: f64,
        modes: usize,
        seed: u64,
    },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Uniform { .. } => "uniform",
            Preset::GaussianBump { .. } => "gaussian_bump",
            Preset::PerturbedUniform { .. } => "perturbed_uniform",
        }
    }

    pub fn build(&self, grid: GridSpec) -> InitialData {
        match *self {
            Preset::Uniform { u, v, w } => InitialData {
                u0: ScalarField::constant(grid, u),
                v0: ScalarField::constant(grid, v),
                w0: ScalarField::constant(grid, w),
            },
            Preset::GaussianBump { u, v, w, amplitude, center, sigma } => {
                let b = gaussian(grid, amplitude, center.0, center.1, sigma);
                InitialData { u0: b.map(|s| u + s), v0: b.map(|s| v + 0.5 * s), w0: ScalarField::constant(grid, w) }
            }
            Preset::PerturbedUniform { u, v, w, amplitude, modes, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut field = |base: f64| {
                    let p = cosine_mix(grid, modes, &mut rng);
                    p.map(|s| base * (1.0 + amplitude * s))
                };
                let u0 = field(u);
                let v0 = field(v);
                let w0 = field(w);
                InitialData { u0, v0, w0 }
            }
        }
    }
}

/// `sum_{1 <= k + l, k, l <= modes} c_kl cos(k pi x / lx) cos(l pi y / ly)`,
/// coefficients uniform in `[-1, 1]`, scaled so the sum of `|c_kl|` is 1.
fn cosine_mix(grid: GridSpec, modes: usize, rng: &mut ChaCha8Rng) -> ScalarField {
    let mut terms = Vec::new();
    for k in 0..=modes {
        for l in 0..=modes {
            if k + l > 0 {
                terms.push((k as f64, l as f64, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let norm: f64 = terms.iter().map(|t| f64::abs(t.2)).sum::<f64>().max(f64::MIN_POSITIVE);
    let (lx, ly) = (grid.lx(), grid.ly());
    ScalarField::from_fn(grid, |x, y| {
        terms.iter().map(|&(k, l, c)| c * (k * PI * x / lx).cos() * (l * PI * y / ly).cos()).sum::<f64>() / norm
    })
}

/// Grid, parameters, resupply and initial data of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: GridSpec,
    pub cfg: ModelConfig,
    pub resupply: ResupplySpec,
    pub preset: Preset,
}

impl Scenario {
    pub fn initial_data(&self) -> InitialData {
        self.preset.build(self.grid)
    }
}

pub const STANDARD_SEED: u64 = 42;
pub const STANDARD_R0: f64 = 0.3;

pub fn standard_preset() -> Preset {
    Preset::PerturbedUniform { u: 1.0, v: 0.5, w: 1.0, amplitude: 0.2, modes: 3, seed: STANDARD_SEED }
}

/// Super-logistic case: `beta = 3` on an `n x n` unit square.
pub fn standard_beta3(n: usize, t_final: f64) -> Result<Scenario, GridError> {
    Ok(Scenario {
        grid: GridSpec::unit_square(n)?,
        cfg: ModelConfig { t_final, ..ModelConfig::new(3.0, 0.0) },
        resupply: ResupplySpec::constant(STANDARD_R0).expect("nonnegative"),
        preset: standard_preset(),
    })
}

/// Logistic case `beta = 2` with regularization `epsilon`.
pub fn standard_beta2(n: usize, t_final: f64, epsilon: f64) -> Result<Scenario, GridError> {
    Ok(Scenario {
        grid: GridSpec::unit_square(n)?,
        cfg: ModelConfig { t_final, ..ModelConfig::new(2.0, epsilon) },
        resupply: ResupplySpec::constant(STANDARD_R0).expect("nonnegative"),
        preset: standard_preset(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{face_gradient, integrate};
    use crate::model::validate_initial_data;

    #[test]
    fn perturbed_uniform_is_seeded_and_bounded() {
        let g = GridSpec::unit_square(32).unwrap();
        let a = standard_preset().build(g);
        let b = standard_preset().build(g);
        assert_eq!(a.u0.values(), b.u0.values());
        assert!(validate_initial_data(&a).passed());
        assert!(a.u0.min() >= 0.8 - 1e-12 && a.u0.max() <= 1.2 + 1e-12);
        assert!(a.v0.min() >= 0.4 - 1e-12 && a.v0.max() <= 0.6 + 1e-12);
        assert_ne!(a.u0.values(), a.v0.values());
        // cosine modes average to zero on the cell grid
        assert!((integrate(&a.u0) - 1.0).abs() < 1e-12);

        let other = Preset::PerturbedUniform { u: 1.0, v: 0.5, w: 1.0, amplitude: 0.2, modes: 3, seed: 7 }.build(g);
        assert_ne!(a.u0.values(), other.u0.values());
    }

    #[test]
    fn perturbation_is_resolution_independent() {
        let coarse = standard_preset().build(GridSpec::unit_square(16).unwrap());
        let fine = standard_preset().build(GridSpec::unit_square(32).unwrap());
        // the coarse cell centre (i+1/2)/16 is a fine face; compare against the fine average
        for (i, j) in [(0, 0), (5, 9), (15, 15)] {
            let c = coarse.u0.at(i, j);
            let f = 0.25
                * (fine.u0.at(2 * i, 2 * j)
                    + fine.u0.at(2 * i + 1, 2 * j)
                    + fine.u0.at(2 * i, 2 * j + 1)
                    + fine.u0.at(2 * i + 1, 2 * j + 1));
            assert!((c - f).abs() < 5e-3, "{c} vs {f}");
        }
    }

    #[test]
    fn uniform_and_bump() {
        let g = GridSpec::unit_square(8).unwrap();
        let d = Preset::Uniform { u: 0.8, v: 0.5, w: 2.0 }.build(g);
        assert_eq!(d.w0.min(), 2.0);
        assert_eq!(face_gradient(&d.u0).max_abs(), 0.0);
        let b = Preset::GaussianBump { u: 0.1, v: 0.1, w: 1.0, amplitude: 1.0, center: (0.5625, 0.5625), sigma: 0.1 }
            .build(g);
        assert!((b.u0.max() - 1.1).abs() < 1e-12 && b.u0.min() >= 0.1);
        assert_eq!(Preset::Uniform { u: 1.0, v: 1.0, w: 1.0 }.name(), "uniform");
    }
}
