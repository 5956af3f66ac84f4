//! Experiment configuration in TOML and initial-condition families.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::State;
use crate::integrator::Schedule;
use crate::regimes::Params;
use crate::spectral::{Field, Grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `rho = 1`, `u = 0`.
    Equilibrium,
    /// `rho = 1 + a cos(2 pi k x)`, `u = mean_velocity + b sin(2 pi k x)`.
    SingleMode {
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: u32,
        #[serde(default)]
        velocity_amplitude: f64,
        #[serde(default)]
        mean_velocity: f64,
    },
    /// Random Fourier series with coefficients decaying like `|k|^-decay` on `1 <= |k| <= 64`,
    /// scaled so that `|rho - 1| <= amplitude` and `|u| <= velocity_amplitude`.
    RandomSmooth {
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_random_amplitude")]
        amplitude: f64,
        #[serde(default)]
        velocity_amplitude: f64,
    },
    /// Poisson-kernel data with Fourier coefficients `amplitude * ratio^|k|`:
    /// `rho = 1 + a (P_q(x) - 1)`, `u = a * 2 q sin(2 pi x) / (1 - 2 q cos(2 pi x) + q^2)`.
    Analytic {
        amplitude: f64,
        #[serde(default = "default_ratio")]
        ratio: f64,
    },
}

/// Fixed so a realization does not depend on the resolution it is sampled at.
const RANDOM_SMOOTH_MODES: usize = 64;

fn one() -> u32 {
    1
}

fn default_decay() -> f64 {
    4.0
}

fn default_random_amplitude() -> f64 {
    0.1
}

fn default_ratio() -> f64 {
    0.5
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self::SingleMode {
            amplitude: 0.1,
            wavenumber: 1,
            velocity_amplitude: 0.0,
            mean_velocity: 0.0,
        }
    }
}

impl InitialCondition {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        match *self {
            Self::Equilibrium => Ok(()),
            Self::SingleMode {
                amplitude,
                wavenumber,
                velocity_amplitude,
                mean_velocity,
            } => {
                if !(amplitude.abs() < 1.0) {
                    return bad(format!("single_mode amplitude must satisfy |a| < 1, got {amplitude}"));
                }
                if wavenumber == 0 {
                    return bad("single_mode wavenumber must be >= 1".into());
                }
                if !velocity_amplitude.is_finite() || !mean_velocity.is_finite() {
                    return bad("single_mode velocities must be finite".into());
                }
                Ok(())
            }
            Self::RandomSmooth {
                decay,
                amplitude,
                velocity_amplitude,
                ..
            } => {
                if !(decay >= 4.0) {
                    return bad(format!("random_smooth decay must be >= 4, got {decay}"));
                }
                if !(0.0..1.0).contains(&amplitude) {
                    return bad(format!("random_smooth amplitude must lie in [0, 1), got {amplitude}"));
                }
                if !velocity_amplitude.is_finite() {
                    return bad("random_smooth velocity_amplitude must be finite".into());
                }
                Ok(())
            }
            Self::Analytic { amplitude, ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return bad(format!("analytic ratio must lie in (0, 1), got {ratio}"));
                }
                if !(amplitude >= 0.0 && 2.0 * amplitude * ratio / (1.0 + ratio) < 1.0) {
                    return bad(format!(
                        "analytic amplitude {amplitude} does not keep the density positive"
                    ));
                }
                Ok(())
            }
        }
    }

    /// Primitive fields on `grid`; `path` selects the random realization of `random_smooth`.
    pub fn primitive(&self, grid: &Grid, path: u64) -> (Field, Field) {
        match *self {
            Self::Equilibrium => (Field::constant(grid, 1.0), Field::zeros(grid)),
            Self::SingleMode {
                amplitude,
                wavenumber,
                velocity_amplitude,
                mean_velocity,
            } => {
                let k = 2.0 * PI * wavenumber as f64;
                (
                    Field::from_fn(grid, |x| 1.0 + amplitude * (k * x).cos()),
                    Field::from_fn(grid, |x| mean_velocity + velocity_amplitude * (k * x).sin()),
                )
            }
            Self::RandomSmooth {
                decay,
                seed,
                amplitude,
                velocity_amplitude,
            } => {
                let kmax = RANDOM_SMOOTH_MODES;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(path);
                let mut series = |scale: f64| {
                    let coeffs: Vec<(f64, f64)> = (1..=kmax)
                        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                        .collect();
                    let bound: f64 = (1..=kmax).map(|k| 2f64.sqrt() * (k as f64).powf(-decay)).sum();
                    Field::from_fn(grid, |x| {
                        let s: f64 = coeffs
                            .iter()
                            .enumerate()
                            .map(|(i, (a, b))| {
                                let k = (i + 1) as f64;
                                k.powf(-decay) * (a * (2.0 * PI * k * x).cos() + b * (2.0 * PI * k * x).sin())
                            })
                            .sum();
                        scale * s / bound
                    })
                };
                let rho = series(amplitude).map(|v| 1.0 + v);
                let u = series(velocity_amplitude);
                (rho, u)
            }
            Self::Analytic { amplitude, ratio: q } => {
                let denom = |x: f64| 1.0 - 2.0 * q * (2.0 * PI * x).cos() + q * q;
                (
                    Field::from_fn(grid, |x| 1.0 + amplitude * ((1.0 - q * q) / denom(x) - 1.0)),
                    Field::from_fn(grid, |x| amplitude * 2.0 * q * (2.0 * PI * x).sin() / denom(x)),
                )
            }
        }
    }

    /// Initial state for `params`, projected onto its Galerkin space.
    pub fn build(&self, params: Arc<Params>, path: u64) -> Result<State> {
        self.validate()?;
        params.validate()?;
        let grid = Grid::for_galerkin_order(params.galerkin_order)?;
        // evaluate on a finer grid so the projection is not polluted by aliasing
        let fine = Grid::new(4 * grid.n_points())?;
        let (rho, u) = self.primitive(&fine, path);
        let m = params.galerkin_order;
        State::from_primitive(&rho.project(m).resample(&grid), &u.project(m).resample(&grid), params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: Params,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_moments")]
    pub moments: Vec<u32>,
}

fn default_paths() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_moments() -> Vec<u32> {
    vec![1, 2]
}

impl ExperimentConfig {
    pub fn new(params: Params, schedule: Schedule, initial: InitialCondition) -> Self {
        Self {
            params,
            schedule,
            initial,
            n_paths: default_paths(),
            master_seed: 0,
            output_dir: default_output_dir(),
            moments: default_moments(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.schedule.validate()?;
        self.initial.validate()?;
        if self.n_paths == 0 {
            return Err(Error::InvalidParams("n_paths must be >= 1".into()));
        }
        if self.moments.contains(&0) {
            return Err(Error::InvalidParams("moments must be positive integers".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let config_err = |message: String| Error::Config {
            path: origin.display().to_string(),
            message,
        };
        let de = toml::Deserializer::parse(text).map_err(|e| config_err(e.to_string()))?;
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            config_err(format!("at `{key}`: {}", e.inner()))
        })?;
        config.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml_str(&text, path)
}
