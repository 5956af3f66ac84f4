//! Pseudospectral Galerkin simulator for the one-dimensional stochastic
//! Navier-Stokes-Korteweg system on the unit torus, with diagnostics for the
//! energy and BD-entropy balances and tools for ensemble studies.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod fields;
pub mod integrator;
pub mod noise;
pub mod output;
pub mod regimes;
pub mod spectral;
pub mod studies;

pub use config::{load_config, ExperimentConfig, InitialCondition};
pub use error::{Error, Result};
pub use fields::State;
pub use integrator::{Method, Schedule};
pub use noise::{NoiseFamily, NoisePath, NoiseSpec};
pub use regimes::Params;
pub use spectral::{Field, Grid};
