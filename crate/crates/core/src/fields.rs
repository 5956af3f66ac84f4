//! Constitutive laws and changes of variables between the density `rho` and
//! the transformed variable `r`.
//!
//! With `k(rho) = rho^beta`:
//!
//! ```text
//! r = 2/(beta+1) rho^((beta+1)/2)     (beta != -1)
//! r = log rho                          (beta == -1)
//! A = sqrt(k/rho) d_x rho = d_x r,    mu'_k = sqrt(rho k) = (beta+1)/2 r
//! ```

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::regimes::Params;
use crate::spectral::{Field, Grid};

/// `beta` closer than this to `-1` selects the logarithmic branch.
const LOG_BRANCH_TOL: f64 = 1e-12;

fn is_log_branch(beta: f64) -> bool {
    (beta + 1.0).abs() < LOG_BRANCH_TOL
}

fn check_density(rho: &Field, floor: f64) -> Result<()> {
    let min = rho.min();
    if !(min >= floor) {
        return Err(Error::NonPositiveDensity { min, floor });
    }
    Ok(())
}

fn check_positive(rho: &Field) -> Result<()> {
    check_density(rho, f64::MIN_POSITIVE)
}

pub fn rho_to_r(rho: &Field, beta: f64) -> Result<Field> {
    check_positive(rho)?;
    if is_log_branch(beta) {
        return Ok(rho.map(f64::ln));
    }
    let e = (beta + 1.0) / 2.0;
    Ok(rho.map(|p| p.powf(e) / e))
}

pub fn r_to_rho(r: &Field, beta: f64) -> Result<Field> {
    if is_log_branch(beta) {
        return Ok(r.map(f64::exp));
    }
    let e = (beta + 1.0) / 2.0;
    // e * r = rho^e must be positive
    if let Some(&bad) = r.physical().iter().find(|&&v| !(e * v > 0.0)) {
        return Err(Error::OutOfRange { beta, value: bad });
    }
    Ok(r.map(|v| (e * v).powf(1.0 / e)))
}

/// `A(rho) = rho^((beta-1)/2) d_x rho`.
pub fn capillary_gradient_a(rho: &Field, beta: f64) -> Result<Field> {
    check_positive(rho)?;
    let e = (beta - 1.0) / 2.0;
    rho.derivative(1).zip_with(rho, |d, p| p.powf(e) * d)
}

/// `mu'_k(rho) = sqrt(rho k(rho)) = rho^((beta+1)/2)`.
pub fn mu_k_prime(rho: &Field, beta: f64) -> Result<Field> {
    check_positive(rho)?;
    let e = (beta + 1.0) / 2.0;
    Ok(rho.map(|p| p.powf(e)))
}

/// `Q = mu(rho) d_x rho / rho^2 = rho^(alpha-2) d_x rho`, the drift part of the effective velocity.
pub fn effective_velocity_q(rho: &Field, alpha: f64) -> Result<Field> {
    check_positive(rho)?;
    rho.derivative(1).zip_with(rho, |d, p| p.powf(alpha - 2.0) * d)
}

/// `V = u + mu(rho) d_x rho / rho^2`.
pub fn effective_velocity(rho: &Field, u: &Field, alpha: f64) -> Result<Field> {
    let q = effective_velocity_q(rho, alpha)?;
    u.axpby(1.0, &q, 1.0)
}

/// `d_x K = rho d_x( d_x(k d_x rho) - k'/2 |d_x rho|^2 )` with `k = rho^beta`,
/// products taken with 3/2 padding.
pub fn korteweg_divergence(rho: &Field, beta: f64) -> Result<Field> {
    check_positive(rho)?;
    let rx = rho.derivative(1);
    let k = rho.map(|p| p.powf(beta));
    let kp = rho.map(|p| beta * p.powf(beta - 1.0));
    let flux = k.dealias_product(&rx)?;
    let grad_sq = rx.dealias_product(&rx)?;
    let inner = flux.derivative(1).axpby(1.0, &kp.dealias_product(&grad_sq)?, -0.5)?;
    rho.dealias_product(&inner.derivative(1))
}

/// Pressure potential `F(rho)`: `rho^gamma / (gamma-1)` for `gamma > 1`, `rho log rho` for `gamma = 1`.
pub fn pressure_f(rho: &Field, gamma: f64) -> Result<Field> {
    check_positive(rho)?;
    Ok(rho.map(|p| pressure_potential(p, gamma)))
}

pub fn pressure_potential(rho: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        rho * rho.ln()
    } else {
        rho.powf(gamma) / (gamma - 1.0)
    }
}

/// Augmented unknowns `(r, u)` at one instant.
///
/// The density `rho = r_to_rho(r)` is computed on first use and cached.
#[derive(Debug, Clone)]
pub struct State {
    pub r: Field,
    pub u: Field,
    pub time: f64,
    params: Arc<Params>,
    rho: OnceLock<Field>,
}

impl State {
    pub fn new(r: Field, u: Field, time: f64, params: Arc<Params>) -> Result<Self> {
        if r.grid() != u.grid() {
            return Err(Error::GridMismatch {
                left: r.len(),
                right: u.len(),
            });
        }
        Ok(Self {
            r,
            u,
            time,
            params,
            rho: OnceLock::new(),
        })
    }

    /// State with `r = Pi_m r(rho)` and `u = Pi_m u` on the grid of `rho`.
    pub fn from_primitive(rho: &Field, u: &Field, params: Arc<Params>) -> Result<Self> {
        let m = params.galerkin_order;
        let r = rho_to_r(rho, params.beta)?.project(m);
        let u = u.project(m);
        Self::new(r, u, 0.0, params)
    }

    /// `rho = 1`, `u = 0`.
    pub fn equilibrium(grid: &Grid, params: Arc<Params>) -> Result<Self> {
        Self::from_primitive(&Field::constant(grid, 1.0), &Field::zeros(grid), params)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_arc(&self) -> &Arc<Params> {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        self.r.grid()
    }

    pub fn with_fields(&self, r: Field, u: Field, time: f64) -> Self {
        Self {
            r,
            u,
            time,
            params: self.params.clone(),
            rho: OnceLock::new(),
        }
    }

    pub fn with_params(&self, params: Arc<Params>) -> Self {
        Self {
            params,
            rho: OnceLock::new(),
            ..self.clone()
        }
    }

    /// Density, failing below the configured floor.
    pub fn rho(&self) -> Result<&Field> {
        if self.rho.get().is_none() {
            let rho = r_to_rho(&self.r, self.params.beta)?;
            let _ = self.rho.set(rho);
        }
        let rho = self.rho.get().expect("density cached above");
        check_density(rho, self.params.density_floor)?;
        Ok(rho)
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.u.is_finite()
    }
}
