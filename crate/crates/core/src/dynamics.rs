//! Right-hand sides of the truncated, Galerkin-projected augmented system
//!
//! ```text
//! dr = -theta_R(y) [u r_x + mu'_k(rho) u_x] dt
//! du =  theta_R(y) [-u u_x - p(rho)_x / rho + (mu(rho) u_x)_x / rho
//!                   + (mu'_k(rho) r_xx)_x + r_x r_xx] dt + theta_R(y) F(rho, u) dW
//! ```
//!
//! with `y = |r|_{W^{2,inf}} + |u|_{W^{2,inf}}`. Every product is formed on the
//! collocation grid (4m points) and projected onto `|k| <= m` once at the end.

use crate::error::Result;
use crate::fields::State;
use crate::noise::{apply_noise, WienerIncrement};
use crate::spectral::Field;

/// `|r|_{W^{2,inf}} + |u|_{W^{2,inf}}` on the grid.
pub fn cutoff_argument(state: &State) -> f64 {
    state.r.norm_w2inf() + state.u.norm_w2inf()
}

fn smoothstep(t: f64) -> f64 {
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// `1` on `[0, R]`, `0` on `[R+1, inf)`, quintic smoothstep in between (C^2, non-increasing).
pub fn cutoff_theta(y: f64, radius: f64) -> f64 {
    if y <= radius {
        1.0
    } else if y >= radius + 1.0 {
        0.0
    } else {
        1.0 - smoothstep(y - radius)
    }
}

/// Untruncated, unprojected drifts plus the derived fields reused by the integrator.
#[derive(Debug, Clone)]
pub struct RawTendency {
    pub dr: Field,
    pub du: Field,
    pub rho: Field,
    pub y: f64,
}

/// Evaluates the untruncated drifts on the collocation grid.
///
/// Derivatives of `rho` are expressed through `r`:
/// `rho_x = rho^((1-beta)/2) r_x` and `(mu'_k)_x = (beta+1)/2 r_x`,
/// so only derivatives of band-limited fields are ever taken.
pub fn raw_tendency(state: &State) -> Result<RawTendency> {
    let p = state.params();
    let (alpha, beta, gamma) = (p.alpha, p.beta, p.gamma);
    let rho = state.rho()?.clone();

    let r1 = state.r.derivative(1);
    let r2 = state.r.derivative(2);
    let r3 = state.r.derivative(3);
    let u1 = state.u.derivative(1);
    let u2 = state.u.derivative(2);

    // same summation order as cutoff_argument
    let y = (state.r.norm_linf() + r1.norm_linf() + r2.norm_linf())
        + (state.u.norm_linf() + u1.norm_linf() + u2.norm_linf());

    let n = rho.len();
    let (rho_v, u) = (rho.physical(), state.u.physical());
    let (r1, r2, r3, u1, u2) = (
        r1.physical(),
        r2.physical(),
        r3.physical(),
        u1.physical(),
        u2.physical(),
    );

    let e_mk = (beta + 1.0) / 2.0;
    let dmk = (beta + 1.0) / 2.0;
    let mut dr = Vec::with_capacity(n);
    let mut du = Vec::with_capacity(n);
    for j in 0..n {
        let q = rho_v[j];
        let mk = q.powf(e_mk);
        dr.push(-(u[j] * r1[j] + mk * u1[j]));

        let advect = u[j] * u1[j];
        // p_x / rho = gamma rho^(gamma-2) rho_x
        let pressure = gamma * q.powf(gamma - (3.0 + beta) / 2.0) * r1[j];
        // (mu u_x)_x / rho = rho^(alpha-1) u_xx + alpha rho^(alpha-2) rho_x u_x
        let viscous = q.powf(alpha - 1.0) * u2[j] + alpha * q.powf(alpha - (3.0 + beta) / 2.0) * r1[j] * u1[j];
        // (mu'_k r_xx)_x + r_x r_xx
        let capillary = mk * r3[j] + (dmk + 1.0) * r1[j] * r2[j];
        du.push(-advect - pressure + viscous + capillary);
    }
    let grid = state.grid();
    Ok(RawTendency {
        dr: Field::from_physical(grid, dr),
        du: Field::from_physical(grid, du),
        rho,
        y,
    })
}

/// `-theta_R (u r_x + mu'_k u_x)`, projected onto `|k| <= m`.
pub fn rhs_r(state: &State) -> Result<Field> {
    let raw = raw_tendency(state)?;
    let theta = cutoff_theta(raw.y, state.params().trunc_radius);
    Ok((&raw.dr * theta).project(state.params().galerkin_order))
}

/// Truncated velocity drift, projected onto `|k| <= m`.
pub fn drift_u(state: &State) -> Result<Field> {
    let raw = raw_tendency(state)?;
    let theta = cutoff_theta(raw.y, state.params().trunc_radius);
    Ok((&raw.du * theta).project(state.params().galerkin_order))
}

#[derive(Debug, Clone)]
pub struct Tendency {
    pub dr: Field,
    pub du_drift: Field,
    /// `theta_R F dW`, projected, when an increment was supplied.
    pub du_noise: Option<Field>,
    pub theta: f64,
    pub y: f64,
}

impl Tendency {
    pub fn du_noise_pending(&self) -> bool {
        self.du_noise.is_none()
    }
}

/// Projected drifts and, if `inc` is given, the projected truncated noise increment.
pub fn galerkin_tendency(state: &State, inc: Option<&WienerIncrement>) -> Result<Tendency> {
    let m = state.params().galerkin_order;
    let raw = raw_tendency(state)?;
    let theta = cutoff_theta(raw.y, state.params().trunc_radius);
    let du_noise = match inc {
        Some(inc) => Some((&apply_noise(state, inc)? * theta).project(m)),
        None => None,
    };
    Ok(Tendency {
        dr: (&raw.dr * theta).project(m),
        du_drift: (&raw.du * theta).project(m),
        du_noise,
        theta,
        y: raw.y,
    })
}
