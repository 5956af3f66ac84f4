//! Truncated cylindrical Wiener process and the noise coefficients `F_k(x, rho, u)`.
//!
//! Increments are counter-based: the standard normals of step `n` are a pure
//! function of `(seed, n)`, so any step can be regenerated without replaying
//! the path, and coarse increments are exact sums of fine ones.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::State;
use crate::spectral::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    /// `F_k = f_k sin(u)`.
    MultiplicativeSin,
    /// `F_k = f_k e_k(x)` with `e_k` the real Fourier basis. Does not vanish at
    /// `(rho, u) = (0, 0)`.
    AdditiveBasis,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub mode_count: usize,
    /// `f_k = k^(-weight_decay)`.
    pub weight_decay: f64,
    pub family: NoiseFamily,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            mode_count: 16,
            weight_decay: 2.0,
            family: NoiseFamily::MultiplicativeSin,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn off() -> Self {
        Self {
            family: NoiseFamily::Off,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode_count == 0 {
            return Err(Error::InvalidParams("noise mode_count must be >= 1".into()));
        }
        if !(self.weight_decay > 1.0) {
            return Err(Error::InvalidParams(format!(
                "noise weight_decay must be > 1 for a summable f_k, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }

    pub fn is_off(&self) -> bool {
        self.family == NoiseFamily::Off
    }

    /// Weight `f_k` for `k >= 1`.
    pub fn weight(&self, k: usize) -> f64 {
        (k as f64).powf(-self.weight_decay)
    }

    pub fn weight_sum(&self) -> f64 {
        (1..=self.mode_count).map(|k| self.weight(k)).sum()
    }
}

/// Orthonormal real Fourier basis of `L^2(T)` without the constant:
/// `e_{2j-1} = sqrt 2 cos(2 pi j x)`, `e_{2j} = sqrt 2 sin(2 pi j x)`.
pub fn basis_function(k: usize, x: f64) -> f64 {
    let j = k.div_ceil(2) as f64;
    if k % 2 == 1 {
        SQRT_2 * (2.0 * PI * j * x).cos()
    } else {
        SQRT_2 * (2.0 * PI * j * x).sin()
    }
}

/// `F_k(x, rho, u)` for `1 <= k <= K`.
pub fn eval_coefficient(spec: &NoiseSpec, k: usize, x: f64, _rho: f64, u: f64) -> f64 {
    match spec.family {
        NoiseFamily::MultiplicativeSin => spec.weight(k) * u.sin(),
        NoiseFamily::AdditiveBasis => spec.weight(k) * basis_function(k, x),
        NoiseFamily::Off => 0.0,
    }
}

/// Brownian increments `dW_1 .. dW_K` over one step of length `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerIncrement {
    pub dw: Vec<f64>,
    pub dt: f64,
}

impl WienerIncrement {
    pub fn zero(mode_count: usize, dt: f64) -> Self {
        Self {
            dw: vec![0.0; mode_count],
            dt,
        }
    }
}

fn standard_normals(seed: u64, step_index: u64, count: usize) -> impl Iterator<Item = f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step_index);
    (0..count).map(move |_| rng.sample::<f64, _>(StandardNormal))
}

/// Independent `N(0, dt)` increments for step `step_index`, a pure function of
/// `(spec.seed, step_index)`.
pub fn wiener_increments(spec: &NoiseSpec, dt: f64, step_index: u64) -> WienerIncrement {
    let sd = dt.sqrt();
    WienerIncrement {
        dw: standard_normals(spec.seed, step_index, spec.mode_count)
            .map(|z| sd * z)
            .collect(),
        dt,
    }
}

/// A Wiener path sampled on a base step `base_dt`, read at `stride * base_dt`.
///
/// Every coarse increment is the sum of the `stride` base increments it
/// covers, so paths read at different strides are the same realization.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub spec: NoiseSpec,
    pub base_dt: f64,
    pub stride: u64,
}

impl NoisePath {
    pub fn new(spec: NoiseSpec, base_dt: f64) -> Self {
        Self {
            spec,
            base_dt,
            stride: 1,
        }
    }

    pub fn with_stride(&self, stride: u64) -> Self {
        assert!(stride >= 1);
        Self { stride, ..self.clone() }
    }

    pub fn dt(&self) -> f64 {
        self.base_dt * self.stride as f64
    }

    pub fn increment(&self, step: u64) -> WienerIncrement {
        if self.spec.is_off() {
            return WienerIncrement::zero(self.spec.mode_count, self.dt());
        }
        if self.stride == 1 {
            return wiener_increments(&self.spec, self.base_dt, step);
        }
        let mut dw = vec![0.0; self.spec.mode_count];
        for fine in step * self.stride..(step + 1) * self.stride {
            let inc = wiener_increments(&self.spec, self.base_dt, fine);
            dw.iter_mut().zip(&inc.dw).for_each(|(a, b)| *a += b);
        }
        WienerIncrement { dw, dt: self.dt() }
    }

    /// Dumps `steps` increments as little-endian f64: header `K: u64, steps: u64, dt: f64`,
    /// then `steps` rows of `K` values.
    pub fn write_binary<W: Write>(&self, mut w: W, steps: u64) -> Result<()> {
        w.write_all(&(self.spec.mode_count as u64).to_le_bytes())?;
        w.write_all(&steps.to_le_bytes())?;
        w.write_all(&self.dt().to_le_bytes())?;
        for n in 0..steps {
            for v in self.increment(n).dw {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// `sum_k F_k(x, rho(x), u(x)) dW_k` on the collocation points.
pub fn apply_noise(state: &State, inc: &WienerIncrement) -> Result<Field> {
    let spec = &state.params().noise;
    let grid = state.grid();
    if spec.is_off() {
        return Ok(Field::zeros(grid));
    }
    let u = state.u.physical();
    let values = match spec.family {
        NoiseFamily::MultiplicativeSin => {
            let amplitude: f64 = inc.dw.iter().enumerate().map(|(i, dw)| spec.weight(i + 1) * dw).sum();
            u.iter().map(|&v| amplitude * v.sin()).collect()
        }
        _ => {
            let rho = state.rho()?;
            let rho = rho.physical();
            (0..grid.n_points())
                .map(|j| {
                    let x = grid.x(j);
                    inc.dw
                        .iter()
                        .enumerate()
                        .map(|(i, dw)| eval_coefficient(spec, i + 1, x, rho[j], u[j]) * dw)
                        .sum()
                })
                .collect()
        }
    };
    Ok(Field::from_physical(grid, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthCondition {
    /// `F_k(., 0, 0) = 0`.
    VanishesAtZero,
    /// `|F_k| <= f_k (1 + |u|)`.
    LinearGrowth,
    /// `|d^l F_k| <= f_k` for `1 <= l <= 3` and `sum f_k < inf`.
    BoundedDerivatives,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthViolation {
    pub condition: GrowthCondition,
    pub k: usize,
    pub x: f64,
    pub rho: f64,
    pub u: f64,
    /// Observed magnitude divided by the allowed bound.
    pub ratio: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GrowthReport {
    pub samples: usize,
    pub violations: Vec<GrowthViolation>,
    pub weight_sum: f64,
    pub weight_sum_monotone: bool,
}

impl GrowthReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty() && self.weight_sum.is_finite() && self.weight_sum_monotone
    }

    pub fn violates(&self, condition: GrowthCondition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

const FD_STEP: f64 = 1e-3;
const GROWTH_TOL: f64 = 1e-4;

/// Central finite difference of order `orders = (l_x, l_rho, l_u)` at `point`.
fn mixed_derivative(f: &dyn Fn([f64; 3]) -> f64, point: [f64; 3], orders: [u32; 3]) -> f64 {
    fn go(f: &dyn Fn([f64; 3]) -> f64, p: [f64; 3], orders: [u32; 3], axis: usize) -> f64 {
        if axis == 3 {
            return f(p);
        }
        let l = orders[axis];
        if l == 0 {
            return go(f, p, orders, axis + 1);
        }
        // central stencil for the l-th derivative with spacing h
        let h = FD_STEP;
        let stencil: &[(f64, f64)] = match l {
            1 => &[(-1.0, -0.5), (1.0, 0.5)],
            2 => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
            3 => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
            _ => unreachable!("derivative orders above 3 are not checked"),
        };
        stencil
            .iter()
            .map(|&(off, w)| {
                let mut q = p;
                q[axis] += off * h;
                w * go(f, q, orders, axis + 1)
            })
            .sum::<f64>()
            / h.powi(l as i32)
    }
    go(f, point, orders, 0)
}

/// Monte Carlo audit of the growth hypotheses over random `(x, rho, u)`.
pub fn verify_growth_bounds(spec: &NoiseSpec, samples: usize, seed: u64) -> GrowthReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GrowthReport {
        samples,
        weight_sum: spec.weight_sum(),
        weight_sum_monotone: true,
        ..Default::default()
    };
    let mut partial = 0.0;
    for k in 1..=spec.mode_count {
        let next = partial + spec.weight(k);
        if !(next >= partial) {
            report.weight_sum_monotone = false;
        }
        partial = next;
    }

    let multi_indices: Vec<[u32; 3]> = (0..=3u32)
        .flat_map(|a| (0..=3u32).flat_map(move |b| (0..=3u32).map(move |c| [a, b, c])))
        .filter(|o| (1..=3).contains(&o.iter().sum::<u32>()))
        .collect();

    // keep the first violation per (condition, k)
    let record = |v: GrowthViolation, report: &mut GrowthReport| {
        if !report
            .violations
            .iter()
            .any(|w| w.condition == v.condition && w.k == v.k)
        {
            report.violations.push(v);
        }
    };

    for _ in 0..samples {
        let x: f64 = rng.random();
        let rho: f64 = rng.random_range(0.0..10.0);
        let u: f64 = rng.random_range(-10.0..10.0);
        let k = rng.random_range(1..=spec.mode_count);
        let fk = spec.weight(k);

        let at_zero = eval_coefficient(spec, k, x, 0.0, 0.0).abs();
        if at_zero > 0.0 {
            record(
                GrowthViolation {
                    condition: GrowthCondition::VanishesAtZero,
                    k,
                    x,
                    rho: 0.0,
                    u: 0.0,
                    ratio: f64::INFINITY,
                },
                &mut report,
            );
        }

        let value = eval_coefficient(spec, k, x, rho, u).abs();
        let bound = fk * (1.0 + u.abs());
        if value > bound * (1.0 + GROWTH_TOL) {
            record(
                GrowthViolation {
                    condition: GrowthCondition::LinearGrowth,
                    k,
                    x,
                    rho,
                    u,
                    ratio: value / bound,
                },
                &mut report,
            );
        }

        // keep rho away from 0 so the stencil stays in the domain
        let rho_fd = rho.max(4.0 * FD_STEP);
        let f = |p: [f64; 3]| eval_coefficient(spec, k, p[0], p[1], p[2]);
        for orders in &multi_indices {
            let d = mixed_derivative(&f, [x, rho_fd, u], *orders).abs();
            if d > fk * (1.0 + GROWTH_TOL) {
                record(
                    GrowthViolation {
                        condition: GrowthCondition::BoundedDerivatives,
                        k,
                        x,
                        rho: rho_fd,
                        u,
                        ratio: d / fk,
                    },
                    &mut report,
                );
                break;
            }
        }
    }
    report
}
