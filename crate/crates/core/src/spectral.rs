//! Periodic collocation grid on the unit torus and spectral operations on it.
//!
//! A [`Field`] carries a real periodic function in both collocation and
//! Fourier representation. Either side is materialized lazily from the other,
//! so a field built from point values only pays for a transform when a
//! spectral operation asks for it.
//!
//! Spectral coefficients use the normalization `f(x) = sum_k fhat_k exp(2 pi i k x)`,
//! so `fhat_0` is the mean (and, with period 1, the integral) and Plancherel
//! reads `int f^2 = sum_k |fhat_k|^2`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

struct GridInner {
    n: usize,
    plans: Plans,
    padded: usize,
    padded_plans: OnceLock<Plans>,
}

/// Uniform collocation grid `x_j = j / n` on the torus of period 1.
///
/// Cloning is cheap; FFT plans are shared read-only between clones and threads.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n_points", &self.inner.n).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n
    }
}

impl Grid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(n_points));
        }
        // 3/2 padding: products of two fields resolved on n points are
        // alias-free on every mode |k| < n/2.
        let padded = 3 * n_points / 2;
        // planning dominates the cost of small transforms, so grids are shared per size
        static CACHE: OnceLock<Mutex<HashMap<usize, Grid>>> = OnceLock::new();
        let mut cache = CACHE
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        let grid = cache.entry(n_points).or_insert_with(|| Self {
            inner: Arc::new(GridInner {
                n: n_points,
                plans: Plans::new(n_points),
                padded,
                padded_plans: OnceLock::new(),
            }),
        });
        Ok(grid.clone())
    }

    fn padded_plans(&self) -> &Plans {
        self.inner.padded_plans.get_or_init(|| Plans::new(self.inner.padded))
    }

    /// Grid holding `4 m` points (rounded up to a power of two) for Galerkin order `m`.
    pub fn for_galerkin_order(m: usize) -> Result<Self> {
        Self::new((4 * m).next_power_of_two().max(4))
    }

    pub fn n_points(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        1.0
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.inner.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.inner.n as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.inner.n).map(|j| self.x(j))
    }

    /// Integer wavenumber of FFT slot `j`; the Nyquist slot reports `+n/2`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.inner.n;
        if j <= n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.inner.n).map(|j| self.wavenumber(j)).collect()
    }

    fn nyquist(&self) -> usize {
        self.inner.n / 2
    }

    fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.inner.n;
        let scale = 1.0 / n as f64;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.plans.forward.process(&mut buf);
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inner.plans.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Real periodic function on a [`Grid`], held as point values and/or Fourier coefficients.
#[derive(Clone)]
pub struct Field {
    grid: Grid,
    physical: OnceLock<Vec<f64>>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("n_points", &self.grid.n_points())
            .field("physical", &self.physical.get().is_some())
            .field("spectral", &self.spectral.get().is_some())
            .finish()
    }
}

impl Field {
    pub fn from_physical(grid: &Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n_points(), "field length must match grid");
        Self {
            grid: grid.clone(),
            physical: OnceLock::from(values),
            spectral: OnceLock::new(),
        }
    }

    /// Builds a field from Fourier coefficients in FFT slot order.
    ///
    /// The coefficients must be conjugate-symmetric; only the real part of the
    /// synthesized values is kept.
    pub fn from_spectral(grid: &Grid, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.n_points(), "coefficient length must match grid");
        Self {
            grid: grid.clone(),
            physical: OnceLock::new(),
            spectral: OnceLock::from(coeffs),
        }
    }

    /// Builds a field from coefficients indexed by signed wavenumber `k` in `-kmax..=kmax`.
    /// Modes beyond the grid's resolution are dropped.
    pub fn from_modes(grid: &Grid, modes: &[Complex64]) -> Self {
        assert!(modes.len() % 2 == 1, "mode vector must be symmetric around k = 0");
        let kmax = (modes.len() / 2) as i64;
        let n = grid.n_points();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let k = grid.wavenumber(j);
            if k.abs() <= kmax && k.unsigned_abs() < (n / 2) as u64 {
                *c = modes[(k + kmax) as usize];
            }
        }
        Self::from_spectral(grid, coeffs)
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_physical(grid, grid.points().map(f).collect())
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n_points()];
        coeffs[0] = Complex64::new(value, 0.0);
        Self {
            grid: grid.clone(),
            physical: OnceLock::from(vec![value; grid.n_points()]),
            spectral: OnceLock::from(coeffs),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.n_points()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn physical(&self) -> &[f64] {
        self.physical.get_or_init(|| {
            let coeffs = self.spectral.get().expect("field has no representation");
            self.grid.inverse(coeffs)
        })
    }

    pub fn spectral(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| {
            let values = self.physical.get().expect("field has no representation");
            self.grid.forward(values)
        })
    }

    /// Coefficients for signed wavenumbers `-kmax..=kmax`, zero-extended past the grid.
    pub fn modes(&self, kmax: usize) -> Vec<Complex64> {
        let n = self.len();
        let coeffs = self.spectral();
        (-(kmax as i64)..=kmax as i64)
            .map(|k| {
                if k.unsigned_abs() >= (n / 2) as u64 {
                    Complex64::new(0.0, 0.0)
                } else {
                    coeffs[k.rem_euclid(n as i64) as usize]
                }
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        match (self.physical.get(), self.spectral.get()) {
            (Some(v), _) => v.iter().all(|x| x.is_finite()),
            (None, Some(c)) => c.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            (None, None) => unreachable!("field has no representation"),
        }
    }

    fn check_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_physical(&self.grid, self.physical().iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination on the collocation points (no dealiasing).
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_grid(other)?;
        let values = self
            .physical()
            .iter()
            .zip(other.physical())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field::from_physical(&self.grid, values))
    }

    fn map_spectral(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Field {
        let coeffs = self
            .spectral()
            .iter()
            .enumerate()
            .map(|(j, &c)| f(self.grid.wavenumber(j), c))
            .collect();
        Field::from_spectral(&self.grid, coeffs)
    }

    /// Spectral derivative: mode `k` is multiplied by `(2 pi i k)^order`.
    ///
    /// The Nyquist mode is dropped for odd orders, where its derivative is not real.
    pub fn derivative(&self, order: u32) -> Field {
        if order == 0 {
            return self.clone();
        }
        let nyquist = self.grid.nyquist() as i64;
        self.map_spectral(|k, c| {
            if order % 2 == 1 && k == nyquist {
                return Complex64::new(0.0, 0.0);
            }
            let factor = Complex64::new(0.0, 2.0 * PI * k as f64).powu(order);
            c * factor
        })
    }

    /// L2-orthogonal projection onto trigonometric polynomials of degree `<= m`.
    pub fn project(&self, m: usize) -> Field {
        let m = m as i64;
        self.map_spectral(|k, c| if k.abs() <= m { c } else { Complex64::new(0.0, 0.0) })
    }

    /// Highest wavenumber carrying a coefficient above `tol` in magnitude.
    pub fn degree(&self, tol: f64) -> usize {
        self.spectral()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > tol)
            .map(|(j, _)| self.grid.wavenumber(j).unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Integral over the torus, i.e. the zeroth Fourier coefficient.
    pub fn integrate(&self) -> f64 {
        match self.physical.get() {
            Some(values) => values.iter().sum::<f64>() / values.len() as f64,
            None => self.spectral()[0].re,
        }
    }

    pub fn mean(&self) -> f64 {
        self.integrate()
    }

    /// Sobolev norm `(sum_k (1 + |2 pi k|^2)^s |fhat_k|^2)^(1/2)`.
    pub fn norm_hs(&self, s: f64) -> f64 {
        hs_norm_of_coeffs(
            self.spectral()
                .iter()
                .enumerate()
                .map(|(j, &c)| (self.grid.wavenumber(j), c)),
            s,
        )
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_hs(0.0)
    }

    /// Grid supremum.
    pub fn norm_linf(&self) -> f64 {
        self.physical().iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// `sup|f| + sup|f'| + sup|f''|` with the suprema taken over collocation points.
    pub fn norm_w2inf(&self) -> f64 {
        self.norm_linf() + self.derivative(1).norm_linf() + self.derivative(2).norm_linf()
    }

    pub fn min(&self) -> f64 {
        self.physical().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.physical().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale(&self, a: f64) -> Field {
        match (self.physical.get(), self.spectral.get()) {
            (_, Some(c)) => Field::from_spectral(&self.grid, c.iter().map(|z| z * a).collect()),
            (Some(v), None) => Field::from_physical(&self.grid, v.iter().map(|x| x * a).collect()),
            (None, None) => unreachable!("field has no representation"),
        }
    }

    /// Linear combination `a * self + b * other`, computed on whichever
    /// representation both operands already share.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.check_grid(other)?;
        if let (Some(x), Some(y)) = (self.spectral.get(), other.spectral.get()) {
            let coeffs = x.iter().zip(y).map(|(p, q)| p * a + q * b).collect();
            return Ok(Field::from_spectral(&self.grid, coeffs));
        }
        let values = self
            .physical()
            .iter()
            .zip(other.physical())
            .map(|(p, q)| a * p + b * q)
            .collect();
        Ok(Field::from_physical(&self.grid, values))
    }

    /// Spectral interpolation onto a finer grid (zero-padding of the Fourier series).
    pub fn resample(&self, target: &Grid) -> Field {
        let kmax = (self.len().min(target.n_points()) / 2).saturating_sub(1);
        Field::from_modes(target, &self.modes(kmax))
    }

    /// Pointwise product with 3/2 zero-padding; every returned mode `|k| < n/2`
    /// is free of aliasing. The Nyquist mode of the result is discarded.
    pub fn dealias_product(&self, other: &Field) -> Result<Field> {
        self.check_grid(other)?;
        let n = self.len();
        let big = self.grid.inner.padded;
        let plans = self.grid.padded_plans();
        let pad = |coeffs: &[Complex64]| {
            let mut out = vec![Complex64::new(0.0, 0.0); big];
            for (j, &c) in coeffs.iter().enumerate() {
                let k = self.grid.wavenumber(j);
                if k == (n / 2) as i64 {
                    // split the Nyquist coefficient between +n/2 and -n/2
                    out[n / 2] += c * 0.5;
                    out[big - n / 2] += c * 0.5;
                } else {
                    out[k.rem_euclid(big as i64) as usize] = c;
                }
            }
            plans.inverse.process(&mut out);
            out
        };
        let a = pad(self.spectral());
        let b = pad(other.spectral());
        let mut prod: Vec<Complex64> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| Complex64::new(x.re * y.re, 0.0))
            .collect();
        plans.forward.process(&mut prod);
        let scale = 1.0 / big as f64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let k = self.grid.wavenumber(j);
            if k.unsigned_abs() < (n / 2) as u64 {
                *c = prod[k.rem_euclid(big as i64) as usize] * scale;
            }
        }
        Ok(Field::from_spectral(&self.grid, coeffs))
    }
}

/// Sobolev `H^s` norm from `(wavenumber, coefficient)` pairs.
pub fn hs_norm_of_coeffs(coeffs: impl Iterator<Item = (i64, Complex64)>, s: f64) -> f64 {
    coeffs
        .map(|(k, c)| {
            let kk = 2.0 * PI * k as f64;
            (1.0 + kk * kk).powf(s) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// `H^s` norm of the difference of two fields that may live on different grids.
///
/// Both are compared mode by mode on `|k| <= kmax`, with missing modes read as zero.
pub fn hs_distance(a: &Field, b: &Field, kmax: usize, s: f64) -> f64 {
    let ma = a.modes(kmax);
    let mb = b.modes(kmax);
    let k0 = kmax as i64;
    hs_norm_of_coeffs(
        ma.iter().zip(&mb).enumerate().map(|(i, (x, y))| (i as i64 - k0, x - y)),
        s,
    )
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.axpby(1.0, rhs, 1.0).expect("grid mismatch in field addition")
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.axpby(1.0, rhs, -1.0).expect("grid mismatch in field subtraction")
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scale(rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    fn sin_mode(g: &Grid, k: f64) -> Field {
        Field::from_fn(g, |x| (2.0 * PI * k * x).sin())
    }

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.physical()
            .iter()
            .zip(b.physical())
            .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
    }

    #[test]
    fn rejects_bad_grid_sizes() {
        assert!(Grid::new(48).is_err());
        assert!(Grid::new(2).is_err());
        assert!(Grid::new(64).is_ok());
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid(32);
        let f = sin_mode(&g, 1.0);
        let df = f.derivative(1);
        let expected = Field::from_fn(&g, |x| 2.0 * PI * (2.0 * PI * x).cos());
        assert!(max_diff(&df, &expected) < 1e-12);
        let d2 = f.derivative(2);
        let expected = Field::from_fn(&g, |x| -4.0 * PI * PI * (2.0 * PI * x).sin());
        assert!(max_diff(&d2, &expected) < 1e-11);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid(16);
        let c = Field::constant(&g, 3.5);
        for order in 1..4 {
            assert!(c.derivative(order).norm_linf() < 1e-14);
        }
    }

    #[test]
    fn projection_cuts_high_modes() {
        let g = grid(64);
        assert!(sin_mode(&g, 8.0).project(4).norm_linf() < 1e-14);
        let low = sin_mode(&g, 1.0);
        assert!(max_diff(&low.project(4), &low) < 1e-14);
        let mixed = Field::from_fn(&g, |x| (2.0 * PI * x).cos() + 0.3 * (2.0 * PI * 9.0 * x).sin());
        let p = mixed.project(4);
        assert!(max_diff(&p.project(4), &p) < 1e-15);
    }

    #[test]
    fn product_identity_and_sine_square() {
        let g = grid(32);
        let one = Field::constant(&g, 1.0);
        let f = Field::from_fn(&g, |x| (2.0 * PI * 3.0 * x).cos() + x.sin().powi(2));
        let p = one.dealias_product(&f.project(10)).unwrap();
        assert!(max_diff(&p, &f.project(10)) < 1e-13);

        let s = sin_mode(&g, 1.0);
        let sq = s.dealias_product(&s).unwrap();
        let c = sq.spectral();
        assert!((c[0].re - 0.5).abs() < 1e-15);
        assert!((c[2].re + 0.25).abs() < 1e-15 && (c[30].re + 0.25).abs() < 1e-15);
        let rest: f64 = c
            .iter()
            .enumerate()
            .filter(|(j, _)| ![0, 2, 30].contains(j))
            .map(|(_, z)| z.norm())
            .sum();
        assert!(rest < 1e-14);
    }

    #[test]
    fn product_rejects_grid_mismatch() {
        let a = Field::zeros(&grid(16));
        let b = Field::zeros(&grid(32));
        assert!(matches!(a.dealias_product(&b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn integrals() {
        let g = grid(32);
        let f = Field::from_fn(&g, |x| 1.0 + 0.3 * (2.0 * PI * x).cos());
        assert!((f.integrate() - 1.0).abs() < 1e-15);
        let s2 = Field::from_fn(&g, |x| (2.0 * PI * x).sin().powi(2));
        assert!((s2.integrate() - 0.5).abs() < 1e-15);
        assert_eq!(Field::zeros(&g).integrate(), 0.0);
    }

    #[test]
    fn sobolev_norms() {
        let g = grid(32);
        assert_eq!(Field::zeros(&g).norm_hs(2.0), 0.0);
        let s = sin_mode(&g, 1.0);
        assert!((s.norm_hs(0.0) - 0.5f64.sqrt()).abs() < 1e-14);
        let f = Field::from_fn(&g, |x| (x * 2.0 * PI).cos().exp());
        let sq = f.zip_with(&f, |a, b| a * b).unwrap();
        assert!((f.norm_hs(0.0).powi(2) - sq.integrate()).abs() < 1e-13);
        // H^1 of sin: (1 + 4 pi^2) / 2
        assert!((s.norm_hs(1.0).powi(2) - (1.0 + 4.0 * PI * PI) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn w2inf_norm() {
        let g = grid(64);
        assert!((Field::constant(&g, -2.5).norm_w2inf() - 2.5).abs() < 1e-14);
        assert_eq!(Field::zeros(&g).norm_w2inf(), 0.0);
        let s = sin_mode(&g, 1.0);
        let analytic = 1.0 + 2.0 * PI + 4.0 * PI * PI;
        assert!((s.norm_w2inf() - analytic).abs() < 1e-3);
    }

    #[test]
    fn lazy_representations_agree() {
        let g = grid(16);
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).sin() + 0.25);
        let back = Field::from_spectral(&g, f.spectral().to_vec());
        assert!(max_diff(&f, &back) < 1e-15);
    }

    #[test]
    fn modes_and_resample() {
        let g = grid(16);
        let big = grid(64);
        let f = Field::from_fn(&g, |x| (2.0 * PI * 3.0 * x).cos());
        let up = f.resample(&big);
        let expected = Field::from_fn(&big, |x| (2.0 * PI * 3.0 * x).cos());
        assert!(max_diff(&up, &expected) < 1e-14);
        assert!(hs_distance(&f, &up, 20, 3.0) < 1e-12);
    }
}
