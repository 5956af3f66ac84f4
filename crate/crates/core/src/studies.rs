//! Scheme-validation studies: convergence in the Galerkin order, strong order
//! in the time step, pathwise determinism, and the functional inequality sweep.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::diagnostics::check_functional_inequality;
use crate::ensemble::path_seed;
use crate::error::{Error, Result};
use crate::fields::State;
use crate::integrator::{simulate_with_noise, PathOutcome, Schedule};
use crate::noise::NoisePath;
use crate::spectral::{hs_distance, Field, Grid};

/// Sobolev index of the Galerkin discrepancy norm.
pub const GALERKIN_SOBOLEV_INDEX: f64 = 3.0;

fn noise_path(config: &ExperimentConfig, index: u64, base_dt: f64) -> NoisePath {
    let spec = config
        .params
        .noise
        .clone()
        .with_seed(path_seed(config.master_seed, index));
    NoisePath::new(spec, base_dt)
}

/// `(|r_a - r_b|_{H^s}^2 + |u_a - u_b|_{H^s}^2)^(1/2)` over `|k| <= kmax`.
pub fn state_distance_hs(a: &State, b: &State, kmax: usize, s: f64) -> f64 {
    hs_distance(&a.r, &b.r, kmax, s).hypot(hs_distance(&a.u, &b.u, kmax, s))
}

/// `(|r_a - r_b|_2^2 + |u_a - u_b|_2^2)^(1/2)` for states on the same grid.
pub fn state_distance_l2(a: &State, b: &State) -> Result<f64> {
    let dr = a.r.axpby(1.0, &b.r, -1.0)?.norm_l2();
    let du = a.u.axpby(1.0, &b.u, -1.0)?.norm_l2();
    Ok(dr.hypot(du))
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinReport {
    pub orders: Vec<usize>,
    /// `errors[i]`: sup over recorded times of the `H^3` distance between orders `i` and `i+1`.
    pub errors: Vec<f64>,
    /// `ratios[i] = errors[i+1] / errors[i]`.
    pub ratios: Vec<f64>,
}

impl GalerkinReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "m,m_next,sup_hs_error,ratio_to_previous")?;
        for (i, e) in self.errors.iter().enumerate() {
            let ratio = if i == 0 { f64::NAN } else { self.ratios[i - 1] };
            writeln!(w, "{},{},{e:e},{ratio:e}", self.orders[i], self.orders[i + 1])?;
        }
        Ok(())
    }
}

/// Runs path 0 of `config` at each Galerkin order with the same Wiener path
/// and compares successive orders at every recorded time.
pub fn galerkin_convergence_study(config: &ExperimentConfig, orders: &[usize]) -> Result<GalerkinReport> {
    config.validate()?;
    if orders.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("Galerkin orders must be nondecreasing".into()));
    }
    let mut schedule = config.schedule.clone();
    schedule.snapshot_every = schedule.record_every;
    let noise = noise_path(config, 0, schedule.effective_dt());
    let runs: Vec<PathOutcome> = orders
        .par_iter()
        .map(|&m| {
            let mut params = config.params.clone();
            params.galerkin_order = m;
            let ic = config.initial.build(Arc::new(params), 0)?;
            simulate_with_noise(&ic, &schedule, &noise)
        })
        .collect::<Result<_>>()?;

    let errors: Vec<f64> = runs
        .windows(2)
        .zip(orders.windows(2))
        .map(|(pair, m)| {
            let kmax = m[0].max(m[1]);
            pair[0]
                .trajectory
                .snapshots
                .iter()
                .zip(&pair[1].trajectory.snapshots)
                .map(|(a, b)| state_distance_hs(a, b, kmax, GALERKIN_SOBOLEV_INDEX))
                .fold(0.0, f64::max)
        })
        .collect();
    let ratios = errors.windows(2).map(|e| e[1] / e[0]).collect();
    Ok(GalerkinReport {
        orders: orders.to_vec(),
        errors,
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub reference_dt: f64,
    /// Coarse steps, excluding the reference.
    pub dts: Vec<f64>,
    /// Root-mean-square `L^2` error of the final state against the reference.
    pub errors: Vec<f64>,
    /// Fitted `d log(error) / d log(dt)`; `None` when fewer than two errors are positive.
    pub slope: Option<f64>,
    pub paths_used: usize,
    pub paths_excluded: usize,
}

impl OrderReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "dt,rms_error")?;
        for (dt, e) in self.dts.iter().zip(&self.errors) {
            writeln!(w, "{dt:e},{e:e}")?;
        }
        writeln!(
            w,
            "# reference_dt={:e} slope={:?} paths_used={} paths_excluded={}",
            self.reference_dt, self.slope, self.paths_used, self.paths_excluded
        )?;
        Ok(())
    }
}

fn strides(t_end: f64, dts: &[f64], finest: f64) -> Result<Vec<u64>> {
    dts.iter()
        .map(|&dt| {
            let s = (dt / finest).round();
            let steps = t_end / dt;
            if s < 1.0 || (s * finest - dt).abs() > 1e-9 * dt || (steps - steps.round()).abs() > 1e-6 {
                return Err(Error::InvalidParams(format!(
                    "step {dt} is not a whole multiple of {finest} dividing t_end = {t_end}"
                )));
            }
            Ok(s as u64)
        })
        .collect()
}

/// Strong error of the final state against the finest step in `dts`, with
/// every coarse increment summed from the finest path of the same seed.
///
/// Paths that stop before `t_end` at any step are left out and counted.
pub fn strong_order_study(config: &ExperimentConfig, dts: &[f64]) -> Result<OrderReport> {
    config.validate()?;
    let finest = dts.iter().copied().fold(f64::INFINITY, f64::min);
    if dts.len() < 2 || !(finest > 0.0) {
        return Err(Error::InvalidParams("need at least two positive steps".into()));
    }
    let t_end = config.schedule.t_end;
    let coarse: Vec<f64> = dts.iter().copied().filter(|&d| d != finest).collect();
    let coarse_strides = strides(t_end, &coarse, finest)?;
    strides(t_end, &[finest], finest)?;
    let schedule_for = |dt: f64| Schedule {
        dt,
        record_every: usize::MAX,
        snapshot_every: 0,
        ..config.schedule.clone()
    };

    let per_path: Vec<Option<Vec<f64>>> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| -> Result<Option<Vec<f64>>> {
            let ic = config.initial.build(Arc::new(config.params.clone()), i)?;
            let base = noise_path(config, i, finest);
            let reference = simulate_with_noise(&ic, &schedule_for(finest), &base)?;
            if reference.report.stopped {
                return Ok(None);
            }
            let mut errs = Vec::with_capacity(coarse.len());
            for (&dt, &stride) in coarse.iter().zip(&coarse_strides) {
                let out = simulate_with_noise(&ic, &schedule_for(dt), &base.with_stride(stride))?;
                if out.report.stopped {
                    return Ok(None);
                }
                errs.push(state_distance_l2(&out.final_state, &reference.final_state)?);
            }
            Ok(Some(errs))
        })
        .collect::<Result<_>>()?;

    let used: Vec<&Vec<f64>> = per_path.iter().flatten().collect();
    let errors: Vec<f64> = (0..coarse.len())
        .map(|j| (used.iter().map(|e| e[j] * e[j]).sum::<f64>() / used.len().max(1) as f64).sqrt())
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = coarse
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&d, &e)| (d.ln(), e.ln()))
        .unzip();
    Ok(OrderReport {
        reference_dt: finest,
        dts: coarse,
        errors,
        slope: fit_slope(&lx, &ly),
        paths_used: used.len(),
        paths_excluded: per_path.len() - used.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    /// Two runs from the same data and seed agree bit for bit.
    pub bitwise_identical: bool,
    pub delta: f64,
    pub times: Vec<f64>,
    /// `L^2` distance between the unperturbed and perturbed runs.
    pub discrepancy: Vec<f64>,
    /// Fitted `Lambda` in `d(t) ~ d(0) exp(Lambda t)`; `None` when `d(0) = 0`.
    pub growth_rate: Option<f64>,
    /// `max_t d(t) / (d(0) exp(Lambda t))`.
    pub max_ratio: f64,
}

impl UniquenessReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,discrepancy")?;
        for (t, d) in self.times.iter().zip(&self.discrepancy) {
            writeln!(w, "{t:e},{d:e}")?;
        }
        writeln!(
            w,
            "# bitwise_identical={} delta={:e} growth_rate={:?} max_ratio={:e}",
            self.bitwise_identical, self.delta, self.growth_rate, self.max_ratio
        )?;
        Ok(())
    }
}

fn bitwise_equal(a: &PathOutcome, b: &PathOutcome) -> bool {
    let same_state = |x: &State, y: &State| {
        x.time.to_bits() == y.time.to_bits() && x.r.spectral() == y.r.spectral() && x.u.spectral() == y.u.spectral()
    };
    a.trajectory.snapshots.len() == b.trajectory.snapshots.len()
        && a.trajectory
            .snapshots
            .iter()
            .zip(&b.trajectory.snapshots)
            .all(|(x, y)| same_state(x, y))
        && a.records.len() == b.records.len()
        && a.records.iter().zip(&b.records).all(|(x, y)| {
            x.values()
                .iter()
                .zip(y.values())
                .all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

/// Path 0 of `config` run twice with the same data and noise, then once more
/// with `r + delta cos(2 pi x)` and `u + delta sin(2 pi x)`.
pub fn pathwise_uniqueness_check(config: &ExperimentConfig, delta: f64) -> Result<UniquenessReport> {
    config.validate()?;
    let mut schedule = config.schedule.clone();
    schedule.snapshot_every = schedule.record_every;
    let ic = config.initial.build(Arc::new(config.params.clone()), 0)?;
    let noise = noise_path(config, 0, schedule.effective_dt());
    let first = simulate_with_noise(&ic, &schedule, &noise)?;
    let second = simulate_with_noise(&ic, &schedule, &noise)?;

    let perturbed_ic = if delta == 0.0 {
        ic.clone()
    } else {
        let grid: &Grid = ic.grid();
        let r = &ic.r + &Field::from_fn(grid, |x| delta * (2.0 * PI * x).cos());
        let u = &ic.u + &Field::from_fn(grid, |x| delta * (2.0 * PI * x).sin());
        ic.with_fields(r, u, ic.time)
    };
    let perturbed = simulate_with_noise(&perturbed_ic, &schedule, &noise)?;

    let mut times = Vec::new();
    let mut discrepancy = Vec::new();
    for (a, b) in first.trajectory.snapshots.iter().zip(&perturbed.trajectory.snapshots) {
        times.push(a.time);
        discrepancy.push(state_distance_l2(a, b)?);
    }
    let d0 = discrepancy.first().copied().unwrap_or(0.0);
    let (growth_rate, max_ratio) = if d0 > 0.0 {
        // least squares through the origin for log(d / d0) = Lambda t
        let t0 = times[0];
        let (num, den) = times.iter().zip(&discrepancy).fold((0.0, 0.0), |(n, d), (&t, &v)| {
            let s = t - t0;
            (n + s * (v / d0).ln(), d + s * s)
        });
        let rate = if den > 0.0 { num / den } else { 0.0 };
        let ratio = times
            .iter()
            .zip(&discrepancy)
            .map(|(&t, &v)| v / (d0 * (rate * (t - t0)).exp()))
            .fold(0.0, f64::max);
        (Some(rate), ratio)
    } else {
        (None, discrepancy.iter().copied().fold(0.0, f64::max))
    };
    Ok(UniquenessReport {
        bitwise_identical: bitwise_equal(&first, &second),
        delta,
        times,
        discrepancy,
        growth_rate,
        max_ratio,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalitySweep {
    pub ratios: Vec<f64>,
    pub min_values: Vec<f64>,
    pub max_ratio: f64,
}

/// Random positive trigonometric polynomial of degree `1..=max_degree` on `grid`,
/// shifted so its minimum is `min_value` (half the time) or above.
pub fn random_positive_trig_poly(
    rng: &mut ChaCha8Rng,
    grid: &Grid,
    max_degree: usize,
    min_value: f64,
) -> Result<Field> {
    let degree = rng.random_range(1..=max_degree);
    let coeffs: Vec<(f64, f64)> = (0..degree)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let g = Field::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let k = 2.0 * PI * (i + 1) as f64;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum()
    });
    // locate the minimum on a 256x finer grid; the residual offset covers the interpolation gap
    let fine = Grid::new(256 * grid.n_points())?;
    let lowest = g.resample(&fine).min();
    let lift = if rng.random_bool(0.5) {
        0.0
    } else {
        rng.random_range(0.0..2.0)
    };
    Ok(g.map(|v| v - lowest + min_value + 1e-6 + lift))
}

/// `count` samples of `check_functional_inequality` over random positive trig polynomials.
pub fn functional_inequality_sweep(
    count: usize,
    max_degree: usize,
    min_value: f64,
    n_points: usize,
    seed: u64,
) -> Result<InequalitySweep> {
    let grid = Grid::new(n_points)?;
    if max_degree == 0 || 2 * max_degree >= n_points {
        return Err(Error::InvalidParams(format!(
            "degree {max_degree} does not fit on {n_points} points"
        )));
    }
    let results: Vec<(f64, f64)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let f = random_positive_trig_poly(&mut rng, &grid, max_degree, min_value)?;
            Ok((check_functional_inequality(&f)?, f.min()))
        })
        .collect::<Result<_>>()?;
    let (ratios, min_values): (Vec<f64>, Vec<f64>) = results.into_iter().unzip();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(InequalitySweep {
        ratios,
        min_values,
        max_ratio,
    })
}
