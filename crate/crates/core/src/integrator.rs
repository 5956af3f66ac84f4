//! Euler–Maruyama time stepping of the projected system, stopping-time
//! detection and single-path simulation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::diagnostics::DiagnosticsRecord;
use crate::dynamics::{cutoff_argument, galerkin_tendency, Tendency};
use crate::error::{Error, Result};
use crate::fields::State;
use crate::noise::{NoisePath, WienerIncrement};
use crate::spectral::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExplicitEm,
    ImexEm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Keep a full state every this many steps; 0 keeps only the initial and final state.
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_method() -> Method {
    Method::ImexEm
}

fn default_record_every() -> usize {
    1
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            t_end: 0.1,
            dt: 1e-4,
            method: Method::ImexEm,
            record_every: 1,
            snapshot_every: 0,
        }
    }
}

impl Schedule {
    pub fn new(t_end: f64, dt: f64, method: Method) -> Self {
        Self {
            t_end,
            dt,
            method,
            ..Self::default()
        }
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0) || !(self.dt > 0.0) {
            return Err(Error::InvalidParams(format!(
                "schedule needs t_end >= 0 and dt > 0, got t_end = {}, dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.t_end > 0.0 && self.dt > self.t_end * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "dt = {} exceeds t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParams("record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps; `dt` is adjusted to `t_end / steps`.
    pub fn steps(&self) -> u64 {
        if self.t_end == 0.0 {
            0
        } else {
            ((self.t_end / self.dt).round() as u64).max(1)
        }
    }

    pub fn effective_dt(&self) -> f64 {
        match self.steps() {
            0 => self.dt,
            n => self.t_end / n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NormThreshold,
    DensityFloor,
    Nonfinite,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::NormThreshold => "norm_threshold",
            StopReason::DensityFloor => "density_floor",
            StopReason::Nonfinite => "nonfinite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingReport {
    pub stopped: bool,
    pub tau_r: Option<f64>,
    pub reason: Option<StopReason>,
    pub y_max: f64,
}

/// Stop check at one instant: non-finite values, density below the floor, or `y >= R`.
pub fn detect_stop(state: &State) -> Option<StopReason> {
    if !state.is_finite() {
        return Some(StopReason::Nonfinite);
    }
    if state.rho().is_err() {
        return Some(StopReason::DensityFloor);
    }
    let y = cutoff_argument(state);
    if !y.is_finite() {
        return Some(StopReason::Nonfinite);
    }
    (y >= state.params().trunc_radius).then_some(StopReason::NormThreshold)
}

fn stop_reason_for(err: &Error) -> StopReason {
    match err {
        Error::NonPositiveDensity { .. } | Error::OutOfRange { .. } => StopReason::DensityFloor,
        _ => StopReason::Nonfinite,
    }
}

/// Forward update `x + dt T + noise` from an already evaluated tendency.
pub fn explicit_update(state: &State, tendency: &Tendency, dt: f64) -> Result<State> {
    let r = state.r.axpby(1.0, &tendency.dr, dt)?;
    let mut u = state.u.axpby(1.0, &tendency.du_drift, dt)?;
    if let Some(noise) = &tendency.du_noise {
        u = u.axpby(1.0, noise, 1.0)?;
    }
    let m = state.params().galerkin_order;
    Ok(state.with_fields(r.project(m), u.project(m), state.time + dt))
}

/// Euler–Maruyama step: `r+ = r + dt rhs_r`, `u+ = u + dt drift_u + theta_R F dW`.
pub fn step_em(state: &State, dt: f64, inc: &WienerIncrement) -> Result<State> {
    let tendency = galerkin_tendency(state, Some(inc))?;
    explicit_update(state, &tendency, dt)
}

/// Constant-coefficient linearization at the spatial mean state.
///
/// Per wavenumber `kappa = 2 pi k`, with `ubar` the mean velocity and
/// `nu = rho^(alpha-1)`, `c = rho^((beta+1)/2)`, `p = gamma rho^(gamma-(3+beta)/2)`
/// evaluated at the mean density:
///
/// ```text
/// d/dt [r]   [ -i kappa ubar          -i kappa c                 ] [r]
///      [u] = [ -i kappa (p + kappa^2 c)  -i kappa ubar - nu kappa^2 ] [u]
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPart {
    pub ubar: f64,
    pub viscosity: f64,
    pub capillarity: f64,
    pub pressure: f64,
}

impl LinearPart {
    pub fn at_mean_state(state: &State) -> Result<Self> {
        let p = state.params();
        let rho_bar = state.rho()?.mean();
        Ok(Self {
            ubar: state.u.mean(),
            viscosity: rho_bar.powf(p.alpha - 1.0),
            capillarity: rho_bar.powf((p.beta + 1.0) / 2.0),
            pressure: p.gamma * rho_bar.powf(p.gamma - (3.0 + p.beta) / 2.0),
        })
    }

    pub fn mode_matrix(&self, k: i64) -> [[Complex64; 2]; 2] {
        let kappa = 2.0 * PI * k as f64;
        let i = Complex64::new(0.0, 1.0);
        [
            [-i * kappa * self.ubar, -i * kappa * self.capillarity],
            [
                -i * kappa * (self.pressure + kappa * kappa * self.capillarity),
                -i * kappa * self.ubar - self.viscosity * kappa * kappa,
            ],
        ]
    }

    /// Solves `(I - h M_k) x = b`.
    pub fn solve_backward(&self, k: i64, h: f64, b: [Complex64; 2]) -> Result<[Complex64; 2]> {
        let m = self.mode_matrix(k);
        let one = Complex64::new(1.0, 0.0);
        let a11 = one - m[0][0] * h;
        let a12 = -m[0][1] * h;
        let a21 = -m[1][0] * h;
        let a22 = one - m[1][1] * h;
        let det = a11 * a22 - a12 * a21;
        if det.norm() < f64::EPSILON {
            return Err(Error::SingularSolve { k, det: det.norm() });
        }
        Ok([(a22 * b[0] - a12 * b[1]) / det, (a11 * b[1] - a21 * b[0]) / det])
    }

    pub fn apply(&self, k: i64, x: [Complex64; 2]) -> [Complex64; 2] {
        let m = self.mode_matrix(k);
        [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
    }
}

/// IMEX Euler–Maruyama: the truncated linearization `theta_R L` is taken
/// backward in time per Fourier mode, the remainder and the noise forward.
pub fn step_imex(state: &State, dt: f64, inc: &WienerIncrement) -> Result<State> {
    let tendency = galerkin_tendency(state, Some(inc))?;
    let linear = LinearPart::at_mean_state(state)?;
    let m = state.params().galerkin_order as i64;
    let h = dt * tendency.theta;
    let grid = state.grid();
    let n = grid.n_points();

    let (r, u) = (state.r.spectral(), state.u.spectral());
    let (dr, du) = (tendency.dr.spectral(), tendency.du_drift.spectral());
    let noise = tendency.du_noise.as_ref().map(|f| f.spectral());

    let zero = Complex64::new(0.0, 0.0);
    let mut r_next = vec![zero; n];
    let mut u_next = vec![zero; n];
    for j in 0..n {
        let k = grid.wavenumber(j);
        if k.abs() > m {
            continue;
        }
        let x = [r[j], u[j]];
        let lx = linear.apply(k, x);
        let mut b = [
            x[0] + (dr[j] - lx[0] * tendency.theta) * dt,
            x[1] + (du[j] - lx[1] * tendency.theta) * dt,
        ];
        if let Some(noise) = noise {
            b[1] += noise[j];
        }
        let sol = linear.solve_backward(k, h, b)?;
        r_next[j] = sol[0];
        u_next[j] = sol[1];
    }
    Ok(state.with_fields(
        Field::from_spectral(grid, r_next),
        Field::from_spectral(grid, u_next),
        state.time + dt,
    ))
}

pub fn step(method: Method, state: &State, dt: f64, inc: &WienerIncrement) -> Result<State> {
    match method {
        Method::ExplicitEm => step_em(state, dt, inc),
        Method::ImexEm => step_imex(state, dt, inc),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub snapshots: Vec<State>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&State> {
        self.snapshots.last()
    }
}

#[derive(Debug, Clone)]
pub struct PathOutcome {
    pub trajectory: Trajectory,
    pub report: StoppingReport,
    pub records: Vec<DiagnosticsRecord>,
    /// Last valid state reached (equal to the final snapshot).
    pub final_state: State,
}

/// One path driven by the Wiener path with seed `seed` sampled at `schedule.dt`.
pub fn simulate_path(ic: &State, schedule: &Schedule, seed: u64) -> Result<PathOutcome> {
    let noise = NoisePath::new(ic.params().noise.clone().with_seed(seed), schedule.effective_dt());
    simulate_with_noise(ic, schedule, &noise)
}

/// Advances `ic` until `t_end` or the first stop, using `noise.increment(n)` on step `n`.
///
/// The schedule's step must match `noise.dt()`.
pub fn simulate_with_noise(ic: &State, schedule: &Schedule, noise: &NoisePath) -> Result<PathOutcome> {
    schedule.validate()?;
    ic.params().validate()?;
    let steps = schedule.steps();
    let dt = schedule.effective_dt();
    if steps > 0 && (noise.dt() - dt).abs() > 1e-9 * dt {
        return Err(Error::InvalidParams(format!(
            "noise path step {} does not match schedule step {}",
            noise.dt(),
            dt
        )));
    }

    let mut state = ic.clone();
    let mut records = Vec::new();
    let mut snapshots = vec![ic.clone()];
    let mut report = StoppingReport {
        stopped: false,
        tau_r: None,
        reason: None,
        y_max: 0.0,
    };

    if let Some(reason) = detect_stop(&state) {
        report.stopped = true;
        report.tau_r = Some(state.time);
        report.reason = Some(reason);
        if reason == StopReason::NormThreshold {
            report.y_max = cutoff_argument(&state);
            records.push(DiagnosticsRecord::evaluate(&state)?);
        }
        return Ok(PathOutcome {
            trajectory: Trajectory { snapshots },
            report,
            records,
            final_state: state,
        });
    }
    let first = DiagnosticsRecord::evaluate(&state)?;
    report.y_max = first.y;
    records.push(first);

    for n in 0..steps {
        let inc = noise.increment(n);
        let t_next = ic.time + (n + 1) as f64 * dt;
        let next = match step(schedule.method, &state, dt, &inc) {
            Ok(mut s) => {
                s.time = t_next;
                s
            }
            Err(e) => {
                report.stopped = true;
                report.tau_r = Some(t_next);
                report.reason = Some(stop_reason_for(&e));
                break;
            }
        };
        if let Some(reason) = detect_stop(&next) {
            report.stopped = true;
            report.tau_r = Some(t_next);
            report.reason = Some(reason);
            if reason == StopReason::NormThreshold {
                let rec = DiagnosticsRecord::evaluate(&next)?;
                report.y_max = report.y_max.max(rec.y);
                records.push(rec);
                state = next;
            }
            break;
        }
        state = next;
        let step_no = (n + 1) as usize;
        if step_no.is_multiple_of(schedule.record_every) || n + 1 == steps {
            let rec = DiagnosticsRecord::evaluate(&state)?;
            report.y_max = report.y_max.max(rec.y);
            records.push(rec);
        }
        if schedule.snapshot_every > 0 && step_no.is_multiple_of(schedule.snapshot_every) && n + 1 != steps {
            snapshots.push(state.clone());
        }
    }
    if snapshots.len() == 1 || snapshots.last().map(|s| s.time) != Some(state.time) {
        snapshots.push(state.clone());
    }
    if steps == 0 {
        snapshots.truncate(1);
    }
    Ok(PathOutcome {
        trajectory: Trajectory { snapshots },
        report,
        records,
        final_state: state,
    })
}
