//! Monte Carlo driver: independent paths in parallel, aggregated per recorded time.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::diagnostics::{DiagnosticsRecord, RECORD_COLUMNS};
use crate::error::{Error, Result};
use crate::integrator::{simulate_path, StopReason};

/// Seed of path `index`, a pure function of `(master, index)`.
pub fn path_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.random()
}

/// Mean of `x^p`.
pub fn moment_estimate(samples: &[f64], p: u32) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(samples.iter().map(|x| x.powi(p as i32)).sum::<f64>() / samples.len() as f64)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathStatus {
    Completed,
    Stopped(StopReason),
    Failed(String),
}

impl PathStatus {
    pub fn label(&self) -> &str {
        match self {
            Self::Completed => "completed",
            Self::Stopped(r) => r.as_str(),
            Self::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathSummary {
    pub index: u64,
    pub noise_seed: u64,
    pub status: PathStatus,
    pub tau: Option<f64>,
    pub records: Vec<DiagnosticsRecord>,
}

impl PathSummary {
    fn column_sup(&self, f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
        self.records.iter().map(f).fold(f64::NAN, f64::max)
    }

    pub fn sup_energy(&self) -> f64 {
        self.column_sup(|r| r.energy)
    }

    pub fn sup_entropy(&self) -> f64 {
        self.column_sup(|r| r.entropy)
    }

    pub fn min_rho(&self) -> f64 {
        self.records.iter().map(|r| r.rho_min).fold(f64::NAN, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnSummary {
    pub mean: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl ColumnSummary {
    fn of(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            q05: quantile_sorted(&values, 0.05),
            q50: quantile_sorted(&values, 0.5),
            q95: quantile_sorted(&values, 0.95),
        }
    }
}

/// Cross-path summary of every record column at one recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeRow {
    pub t: f64,
    /// Paths still running at `t`.
    pub active: usize,
    pub columns: Vec<ColumnSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub quantity: &'static str,
    pub p: u32,
    pub mean_of_powers: f64,
    pub power_of_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StopFraction {
    pub total: f64,
    pub norm_threshold: f64,
    pub density_floor: f64,
    pub nonfinite: f64,
    pub failed: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub config: ExperimentConfig,
    pub times: Vec<TimeRow>,
    pub moments: Vec<MomentRow>,
    pub stop_fraction: StopFraction,
    pub paths: Vec<PathSummary>,
}

impl EnsembleStats {
    /// Smallest density seen on any path at any recorded time.
    pub fn min_rho(&self) -> f64 {
        self.paths.iter().map(PathSummary::min_rho).fold(f64::NAN, f64::min)
    }
}

fn run_one(config: &ExperimentConfig, index: u64) -> PathSummary {
    let noise_seed = path_seed(config.master_seed, index);
    let params = Arc::new(config.params.clone());
    let outcome = config
        .initial
        .build(params, index)
        .and_then(|ic| simulate_path(&ic, &config.schedule, noise_seed));
    match outcome {
        Ok(out) => PathSummary {
            index,
            noise_seed,
            status: out.report.reason.map_or(PathStatus::Completed, PathStatus::Stopped),
            tau: out.report.tau_r,
            records: out.records,
        },
        Err(e) => PathSummary {
            index,
            noise_seed,
            status: PathStatus::Failed(e.to_string()),
            tau: None,
            records: Vec::new(),
        },
    }
}

/// Runs `config.n_paths` independent paths on the current rayon pool.
///
/// Path `i` uses noise seed `path_seed(master_seed, i)` and realization `i`
/// of the initial-condition family. Aggregation runs in path order, so the
/// result does not depend on scheduling. A failing path is counted in the
/// stop fraction instead of aborting the ensemble.
pub fn run_ensemble(config: &ExperimentConfig) -> Result<EnsembleStats> {
    config.validate()?;
    let paths: Vec<PathSummary> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| run_one(config, i))
        .collect();
    Ok(aggregate(config, paths))
}

fn aggregate(config: &ExperimentConfig, paths: Vec<PathSummary>) -> EnsembleStats {
    let schedule = &config.schedule;
    let dt = schedule.effective_dt();
    let steps = schedule.steps();
    let t0 = 0.0;
    let on_schedule = |step: u64| step.is_multiple_of(schedule.record_every as u64) || step == steps;

    let mut by_step: BTreeMap<u64, Vec<&DiagnosticsRecord>> = BTreeMap::new();
    for path in &paths {
        for rec in &path.records {
            let step = ((rec.t - t0) / dt).round() as u64;
            if on_schedule(step) && (rec.t - step as f64 * dt).abs() <= 1e-9 * dt.max(1.0) {
                by_step.entry(step).or_default().push(rec);
            }
        }
    }
    let times = by_step
        .into_values()
        .map(|recs| {
            let columns = (0..RECORD_COLUMNS.len())
                .map(|c| ColumnSummary::of(recs.iter().map(|r| r.values()[c]).collect()))
                .collect();
            TimeRow {
                t: recs[0].t,
                active: recs.len(),
                columns,
            }
        })
        .collect();

    let mut moments = Vec::new();
    let sups: [(&'static str, Vec<f64>); 2] = [
        (
            "sup_H",
            paths
                .iter()
                .map(PathSummary::sup_energy)
                .filter(|v| !v.is_nan())
                .collect(),
        ),
        (
            "sup_E",
            paths
                .iter()
                .map(PathSummary::sup_entropy)
                .filter(|v| !v.is_nan())
                .collect(),
        ),
    ];
    for (quantity, samples) in &sups {
        for &p in &config.moments {
            if let (Ok(mp), Ok(m1)) = (moment_estimate(samples, p), moment_estimate(samples, 1)) {
                moments.push(MomentRow {
                    quantity,
                    p,
                    mean_of_powers: mp,
                    power_of_mean: m1.powi(p as i32),
                });
            }
        }
    }

    let n = paths.len() as f64;
    let mut stop = StopFraction::default();
    for path in &paths {
        match &path.status {
            PathStatus::Completed => continue,
            PathStatus::Stopped(StopReason::NormThreshold) => stop.norm_threshold += 1.0 / n,
            PathStatus::Stopped(StopReason::DensityFloor) => stop.density_floor += 1.0 / n,
            PathStatus::Stopped(StopReason::Nonfinite) => stop.nonfinite += 1.0 / n,
            PathStatus::Failed(_) => stop.failed += 1.0 / n,
        }
        stop.total += 1.0 / n;
    }

    EnsembleStats {
        config: config.clone(),
        times,
        moments,
        stop_fraction: stop,
        paths,
    }
}
