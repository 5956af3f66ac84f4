//! CSV, manifest, snapshot and plot emission.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::config::ExperimentConfig;
use crate::diagnostics::{write_records_csv, DiagnosticsRecord, RECORD_COLUMNS};
use crate::ensemble::EnsembleStats;
use crate::error::{Error, Result};
use crate::fields::State;
use crate::regimes::RegimeAtlas;
use crate::spectral::{Field, Grid};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_manifest(config: &ExperimentConfig, path: &Path) -> Result<()> {
    fs::write(path, config.to_toml_string()?)?;
    Ok(())
}

pub fn write_stats_csv<W: Write>(mut w: W, stats: &EnsembleStats) -> Result<()> {
    let mut header = vec!["t".to_string(), "active".to_string()];
    for name in RECORD_COLUMNS.iter().skip(1) {
        for stat in ["mean", "q05", "q50", "q95"] {
            header.push(format!("{name}_{stat}"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for row in &stats.times {
        let mut cells = vec![format!("{:e}", row.t), row.active.to_string()];
        for c in row.columns.iter().skip(1) {
            cells.extend([c.mean, c.q05, c.q50, c.q95].iter().map(|v| format!("{v:e}")));
        }
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_paths_csv<W: Write>(mut w: W, stats: &EnsembleStats) -> Result<()> {
    writeln!(w, "path,{}", RECORD_COLUMNS.join(","))?;
    for path in &stats.paths {
        for rec in &path.records {
            let cells: Vec<String> = rec.values().iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{},{}", path.index, cells.join(","))?;
        }
    }
    Ok(())
}

pub fn write_path_summary_csv<W: Write>(mut w: W, stats: &EnsembleStats) -> Result<()> {
    writeln!(w, "path,noise_seed,status,tau,sup_H,sup_E,min_rho")?;
    for p in &stats.paths {
        let tau = p.tau.map_or_else(|| "NaN".to_string(), |t| format!("{t:e}"));
        writeln!(
            w,
            "{},{},{},{},{:e},{:e},{:e}",
            p.index,
            p.noise_seed,
            p.status.label(),
            tau,
            p.sup_energy(),
            p.sup_entropy(),
            p.min_rho()
        )?;
    }
    Ok(())
}

pub fn write_moments_csv<W: Write>(mut w: W, stats: &EnsembleStats) -> Result<()> {
    writeln!(w, "quantity,p,mean_of_powers,power_of_mean")?;
    for m in &stats.moments {
        writeln!(w, "{},{},{:e},{:e}", m.quantity, m.p, m.mean_of_powers, m.power_of_mean)?;
    }
    Ok(())
}

pub fn write_stop_fraction_csv<W: Write>(mut w: W, stats: &EnsembleStats) -> Result<()> {
    let f = stats.stop_fraction;
    writeln!(w, "reason,fraction")?;
    for (name, v) in [
        ("total", f.total),
        ("norm_threshold", f.norm_threshold),
        ("density_floor", f.density_floor),
        ("nonfinite", f.nonfinite),
        ("failed", f.failed),
    ] {
        writeln!(w, "{name},{v}")?;
    }
    Ok(())
}

/// Writes every ensemble output into `dir` and returns the paths written.
pub fn emit_outputs(stats: &EnsembleStats, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        let mut w = create(&path)?;
        f(&mut w)?;
        w.flush()?;
        written.push(path);
        Ok(())
    };
    emit("stats.csv", &|w| write_stats_csv(w, stats))?;
    emit("paths.csv", &|w| write_paths_csv(w, stats))?;
    emit("path_summary.csv", &|w| write_path_summary_csv(w, stats))?;
    emit("moments.csv", &|w| write_moments_csv(w, stats))?;
    emit("stop_fraction.csv", &|w| write_stop_fraction_csv(w, stats))?;
    let manifest = dir.join("manifest.toml");
    write_manifest(&stats.config, &manifest)?;
    written.push(manifest);
    if !stats.times.is_empty() {
        let plot = dir.join("energy_entropy.svg");
        plot_ensemble(stats, &plot)?;
        written.push(plot);
    }
    Ok(written)
}

/// `x,rho,u,r` on the collocation grid.
pub fn write_state_csv<W: Write>(mut w: W, state: &State) -> Result<()> {
    let rho = state.rho()?;
    writeln!(w, "x,rho,u,r")?;
    let grid = state.grid();
    for j in 0..grid.n_points() {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e}",
            grid.x(j),
            rho.physical()[j],
            state.u.physical()[j],
            state.r.physical()[j]
        )?;
    }
    Ok(())
}

/// Little-endian: `n_points: u64`, `time: f64`, then `n_points` values of `r` and of `u`.
pub fn write_state_binary<W: Write>(mut w: W, state: &State) -> Result<()> {
    w.write_all(&(state.grid().n_points() as u64).to_le_bytes())?;
    w.write_all(&state.time.to_le_bytes())?;
    for v in state.r.physical().iter().chain(state.u.physical()) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Inverse of [`write_state_binary`]: `(time, r, u)`.
pub fn read_state_binary<R: Read>(mut r: R) -> Result<(f64, Field, Field)> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let n = usize::try_from(u64::from_le_bytes(word)).map_err(|_| Error::Format("grid size overflow".into()))?;
    let grid = Grid::new(n).map_err(|_| Error::Format(format!("invalid grid size {n} in snapshot")))?;
    r.read_exact(&mut word)?;
    let time = f64::from_le_bytes(word);
    let mut read = |count: usize| -> Result<Vec<f64>> {
        (0..count)
            .map(|_| {
                r.read_exact(&mut word)?;
                Ok(f64::from_le_bytes(word))
            })
            .collect()
    };
    let rv = read(n)?;
    let uv = read(n)?;
    Ok((time, Field::from_physical(&grid, rv), Field::from_physical(&grid, uv)))
}

pub fn write_records_file(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_records_csv(&mut w, records)?;
    w.flush()?;
    Ok(())
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = 0.05 * (hi - lo).max(1e-12 * hi.abs().max(1.0));
    (lo - pad, hi + pad)
}

/// Mean and 5-95% band of `H` and `E` against time.
pub fn plot_ensemble(stats: &EnsembleStats, path: &Path) -> Result<()> {
    let root = SVGBackend::new(path, (900, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let t: Vec<f64> = stats.times.iter().map(|r| r.t).collect();
    let (t0, t1) = bounds(t.iter().copied());
    let cols = [(1usize, "H", BLUE), (2usize, "E", RED)];
    let (y0, y1) = bounds(stats.times.iter().flat_map(|r| {
        cols.iter()
            .flat_map(move |(c, _, _)| [r.columns[*c].q05, r.columns[*c].q95])
    }));
    let mut chart = ChartBuilder::on(&root)
        .caption("energy H and BD entropy E", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(t0..t1, y0..y1)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("t").draw().map_err(plot_err)?;
    for (c, name, color) in cols {
        let series = |f: fn(&crate::ensemble::ColumnSummary) -> f64| {
            stats
                .times
                .iter()
                .map(move |r| (r.t, f(&r.columns[c])))
                .collect::<Vec<_>>()
        };
        chart
            .draw_series(LineSeries::new(series(|s| s.mean), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(format!("{name} mean"))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        for q in [series(|s| s.q05), series(|s| s.q95)] {
            chart
                .draw_series(LineSeries::new(q, color.mix(0.4)))
                .map_err(plot_err)?;
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// SCC / NV map over the atlas rectangle.
pub fn plot_regime_map(atlas: &RegimeAtlas, path: &Path) -> Result<()> {
    let root = SVGBackend::new(path, (800, 800)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let step_a = atlas.alphas.get(1).map_or(1.0, |a| a - atlas.alphas[0]);
    let step_b = atlas.betas.get(1).map_or(1.0, |b| b - atlas.betas[0]);
    let (a0, a1) = (
        atlas.alphas[0],
        *atlas.alphas.last().unwrap_or(&atlas.alphas[0]) + step_a,
    );
    let (b0, b1) = (atlas.betas[0], *atlas.betas.last().unwrap_or(&atlas.betas[0]) + step_b);
    let mut chart = ChartBuilder::on(&root)
        .caption(
            "regimes: SCC only (blue), NV only (red), both (purple)",
            ("sans-serif", 18),
        )
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(a0..a1, b0..b1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("alpha")
        .y_desc("beta")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(atlas.reports.iter().map(|r| {
            let color = match (r.scc, r.nv) {
                (true, true) => RGBColor(140, 60, 200),
                (true, false) => RGBColor(70, 110, 230),
                (false, true) => RGBColor(230, 120, 120),
                (false, false) => RGBColor(235, 235, 235),
            };
            Rectangle::new([(r.alpha, r.beta), (r.alpha + step_a, r.beta + step_b)], color.filled())
        }))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}
