use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use snsk::config::{load_config, ExperimentConfig};
use snsk::ensemble::{path_seed, run_ensemble};
use snsk::integrator::simulate_path;
use snsk::output::{
    emit_outputs, plot_regime_map, write_manifest, write_records_file, write_state_binary, write_state_csv,
};
use snsk::regimes::regime_atlas;
use snsk::studies::{
    functional_inequality_sweep, galerkin_convergence_study, pathwise_uniqueness_check, strong_order_study,
};
use snsk::Result;

#[derive(Parser)]
#[command(
    name = "snsk",
    version,
    about = "Stochastic Navier-Stokes-Korteweg simulator on the unit torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `master_seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `n_paths`
    #[arg(long)]
    paths: Option<usize>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one path and write its diagnostics and final state
    Simulate(Common),
    /// Run an ensemble and write statistics, per-path data and plots
    Ensemble(Common),
    /// Classify a rectangle of (alpha, beta)
    Atlas {
        #[arg(long, default_value_t = 0.0)]
        alpha_min: f64,
        #[arg(long, default_value_t = 3.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = -4.0)]
        beta_min: f64,
        #[arg(long, default_value_t = 3.0)]
        beta_max: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare successive Galerkin orders on one path
    StudyGalerkin {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
        orders: Vec<usize>,
    },
    /// Strong error against the finest of several time steps
    StudyOrder {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        dts: Vec<f64>,
    },
    /// Determinism and sensitivity to a small perturbation of the data
    StudyUniqueness {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-8)]
        delta: f64,
    },
    /// Sample the functional inequality over random positive trig polynomials
    CheckInequality {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 16)]
        degree: usize,
        #[arg(long, default_value_t = 0.1)]
        min_value: f64,
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn prepare(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(paths) = common.paths {
        config.n_paths = paths;
    }
    config.validate()?;
    if let Some(threads) = common.threads {
        // fails only if a global pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let out = common.out.clone().unwrap_or_else(|| config.output_dir.clone());
    fs::create_dir_all(&out)?;
    Ok((config, out))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let (config, out) = prepare(&common)?;
            let ic = config.initial.build(Arc::new(config.params.clone()), 0)?;
            let outcome = simulate_path(&ic, &config.schedule, path_seed(config.master_seed, 0))?;
            write_records_file(&outcome.records, &out.join("records.csv"))?;
            write_state_csv(create(&out.join("final_state.csv"))?, &outcome.final_state)?;
            write_state_binary(create(&out.join("final_state.bin"))?, &outcome.final_state)?;
            write_manifest(&config, &out.join("manifest.toml"))?;
            match outcome.report.reason {
                Some(reason) => println!(
                    "stopped at t = {:.6} ({})",
                    outcome.report.tau_r.unwrap_or(f64::NAN),
                    reason.as_str()
                ),
                None => println!("completed t = {:.6}", outcome.final_state.time),
            }
        }
        Command::Ensemble(common) => {
            let (config, out) = prepare(&common)?;
            let stats = run_ensemble(&config)?;
            for path in emit_outputs(&stats, &out)? {
                println!("wrote {}", path.display());
            }
            println!("stop fraction {}", stats.stop_fraction.total);
        }
        Command::Atlas {
            alpha_min,
            alpha_max,
            beta_min,
            beta_max,
            step,
            out,
        } => {
            fs::create_dir_all(&out)?;
            let atlas = regime_atlas((alpha_min, alpha_max), (beta_min, beta_max), step)?;
            atlas.write_csv(create(&out.join("atlas.csv"))?)?;
            plot_regime_map(&atlas, &out.join("atlas.svg"))?;
            println!("{} points classified", atlas.reports.len());
        }
        Command::StudyGalerkin { common, orders } => {
            let (config, out) = prepare(&common)?;
            let report = galerkin_convergence_study(&config, &orders)?;
            report.write_csv(create(&out.join("galerkin.csv"))?)?;
            println!("errors {:?}\nratios {:?}", report.errors, report.ratios);
        }
        Command::StudyOrder { common, dts } => {
            let (config, out) = prepare(&common)?;
            let report = strong_order_study(&config, &dts)?;
            report.write_csv(create(&out.join("strong_order.csv"))?)?;
            println!("errors {:?}\nslope {:?}", report.errors, report.slope);
        }
        Command::StudyUniqueness { common, delta } => {
            let (config, out) = prepare(&common)?;
            let report = pathwise_uniqueness_check(&config, delta)?;
            report.write_csv(create(&out.join("uniqueness.csv"))?)?;
            println!(
                "bitwise identical {}, growth rate {:?}, max ratio {:e}",
                report.bitwise_identical, report.growth_rate, report.max_ratio
            );
        }
        Command::CheckInequality {
            count,
            degree,
            min_value,
            points,
            seed,
            out,
        } => {
            fs::create_dir_all(&out)?;
            let sweep = functional_inequality_sweep(count, degree, min_value, points, seed)?;
            let mut w = create(&out.join("inequality.csv"))?;
            use std::io::Write;
            writeln!(w, "sample,ratio,min_value")?;
            for (i, (r, m)) in sweep.ratios.iter().zip(&sweep.min_values).enumerate() {
                writeln!(w, "{i},{r:e},{m:e}")?;
            }
            println!("max ratio {:.6} (bound {:.6})", sweep.max_ratio, 9.0 / 16.0);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
