//! Command-line driver: reads a TOML experiment config, runs the requested
//! simulation / estimation / sweep, and writes CSV tables plus a manifest
//! into the output directory.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical
//! failure (blow-up, degenerate window, singular system, ...).

mod config;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use spde_react::error::Error as CoreError;
use spde_react::estimate::{default_kernels, estimate};
use spde_react::ergodics::{occupation_concentration, variance_scan, VarianceBoundInputs};
use spde_react::harness::{
    run_coverage_experiment, run_figure_experiment, run_growing_window_experiment,
    run_rate_experiment, with_workers, write_estimates_csv, write_manifest,
    write_occupation_csv, write_rescale_csv, write_variance_scan_csv, ExperimentConfig,
};
use spde_react::model::alpha_of;
use spde_react::simulate::{rescale_check, simulate, Trajectory};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(CoreError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::Core(err)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Core(err) if err.is_numerical() => 2,
            CliError::Core(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "spde-react",
    version,
    about = "Simulation and nonparametric reaction estimation for semi-linear parabolic SPDEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and write it as CSV (and optionally binary)
    Simulate(RunArgs),
    /// Estimate the reaction at x0 on a stored or fresh trajectory
    Estimate(RunArgs),
    /// Median/quantile sweep over x0_grid (both figure panels)
    Figure(RunArgs),
    /// RMSE versus noise level over nu_list, with fitted slope
    Rate(RunArgs),
    /// Confidence-interval coverage at x0
    Coverage(RunArgs),
    /// Occupation-time concentration over nu_list
    Occupation(RunArgs),
    /// Variance of localized spatial averages over h_list
    VarianceScan(RunArgs),
    /// RMSE over growing observation windows (gamma_list)
    GrowingWindow(RunArgs),
    /// Diffusivity-rescaling consistency check
    RescaleCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override [experiment] base_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override [experiment] n_runs
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory (default: [experiment] output_dir, then ".")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: SPDE_REACT_WORKERS, then all cores)
    #[arg(long)]
    workers: Option<usize>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let (name, args) = match &command {
        Command::Simulate(a) => ("simulate", a),
        Command::Estimate(a) => ("estimate", a),
        Command::Figure(a) => ("figure", a),
        Command::Rate(a) => ("rate", a),
        Command::Coverage(a) => ("coverage", a),
        Command::Occupation(a) => ("occupation", a),
        Command::VarianceScan(a) => ("variance-scan", a),
        Command::GrowingWindow(a) => ("growing-window", a),
        Command::RescaleCheck(a) => ("rescale-check", a),
    };
    let file = config::load(&args.config)?;
    let out = args
        .out
        .clone()
        .or_else(|| file.experiment.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let n_runs = args.runs.unwrap_or_else(|| file.n_runs());
    let base_seed = args.seed.unwrap_or_else(|| file.base_seed());
    let workers = args.workers.or_else(|| {
        std::env::var("SPDE_REACT_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });

    with_workers(workers, || {
        dispatch(name, &file, out, n_runs, base_seed)
    })
}

fn dispatch(
    name: &str,
    file: &config::FileConfig,
    out: PathBuf,
    n_runs: usize,
    base_seed: u64,
) -> Result<(), CliError> {
    let model = file.build_model()?;
    let grid = file.build_grid(&model)?;
    let exp = &file.experiment;

    match name {
        "simulate" => {
            std::fs::create_dir_all(&out).map_err(CoreError::from)?;
            let traj = simulate(&model, &grid, base_seed)?;
            let mut csv = std::fs::File::create(out.join("trajectory.csv"))
                .map_err(CoreError::from)?;
            traj.write_csv(&mut csv).map_err(CoreError::from)?;
            if exp.binary.unwrap_or(false) {
                let mut bin = std::fs::File::create(out.join("trajectory.bin"))
                    .map_err(CoreError::from)?;
                traj.write_binary(&mut bin).map_err(CoreError::from)?;
            }
            write_manifest(&out, "simulate", &model, &grid, None, 1, base_seed, &[])?;
            println!("wrote trajectory to {}", out.display());
        }
        "estimate" => {
            std::fs::create_dir_all(&out).map_err(CoreError::from)?;
            let est = file.build_estimator(&model)?;
            let traj = match &exp.trajectory {
                Some(path) => {
                    let mut reader = std::io::BufReader::new(
                        std::fs::File::open(path).map_err(|err| {
                            CliError::Config(format!(
                                "cannot read trajectory {}: {err}",
                                path.display()
                            ))
                        })?,
                    );
                    Trajectory::read_binary(&mut reader, model.clone(), grid)?
                }
                None => simulate(&model, &grid, base_seed)?,
            };
            let report = estimate(&traj, &est)?;
            write_estimates_csv(&out, "estimate.csv", &[report.clone()])?;
            write_manifest(&out, "estimate", &model, &grid, Some(&est), 1, base_seed, &[])?;
            println!(
                "f_hat({}) = {}, 95% CI [{}, {}]",
                report.x0, report.f_hat, report.ci_low, report.ci_high
            );
        }
        "figure" => {
            let est = file.build_estimator(&model)?;
            let x0_grid = exp.x0_grid.clone().ok_or_else(|| {
                CliError::Config("figure needs x0_grid in [experiment]".into())
            })?;
            let cfg = ExperimentConfig::new(model, grid, est, n_runs, base_seed, out.clone())?
                .with_x0_grid(x0_grid)?;
            run_figure_experiment(&cfg)?;
            println!("wrote figure tables to {}", out.display());
        }
        "rate" => {
            let est = file.build_estimator(&model)?;
            let nu_list = exp.nu_list.clone().ok_or_else(|| {
                CliError::Config("rate needs nu_list in [experiment]".into())
            })?;
            let cfg = ExperimentConfig::new(model, grid, est, n_runs, base_seed, out.clone())?
                .with_nu_list(nu_list)?;
            let table = run_rate_experiment(&cfg)?;
            match table.fitted_slope {
                Some(slope) => println!("fitted log-log slope: {slope}"),
                None => println!("fitted slope undefined: sigma does not vary"),
            }
        }
        "coverage" => {
            let est = file.build_estimator(&model)?;
            let cfg = ExperimentConfig::new(model, grid, est, n_runs, base_seed, out.clone())?;
            let report = run_coverage_experiment(&cfg)?;
            println!(
                "coverage {} over {} runs ({} degenerate)",
                report.coverage_rate, n_runs, report.n_degenerate
            );
        }
        "occupation" => {
            std::fs::create_dir_all(&out).map_err(CoreError::from)?;
            let nu_list = exp.nu_list.clone().ok_or_else(|| {
                CliError::Config("occupation needs nu_list in [experiment]".into())
            })?;
            let (a_low, a_high) = match (exp.a_low, exp.a_high) {
                (Some(lo), Some(hi)) => (lo, hi),
                _ => {
                    return Err(CliError::Config(
                        "occupation needs a_low and a_high in [experiment]".into(),
                    ))
                }
            };
            let t = exp.t.unwrap_or(model.horizon);
            let rows = occupation_concentration(
                &model, &grid, a_low, a_high, t, &nu_list, n_runs, base_seed,
            )?;
            write_occupation_csv(&out, &rows)?;
            write_manifest(
                &out,
                "occupation",
                &model,
                &grid,
                None,
                n_runs,
                base_seed,
                &[
                    ("a_low", a_low.to_string()),
                    ("a_high", a_high.to_string()),
                    ("t", t.to_string()),
                    ("nu_list", format!("{nu_list:?}")),
                ],
            )?;
            println!("wrote occupation table to {}", out.display());
        }
        "variance-scan" => {
            std::fs::create_dir_all(&out).map_err(CoreError::from)?;
            let est = file.build_estimator(&model)?;
            let h_list = exp.h_list.clone().ok_or_else(|| {
                CliError::Config("variance-scan needs h_list in [experiment]".into())
            })?;
            let t = exp.t.unwrap_or(model.horizon);
            let kernels = default_kernels();
            let x0 = est.x0;
            let family: Vec<(f64, _)> = h_list
                .iter()
                .map(|&h| {
                    let k = kernels.clone();
                    (h, move |x: f64| k.k_plus((x - x0) / h))
                })
                .collect();
            let b_norm = model.noise.multiplier_bounds().map_or(1.0, |(_, hi)| hi);
            let bound = VarianceBoundInputs {
                // right-tent derivative: slope +-2 on a support of length 1
                g_norm_l1: 2.0,
                g_norm_l2: 2.0,
                g_norm_inf: 2.0,
                p_max: 1.0,
                gamma_measure: model.domain.window_len(),
                b_norm,
                c0: 1.0,
                lip: model.reaction.lipschitz_bound,
                alpha: alpha_of(&model.noise)?,
                t,
                sigma: model.sigma,
            };
            let rows = variance_scan(&model, &grid, &family, t, n_runs, base_seed, &bound)?;
            write_variance_scan_csv(&out, &rows)?;
            write_manifest(
                &out,
                "variance-scan",
                &model,
                &grid,
                Some(&est),
                n_runs,
                base_seed,
                &[("h_list", format!("{h_list:?}")), ("t", t.to_string())],
            )?;
            println!("wrote variance scan to {}", out.display());
        }
        "growing-window" => {
            let est = file.build_estimator(&model)?;
            let gamma_list = exp.gamma_list.clone().ok_or_else(|| {
                CliError::Config("growing-window needs gamma_list in [experiment]".into())
            })?;
            let cfg = ExperimentConfig::new(model, grid, est, n_runs, base_seed, out.clone())?;
            run_growing_window_experiment(&cfg, &gamma_list)?;
            println!("wrote growing-window table to {}", out.display());
        }
        "rescale-check" => {
            std::fs::create_dir_all(&out).map_err(CoreError::from)?;
            let traj = simulate(&model, &grid, base_seed)?;
            let report = rescale_check(&traj)?;
            write_rescale_csv(&out, &report)?;
            write_manifest(&out, "rescale-check", &model, &grid, None, 1, base_seed, &[])?;
            println!(
                "window mean diff {}, second-moment diff {}",
                report.mean_diff, report.second_diff
            );
        }
        _ => unreachable!("subcommands are exhaustive"),
    }
    Ok(())
}
