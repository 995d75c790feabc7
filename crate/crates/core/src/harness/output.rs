//! CSV, manifest, and gnuplot emission. Plain text with shortest-roundtrip
//! float formatting, so identical results are identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::ergodics::{OccupationRow, ScanRow};
use crate::estimate::{EstimateReport, EstimatorConfig, Mode};
use crate::model::{Boundary, ModelSpec, NoiseKind};
use crate::simulate::{ComparisonReport, GridSpec};

use super::{CoverageReport, GrowingWindowRow, McReport, RateTable};

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Optional float field: empty when absent.
fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(super) fn write_figure_csvs(
    dir: &Path,
    model: &ModelSpec,
    table: &[(f64, McReport)],
) -> Result<()> {
    let mut left = String::from("x0,median,q05,q95,iqr,true_f\n");
    let mut right = String::from("x0,iqr\n");
    for (x0, report) in table {
        let s = &report.summary;
        let _ = writeln!(
            left,
            "{x0},{},{},{},{},{}",
            s.median,
            s.q05,
            s.q95,
            s.iqr,
            model.reaction.eval(*x0)
        );
        let _ = writeln!(right, "{x0},{}", s.iqr);
    }
    write_text(&dir.join("figure3_left.csv"), &left)?;
    write_text(&dir.join("figure3_right.csv"), &right)
}

pub(super) fn write_gnuplot_figure3(dir: &Path) -> Result<()> {
    let script = "\
set terminal pngcairo size 1100,450
set output 'figure3.png'
set datafile separator ','
set key autotitle columnhead
set multiplot layout 1,2
set xlabel 'x0'
set ylabel 'f'
plot 'figure3_left.csv' using 1:3:4 with filledcurves fc rgb '#d0d0e8' title '5-95% band', \\
     '' using 1:2 with linespoints lc rgb '#303080' pt 7 title 'median', \\
     '' using 1:6 with lines lc rgb '#c03030' title 'true f'
set ylabel 'IQR'
plot 'figure3_right.csv' using 1:2 with linespoints lc rgb '#303080' pt 7 title 'IQR'
unset multiplot
";
    write_text(&dir.join("figure3.gp"), script)
}

pub(super) fn write_rate_csv(dir: &Path, table: &RateTable) -> Result<()> {
    let mut csv = String::from("nu,sigma,h,rmse,fitted_slope\n");
    for row in &table.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            row.nu,
            row.sigma,
            row.h,
            row.rmse,
            opt(table.fitted_slope)
        );
    }
    write_text(&dir.join("rate.csv"), &csv)
}

pub(super) fn write_coverage_csv(
    dir: &Path,
    report: &CoverageReport,
    alpha_bar: f64,
) -> Result<()> {
    let csv = format!(
        "x0,alpha_bar,true_f,coverage_rate,n_runs_ok,n_degenerate\n{},{},{},{},{},{}\n",
        report.x0,
        alpha_bar,
        report.true_f,
        report.coverage_rate,
        report.n_runs_ok,
        report.n_degenerate
    );
    write_text(&dir.join("coverage.csv"), &csv)
}

pub(super) fn write_growing_window_csv(
    dir: &Path,
    rows: &[GrowingWindowRow],
    n_runs: usize,
) -> Result<()> {
    let mut csv = String::from("gamma,h,rmse,n_runs_ok,n_degenerate\n");
    for row in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            row.gamma,
            row.h,
            row.rmse,
            n_runs - row.n_degenerate,
            row.n_degenerate
        );
    }
    write_text(&dir.join("growing_window.csv"), &csv)
}

/// Per-run estimator reports, one CSV row each.
pub fn write_estimates_csv(dir: &Path, name: &str, rows: &[EstimateReport]) -> Result<()> {
    let mut csv = String::from(EstimateReport::CSV_HEADER);
    csv.push('\n');
    for row in rows {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    write_text(&dir.join(name), &csv)
}

/// Occupation-concentration table (`occupation.csv`).
pub fn write_occupation_csv(dir: &Path, rows: &[OccupationRow]) -> Result<()> {
    let mut csv = String::from("nu,sigma,mu_hat,sd_ratio,n_runs\n");
    for row in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            row.nu,
            row.sigma,
            row.mu_hat,
            opt(row.sd_ratio),
            row.n_runs
        );
    }
    write_text(&dir.join("occupation.csv"), &csv)
}

/// Localized-average variance table (`variance_scan.csv`).
pub fn write_variance_scan_csv(dir: &Path, rows: &[ScanRow]) -> Result<()> {
    let mut csv = String::from("h,variance,mc_stderr,ratio_to_sigma2,ratio_to_l1_bound\n");
    for row in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            row.h, row.variance, row.mc_stderr, row.ratio_to_sigma2, row.ratio_to_l1_bound
        );
    }
    write_text(&dir.join("variance_scan.csv"), &csv)
}

/// Diffusivity-rescaling comparison (`rescale.csv`, one row).
pub fn write_rescale_csv(dir: &Path, report: &ComparisonReport) -> Result<()> {
    let csv = format!(
        "n_points,mean_primary,mean_companion,mean_diff,second_primary,second_companion,second_diff\n{},{},{},{},{},{},{}\n",
        report.n_points,
        report.mean_primary,
        report.mean_companion,
        report.mean_diff,
        report.second_primary,
        report.second_companion,
        report.second_diff
    );
    write_text(&dir.join("rescale.csv"), &csv)
}

/// Writes `manifest.toml`: toolkit version, the command, the full model /
/// grid / estimator echo, and the Monte-Carlo budget. Everything needed to
/// reproduce the CSVs next to it; only `timestamp_unix` varies across
/// identical reruns.
#[allow(clippy::too_many_arguments)]
pub fn write_manifest(
    dir: &Path,
    command: &str,
    model: &ModelSpec,
    grid: &GridSpec,
    estimator: Option<&EstimatorConfig>,
    n_runs: usize,
    base_seed: u64,
    extras: &[(&str, String)],
) -> Result<()> {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut m = String::new();
    let _ = writeln!(m, "version = \"{}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "command = \"{command}\"");
    let _ = writeln!(m, "timestamp_unix = {timestamp}");

    let d = &model.domain;
    let boundary = match d.boundary {
        Boundary::Dirichlet => "dirichlet",
        Boundary::Neumann => "neumann",
    };
    let _ = writeln!(m, "\n[model]");
    let _ = writeln!(m, "nu = {}", model.nu);
    let _ = writeln!(m, "sigma = {}", model.sigma);
    let _ = writeln!(m, "horizon = {}", model.horizon);
    let _ = writeln!(m, "reaction = \"{}\"", model.reaction.name());
    let _ = writeln!(m, "lipschitz_bound = {}", model.reaction.lipschitz_bound);

    let _ = writeln!(m, "\n[model.domain]");
    let _ = writeln!(m, "left = {}", d.left);
    let _ = writeln!(m, "right = {}", d.right);
    let _ = writeln!(m, "boundary = \"{boundary}\"");
    let _ = writeln!(m, "gamma_left = {}", d.gamma_left);
    let _ = writeln!(m, "gamma_right = {}", d.gamma_right);

    let _ = writeln!(m, "\n[model.noise]");
    match model.noise.kind() {
        NoiseKind::White => {
            let _ = writeln!(m, "kind = \"white\"");
        }
        NoiseKind::Riesz { rho } => {
            let _ = writeln!(m, "kind = \"riesz\"");
            let _ = writeln!(m, "rho = {rho}");
        }
        NoiseKind::Spectral { rho1, rho2 } => {
            let _ = writeln!(m, "kind = \"spectral\"");
            let _ = writeln!(m, "rho1 = {rho1}");
            let _ = writeln!(m, "rho2 = {rho2}");
        }
    }
    if model.noise.multiplier_bounds().is_some() {
        let _ = writeln!(m, "# pointwise dispersion multiplier present (not serializable)");
    }

    let _ = writeln!(m, "\n[grid]");
    let _ = writeln!(m, "n_space = {}", grid.n_space);
    let _ = writeln!(m, "n_time = {}", grid.n_time);

    if let Some(est) = estimator {
        let _ = writeln!(m, "\n[estimator]");
        let _ = writeln!(m, "x0 = {}", est.x0);
        let _ = writeln!(m, "h = {}", est.h);
        let _ = writeln!(m, "beta = {}", est.beta);
        let _ = writeln!(m, "nu_known = {}", est.nu_known);
        let _ = writeln!(m, "sigma = {}", est.sigma);
        let _ = writeln!(m, "alpha_bar = {}", est.alpha_bar);
        match est.mode {
            Mode::SmallDiffusivity => {
                let _ = writeln!(m, "mode = \"small-diffusivity\"");
            }
            Mode::GrowingWindow { gamma } => {
                let _ = writeln!(m, "mode = \"growing-window\"");
                let _ = writeln!(m, "gamma = {gamma}");
            }
        }
    }

    let _ = writeln!(m, "\n[experiment]");
    let _ = writeln!(m, "n_runs = {n_runs}");
    let _ = writeln!(m, "base_seed = {base_seed}");
    for (key, value) in extras {
        let _ = writeln!(m, "{key} = {value}");
    }

    write_text(&dir.join("manifest.toml"), &m)
}
