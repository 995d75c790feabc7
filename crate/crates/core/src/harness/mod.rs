//! Experiment drivers: deterministic Monte-Carlo sweeps over runs, probe
//! points, diffusivities, and window sizes, with CSV, manifest, and gnuplot
//! emission.
//!
//! Determinism contract: per-run seeds derive from the run index and the
//! position in any outer sweep, never from scheduling; aggregation is a
//! single-threaded pass in index order. Identical config and base_seed give
//! byte-identical CSVs at any worker count.

mod output;

pub use output::{
    write_estimates_csv, write_manifest, write_occupation_csv, write_rescale_csv,
    write_variance_scan_csv,
};

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::estimate::{
    estimate, select_bandwidth, select_bandwidth_growing, EstimateReport, EstimatorConfig, Mode,
};
use crate::model::{Boundary, Domain, ModelSpec};
use crate::par;
use crate::simulate::{simulate, GridSpec};

/// Runs `body` on a worker pool of the requested size; `None` or zero keeps
/// the ambient pool. Wrap whole experiments, not individual runs, so the
/// pool is built once.
pub fn with_workers<R, F>(workers: Option<usize>, body: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    par::with_workers(workers, body)
}

/// Everything an experiment needs: the problem, its discretization, the
/// estimator template, and the Monte-Carlo budget. Sweep drivers override
/// the template's probe point or bandwidth per sweep position.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub estimator: EstimatorConfig,
    pub n_runs: usize,
    pub base_seed: u64,
    pub x0_grid: Option<Vec<f64>>,
    pub nu_list: Option<Vec<f64>>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(
        model: ModelSpec,
        grid: GridSpec,
        estimator: EstimatorConfig,
        n_runs: usize,
        base_seed: u64,
        output_dir: impl Into<PathBuf>,
    ) -> Result<Self> {
        if n_runs == 0 {
            return Err(Error::InvalidConfig("n_runs must be at least 1".into()));
        }
        grid.check_consistent(&model)?;
        Ok(ExperimentConfig {
            model,
            grid,
            estimator,
            n_runs,
            base_seed,
            x0_grid: None,
            nu_list: None,
            output_dir: output_dir.into(),
        })
    }

    pub fn with_x0_grid(mut self, x0_grid: Vec<f64>) -> Result<Self> {
        if x0_grid.is_empty() {
            return Err(Error::InvalidConfig("x0_grid must be nonempty".into()));
        }
        self.x0_grid = Some(x0_grid);
        Ok(self)
    }

    pub fn with_nu_list(mut self, nu_list: Vec<f64>) -> Result<Self> {
        if nu_list.is_empty() {
            return Err(Error::InvalidConfig("nu_list must be nonempty".into()));
        }
        self.nu_list = Some(nu_list);
        Ok(self)
    }
}

/// Order statistics and error summaries of one Monte-Carlo cell.
#[derive(Debug, Clone, Copy)]
pub struct McSummary {
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
    pub q25: f64,
    pub q75: f64,
    pub iqr: f64,
    pub rmse: f64,
    pub coverage_rate: f64,
}

/// All successful runs of one Monte-Carlo cell plus their summary.
/// Degenerate-window runs are counted, not kept.
#[derive(Debug, Clone)]
pub struct McReport {
    pub per_run: Vec<EstimateReport>,
    pub summary: McSummary,
    pub n_degenerate: usize,
}

impl McReport {
    /// Summarizes successful runs against the known value `true_f`.
    /// A cell with no successful runs has no summary and is an error.
    pub fn collect(
        x0: f64,
        per_run: Vec<EstimateReport>,
        n_degenerate: usize,
        true_f: f64,
    ) -> Result<Self> {
        if per_run.is_empty() {
            return Err(Error::DegenerateWindow { x0 });
        }
        let mut estimates: Vec<f64> = per_run.iter().map(|r| r.f_hat).collect();
        estimates.sort_by(f64::total_cmp);
        let n = estimates.len() as f64;
        let rmse = (per_run
            .iter()
            .map(|r| (r.f_hat - true_f).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let covered = per_run
            .iter()
            .filter(|r| r.ci_low <= true_f && true_f <= r.ci_high)
            .count();
        let q25 = quantile(&estimates, 0.25);
        let q75 = quantile(&estimates, 0.75);
        let summary = McSummary {
            median: quantile(&estimates, 0.5),
            q05: quantile(&estimates, 0.05),
            q95: quantile(&estimates, 0.95),
            q25,
            q75,
            iqr: q75 - q25,
            rmse,
            coverage_rate: covered as f64 / n,
        };
        Ok(McReport { per_run, summary, n_degenerate })
    }
}

/// Linear-interpolation quantile of an ascending sample.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Simulates `n_runs` independent trajectories (seeds `seed0 + run index`)
/// and estimates each with `est`. Degenerate windows are counted; any other
/// failure aborts the sweep.
fn mc_estimates(
    model: &ModelSpec,
    grid: &GridSpec,
    est: &EstimatorConfig,
    n_runs: usize,
    seed0: u64,
) -> Result<(Vec<EstimateReport>, usize)> {
    let outcomes = par::run_indexed(n_runs, |i| {
        let traj = simulate(model, grid, seed0 + i as u64)?;
        match estimate(&traj, est) {
            Ok(report) => Ok(Some(report)),
            Err(Error::DegenerateWindow { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut per_run = Vec::with_capacity(n_runs);
    let mut n_degenerate = 0;
    for outcome in outcomes {
        match outcome? {
            Some(report) => per_run.push(report),
            None => n_degenerate += 1,
        }
    }
    Ok((per_run, n_degenerate))
}

/// Sweeps the estimator over `x0_grid`, reusing each simulated trajectory
/// for every probe point. Emits `figure3_left.csv`
/// (`x0,median,q05,q95,iqr,true_f`), `figure3_right.csv` (`x0,iqr`), a
/// `figure3.gp` gnuplot script rendering both panels, and a manifest.
///
/// A probe point where every run degenerates is an error; individual
/// degenerate runs are only counted.
pub fn run_figure_experiment(cfg: &ExperimentConfig) -> Result<Vec<(f64, McReport)>> {
    let x0_grid = cfg
        .x0_grid
        .as_ref()
        .filter(|g| !g.is_empty())
        .ok_or_else(|| Error::InvalidConfig("figure experiment needs a nonempty x0_grid".into()))?;

    let per_run_rows = par::run_indexed(cfg.n_runs, |i| -> Result<Vec<Option<EstimateReport>>> {
        let traj = simulate(&cfg.model, &cfg.grid, cfg.base_seed + i as u64)?;
        x0_grid
            .iter()
            .map(|&x0| {
                let mut est = cfg.estimator.clone();
                est.x0 = x0;
                match estimate(&traj, &est) {
                    Ok(report) => Ok(Some(report)),
                    Err(Error::DegenerateWindow { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect()
    });

    let mut columns: Vec<(Vec<EstimateReport>, usize)> =
        (0..x0_grid.len()).map(|_| (Vec::new(), 0)).collect();
    for row in per_run_rows {
        for (col, outcome) in columns.iter_mut().zip(row?) {
            match outcome {
                Some(report) => col.0.push(report),
                None => col.1 += 1,
            }
        }
    }

    let mut table = Vec::with_capacity(x0_grid.len());
    for (&x0, (per_run, n_degenerate)) in x0_grid.iter().zip(columns) {
        let true_f = cfg.model.reaction.eval(x0);
        table.push((x0, McReport::collect(x0, per_run, n_degenerate, true_f)?));
    }

    std::fs::create_dir_all(&cfg.output_dir)?;
    output::write_figure_csvs(&cfg.output_dir, &cfg.model, &table)?;
    output::write_gnuplot_figure3(&cfg.output_dir)?;
    write_manifest(
        &cfg.output_dir,
        "figure",
        &cfg.model,
        &cfg.grid,
        Some(&cfg.estimator),
        cfg.n_runs,
        cfg.base_seed,
        &[("x0_grid", format!("{x0_grid:?}"))],
    )?;
    Ok(table)
}

/// One diffusivity of the rate sweep.
#[derive(Debug, Clone, Copy)]
pub struct RateRow {
    pub nu: f64,
    pub sigma: f64,
    pub h: f64,
    pub rmse: f64,
    pub n_degenerate: usize,
}

/// The rate sweep with the fitted log-log slope of RMSE against sigma.
/// `fitted_slope` is `None` when sigma does not vary across the list.
#[derive(Debug, Clone)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub fitted_slope: Option<f64>,
}

/// Sweeps `nu_list`, re-deriving sigma from the noise coupling and the
/// bandwidth from the balance rule at each diffusivity. Emits `rate.csv`
/// (`nu,sigma,h,rmse,fitted_slope`) and a manifest.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateTable> {
    let nu_list = cfg
        .nu_list
        .as_ref()
        .filter(|l| l.len() >= 3)
        .ok_or_else(|| Error::InvalidConfig("rate experiment needs at least 3 nu values".into()))?;

    let true_f = cfg.model.reaction.eval(cfg.estimator.x0);
    let mut rows = Vec::with_capacity(nu_list.len());
    for (j, &nu) in nu_list.iter().enumerate() {
        let model = cfg.model.with_nu(nu)?;
        let mut est = cfg.estimator.clone();
        est.h = select_bandwidth(model.sigma, est.beta);
        est.nu_known = nu;
        est.sigma = model.sigma;
        let seed0 = cfg.base_seed + (j * cfg.n_runs) as u64;
        let (per_run, n_degenerate) = mc_estimates(&model, &cfg.grid, &est, cfg.n_runs, seed0)?;
        let report = McReport::collect(est.x0, per_run, n_degenerate, true_f)?;
        rows.push(RateRow {
            nu,
            sigma: model.sigma,
            h: est.h,
            rmse: report.summary.rmse,
            n_degenerate,
        });
    }

    let log_sigma: Vec<f64> = rows.iter().map(|r| r.sigma.ln()).collect();
    let log_rmse: Vec<f64> = rows.iter().map(|r| r.rmse.ln()).collect();
    let fitted_slope = crate::stats::linreg(&log_sigma, &log_rmse).map(|(_, slope)| slope);

    let table = RateTable { rows, fitted_slope };
    std::fs::create_dir_all(&cfg.output_dir)?;
    output::write_rate_csv(&cfg.output_dir, &table)?;
    write_manifest(
        &cfg.output_dir,
        "rate",
        &cfg.model,
        &cfg.grid,
        Some(&cfg.estimator),
        cfg.n_runs,
        cfg.base_seed,
        &[("nu_list", format!("{nu_list:?}"))],
    )?;
    Ok(table)
}

/// Empirical confidence-interval coverage at the template's probe point.
#[derive(Debug, Clone, Copy)]
pub struct CoverageReport {
    pub x0: f64,
    pub true_f: f64,
    pub coverage_rate: f64,
    pub n_runs_ok: usize,
    pub n_degenerate: usize,
}

/// Measures how often the interval contains the true reaction value. Emits
/// `coverage.csv`, the per-run `estimates.csv`, and a manifest.
pub fn run_coverage_experiment(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    let true_f = cfg.model.reaction.eval(cfg.estimator.x0);
    let (per_run, n_degenerate) =
        mc_estimates(&cfg.model, &cfg.grid, &cfg.estimator, cfg.n_runs, cfg.base_seed)?;
    let report = McReport::collect(cfg.estimator.x0, per_run, n_degenerate, true_f)?;
    let coverage = CoverageReport {
        x0: cfg.estimator.x0,
        true_f,
        coverage_rate: report.summary.coverage_rate,
        n_runs_ok: report.per_run.len(),
        n_degenerate,
    };

    std::fs::create_dir_all(&cfg.output_dir)?;
    write_estimates_csv(&cfg.output_dir, "estimates.csv", &report.per_run)?;
    output::write_coverage_csv(&cfg.output_dir, &coverage, cfg.estimator.alpha_bar)?;
    write_manifest(
        &cfg.output_dir,
        "coverage",
        &cfg.model,
        &cfg.grid,
        Some(&cfg.estimator),
        cfg.n_runs,
        cfg.base_seed,
        &[],
    )?;
    Ok(coverage)
}

/// One window size of the growing-window sweep.
#[derive(Debug, Clone, Copy)]
pub struct GrowingWindowRow {
    pub gamma: f64,
    pub h: f64,
    pub rmse: f64,
    pub n_degenerate: usize,
}

// Buffer between the observation window and the Neumann boundary standing
// in for the full line; heat-kernel mass beyond it is negligible over T = 1.
const GROWING_WINDOW_BUFFER: f64 = 5.0;

/// Sweeps increasing window sizes at unit diffusivity and noise level. Each
/// gamma gets its own buffered Neumann domain `(-5, gamma + 5)` with window
/// `(0, gamma)`, a grid rebuilt to the template's dx target with dt = dx^2,
/// and the bandwidth `gamma^{-1/(1+2 beta)}`. Emits `growing_window.csv`
/// (`gamma,h,rmse,n_runs_ok,n_degenerate`) and a manifest.
pub fn run_growing_window_experiment(
    cfg: &ExperimentConfig,
    gammas: &[f64],
) -> Result<Vec<GrowingWindowRow>> {
    if !matches!(cfg.estimator.mode, Mode::GrowingWindow { .. }) {
        return Err(Error::InvalidConfig(
            "growing-window experiment needs a growing-window estimator template".into(),
        ));
    }
    if gammas.is_empty() || gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "gamma list must be nonempty and strictly increasing".into(),
        ));
    }

    let true_f = cfg.model.reaction.eval(cfg.estimator.x0);
    let dx_target = cfg.grid.dx;
    let mut rows = Vec::with_capacity(gammas.len());
    for (j, &gamma) in gammas.iter().enumerate() {
        let domain = Domain::new(
            -GROWING_WINDOW_BUFFER,
            gamma + GROWING_WINDOW_BUFFER,
            Boundary::Neumann,
            0.0,
            gamma,
        )?;
        let model = ModelSpec::new(
            domain,
            1.0,
            cfg.model.noise.clone(),
            cfg.model.reaction.clone(),
            cfg.model.horizon,
        )?;
        debug_assert!((model.sigma - 1.0).abs() < 1e-12, "couplings give sigma = 1 at nu = 1");

        let n_space = ((domain.len() / dx_target).round() as usize).max(4) - 1;
        let dx = domain.len() / (n_space + 1) as f64;
        let n_time = (model.horizon / (dx * dx)).ceil() as usize;
        let grid = GridSpec::new(&model, n_space, n_time)?;

        let mut est = cfg.estimator.clone();
        est.h = select_bandwidth_growing(gamma, est.beta);
        est.nu_known = 1.0;
        est.sigma = 1.0;
        est.mode = Mode::GrowingWindow { gamma };

        let seed0 = cfg.base_seed + (j * cfg.n_runs) as u64;
        let (per_run, n_degenerate) = mc_estimates(&model, &grid, &est, cfg.n_runs, seed0)?;
        let report = McReport::collect(est.x0, per_run, n_degenerate, true_f)?;
        rows.push(GrowingWindowRow {
            gamma,
            h: est.h,
            rmse: report.summary.rmse,
            n_degenerate,
        });
    }

    std::fs::create_dir_all(&cfg.output_dir)?;
    output::write_growing_window_csv(&cfg.output_dir, &rows, cfg.n_runs)?;
    write_manifest(
        &cfg.output_dir,
        "growing-window",
        &cfg.model,
        &cfg.grid,
        Some(&cfg.estimator),
        cfg.n_runs,
        cfg.base_seed,
        &[("gamma_list", format!("{gammas:?}"))],
    )?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::Weights;
    use crate::model::{NoiseSpec, ReactionFn};

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "spde-react-harness-{tag}-{}",
            std::process::id()
        ));
        let _ = std::fs::remove_dir_all(&dir);
        dir
    }

    fn report_at(f_hat: f64, half_width: f64) -> EstimateReport {
        EstimateReport {
            x0: 0.0,
            h: 0.1,
            f_hat,
            std_error: half_width / 1.96,
            ci_low: f_hat - half_width,
            ci_high: f_hat + half_width,
            test_statistic: None,
            weights: Weights {
                t_m1: 0.0,
                t_p1: 0.0,
                t_m2: 0.0,
                t_p2: 0.0,
                j: 1.0,
                i_m: 0.0,
                i_p: 0.0,
            },
            n_window_points: 1,
        }
    }

    #[test]
    fn quantile_interpolates_linearly() {
        let v = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 8.0);
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-15);
        assert_eq!(quantile(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn mc_summary_matches_hand_computation() {
        let per_run: Vec<EstimateReport> =
            [1.0, 2.0, 3.0, 4.0, 100.0].iter().map(|&f| report_at(f, 0.6)).collect();
        let report = McReport::collect(0.0, per_run, 2, 2.5).unwrap();
        let s = report.summary;
        assert_eq!(s.median, 3.0);
        assert_eq!(s.q25, 2.0);
        assert_eq!(s.q75, 4.0);
        assert_eq!(s.iqr, 2.0);
        // intervals are f +- 0.6 around 2.5: only 2.0 and 3.0 qualify
        assert!((s.coverage_rate - 0.4).abs() < 1e-15);
        let rmse = ((1.5f64.powi(2) + 0.25 + 0.25 + 1.5f64.powi(2) + 97.5f64.powi(2)) / 5.0).sqrt();
        assert!((s.rmse - rmse).abs() < 1e-12 * rmse);
        assert_eq!(report.n_degenerate, 2);
    }

    #[test]
    fn empty_cell_is_degenerate() {
        assert!(matches!(
            McReport::collect(1.5, Vec::new(), 10, 0.0),
            Err(Error::DegenerateWindow { x0 }) if x0 == 1.5
        ));
    }

    #[test]
    fn exact_recovery_interval_always_covers() {
        // zero-noise synthetic field: the interval collapses onto the truth
        let c = 0.7;
        let model = ModelSpec::new(
            Domain::new(0.0, 1.0, Boundary::Dirichlet, 0.25, 0.75).unwrap(),
            0.05,
            NoiseSpec::white(),
            ReactionFn::constant(c),
            1.0,
        )
        .unwrap();
        let grid = GridSpec::new(&model, 19, 3).unwrap();
        let est = EstimatorConfig::new(0.35, 0.3, model.nu, model.sigma).unwrap();
        let traj = crate::simulate::Trajectory::from_fn(model, grid, |t, _| c * t).unwrap();
        let per_run: Vec<EstimateReport> =
            (0..3).map(|_| estimate(&traj, &est).unwrap()).collect();
        let report = McReport::collect(est.x0, per_run, 0, c).unwrap();
        assert_eq!(report.summary.coverage_rate, 1.0);
        assert!(report.summary.rmse < 1e-10);
    }

    fn small_cfg(tag: &str) -> ExperimentConfig {
        let model = ModelSpec::new(
            Domain::unit_dirichlet(),
            0.1,
            NoiseSpec::white(),
            ReactionFn::zero(),
            1.0,
        )
        .unwrap();
        let grid = GridSpec::new(&model, 30, 900).unwrap();
        let est = EstimatorConfig::new(0.0, 0.4, model.nu, model.sigma).unwrap();
        ExperimentConfig::new(model, grid, est, 4, 11, tmpdir(tag)).unwrap()
    }

    #[test]
    fn figure_experiment_writes_consistent_tables() {
        let cfg = small_cfg("figure").with_x0_grid(vec![-0.2, 0.0, 0.2]).unwrap();
        let table = run_figure_experiment(&cfg).unwrap();
        assert_eq!(table.len(), 3);
        for (_, report) in &table {
            assert_eq!(report.per_run.len() + report.n_degenerate, cfg.n_runs);
            let s = report.summary;
            assert!(s.q05 <= s.q25 && s.q25 <= s.median && s.median <= s.q75 && s.q75 <= s.q95);
        }

        let left = std::fs::read_to_string(cfg.output_dir.join("figure3_left.csv")).unwrap();
        let mut lines = left.lines();
        assert_eq!(lines.next(), Some("x0,median,q05,q95,iqr,true_f"));
        assert_eq!(lines.count(), 3);
        assert!(cfg.output_dir.join("figure3_right.csv").exists());
        assert!(cfg.output_dir.join("figure3.gp").exists());
        let manifest = std::fs::read_to_string(cfg.output_dir.join("manifest.toml")).unwrap();
        assert!(manifest.contains("command = \"figure\""));
        assert!(manifest.contains("base_seed = 11"));
        std::fs::remove_dir_all(&cfg.output_dir).unwrap();
    }

    #[test]
    fn figure_experiment_requires_x0_grid() {
        let cfg = small_cfg("figure-no-grid");
        assert!(matches!(
            run_figure_experiment(&cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn figure_experiment_is_reproducible_across_worker_counts() {
        let read = |dir: &PathBuf| {
            let mut s = std::fs::read_to_string(dir.join("figure3_left.csv")).unwrap();
            s.push_str(&std::fs::read_to_string(dir.join("figure3_right.csv")).unwrap());
            s
        };
        let cfg1 = small_cfg("workers-1").with_x0_grid(vec![-0.1, 0.1]).unwrap();
        let cfg2 = ExperimentConfig {
            output_dir: tmpdir("workers-4"),
            ..cfg1.clone()
        };
        with_workers(Some(1), || run_figure_experiment(&cfg1)).unwrap();
        with_workers(Some(4), || run_figure_experiment(&cfg2)).unwrap();
        assert_eq!(read(&cfg1.output_dir), read(&cfg2.output_dir));
        std::fs::remove_dir_all(&cfg1.output_dir).unwrap();
        std::fs::remove_dir_all(&cfg2.output_dir).unwrap();
    }

    #[test]
    fn rate_experiment_fits_a_slope() {
        let cfg = small_cfg("rate").with_nu_list(vec![0.2, 0.1, 0.05]).unwrap();
        let table = run_rate_experiment(&cfg).unwrap();
        assert_eq!(table.rows.len(), 3);
        // white coupling: sigma = nu^{1/4} decreases along the list
        assert!(table.rows.windows(2).all(|w| w[0].sigma > w[1].sigma));
        assert!(table.fitted_slope.is_some());
        let csv = std::fs::read_to_string(cfg.output_dir.join("rate.csv")).unwrap();
        assert!(csv.starts_with("nu,sigma,h,rmse,fitted_slope\n"));
        std::fs::remove_dir_all(&cfg.output_dir).unwrap();
    }

    #[test]
    fn rate_experiment_flags_constant_sigma() {
        let cfg = small_cfg("rate-flat").with_nu_list(vec![0.1, 0.1, 0.1]).unwrap();
        let table = run_rate_experiment(&cfg).unwrap();
        assert!(table.fitted_slope.is_none());
        let csv = std::fs::read_to_string(cfg.output_dir.join("rate.csv")).unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(','), "slope column empty: {csv}");
        std::fs::remove_dir_all(&cfg.output_dir).unwrap();
    }

    #[test]
    fn rate_experiment_needs_three_points() {
        let cfg = small_cfg("rate-short").with_nu_list(vec![0.1, 0.01]).unwrap();
        assert!(matches!(
            run_rate_experiment(&cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn coverage_experiment_reports_a_rate() {
        let mut cfg = small_cfg("coverage");
        cfg.n_runs = 8;
        let report = run_coverage_experiment(&cfg).unwrap();
        assert_eq!(report.n_runs_ok + report.n_degenerate, 8);
        assert!((0.0..=1.0).contains(&report.coverage_rate));
        assert!(cfg.output_dir.join("coverage.csv").exists());
        assert!(cfg.output_dir.join("estimates.csv").exists());
        std::fs::remove_dir_all(&cfg.output_dir).unwrap();
    }

    #[test]
    fn growing_window_single_gamma_is_one_row() {
        let mut cfg = small_cfg("growing-single");
        cfg.estimator = cfg
            .estimator
            .clone()
            .with_mode(Mode::GrowingWindow { gamma: 4.0 })
            .unwrap();
        cfg.grid = GridSpec::new(&cfg.model, 9, 100).unwrap(); // dx target 0.1
        let rows = run_growing_window_experiment(&cfg, &[4.0]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].h - 4.0f64.powf(-0.2)).abs() < 1e-15);
        assert!(rows[0].rmse.is_finite());
        std::fs::remove_dir_all(&cfg.output_dir).unwrap();
    }

    #[test]
    fn growing_window_rejects_bad_inputs() {
        let cfg = small_cfg("growing-bad");
        // template still in small-diffusivity mode
        assert!(matches!(
            run_growing_window_experiment(&cfg, &[4.0, 8.0]),
            Err(Error::InvalidConfig(_))
        ));
        let mut gw = small_cfg("growing-bad2");
        gw.estimator = gw
            .estimator
            .clone()
            .with_mode(Mode::GrowingWindow { gamma: 4.0 })
            .unwrap();
        assert!(matches!(
            run_growing_window_experiment(&gw, &[8.0, 4.0]),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn manifests_differ_only_in_timestamp_across_reruns() {
        let cfg = small_cfg("manifest").with_x0_grid(vec![0.0]).unwrap();
        run_figure_experiment(&cfg).unwrap();
        let first = std::fs::read_to_string(cfg.output_dir.join("manifest.toml")).unwrap();
        run_figure_experiment(&cfg).unwrap();
        let second = std::fs::read_to_string(cfg.output_dir.join("manifest.toml")).unwrap();
        let strip = |s: &str| {
            s.lines()
                .filter(|l| !l.starts_with("timestamp_unix"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&first), strip(&second));
        std::fs::remove_dir_all(&cfg.output_dir).unwrap();
    }
}
