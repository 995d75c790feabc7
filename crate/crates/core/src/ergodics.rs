//! Spatial-ergodicity statistics: spatial averages of the field through a
//! test function, the explicit variance bound they satisfy, occupation times
//! against the occupation measure, and empirical marginal-density
//! diagnostics against Gaussian envelopes.
//!
//! The estimator's analysis rests on spatial averages over the observation
//! window concentrating at rate sigma^2 uniformly in the localization
//! bandwidth; the operations here measure that concentration on simulated
//! ensembles and compare it with the closed-form bound.

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::par::run_indexed;
use crate::simulate::{simulate, window_cells, GridSpec, Trajectory};
use crate::stats::{linreg, mean, sample_sd};

/// Cross-section of an ensemble: X_t(y_k) at one time for n_runs independent
/// trajectories of the same (model, grid), one row per seed.
#[derive(Debug, Clone)]
pub struct EnsembleSlice {
    values: Vec<f64>,
    pub n_runs: usize,
    pub t: f64,
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub seeds: Vec<u64>,
}

impl EnsembleSlice {
    /// Simulates n_runs trajectories with seeds base_seed, base_seed+1, ...
    /// and keeps the spatial slice at the grid time nearest t.
    pub fn generate(
        model: &ModelSpec,
        grid: &GridSpec,
        t: f64,
        n_runs: usize,
        base_seed: u64,
    ) -> Result<Self> {
        if n_runs == 0 {
            return Err(Error::EnsembleTooSmall { n_runs, min: 1 });
        }
        grid.check_consistent(model)?;
        let t_index = ((t / grid.dt).round() as usize).min(grid.n_time);
        let rows: Vec<Result<Vec<f64>>> = run_indexed(n_runs, |run| {
            let traj = simulate(model, grid, base_seed.wrapping_add(run as u64))?;
            Ok(traj.row(t_index).to_vec())
        });
        let mut values = Vec::with_capacity(n_runs * grid.n_space);
        for row in rows {
            values.extend_from_slice(&row?);
        }
        Ok(EnsembleSlice {
            values,
            n_runs,
            t: t_index as f64 * grid.dt,
            model: model.clone(),
            grid: *grid,
            seeds: (0..n_runs as u64).map(|r| base_seed.wrapping_add(r)).collect(),
        })
    }

    /// Wraps an externally produced n_runs x n_space matrix; the caller owns
    /// the claim that rows are independent draws of the same model.
    pub fn from_values(
        model: ModelSpec,
        grid: GridSpec,
        t: f64,
        values: Vec<f64>,
        seeds: Vec<u64>,
    ) -> Result<Self> {
        grid.check_consistent(&model)?;
        let n_runs = seeds.len();
        if n_runs == 0 || values.len() != n_runs * grid.n_space {
            return Err(Error::InvalidGrid(format!(
                "ensemble of {} values does not tile {n_runs} runs x {} cells",
                values.len(),
                grid.n_space
            )));
        }
        Ok(EnsembleSlice { values, n_runs, t, model, grid, seeds })
    }

    #[inline]
    pub fn run(&self, r: usize) -> &[f64] {
        &self.values[r * self.grid.n_space..(r + 1) * self.grid.n_space]
    }

    pub fn window_cells(&self) -> std::ops::Range<usize> {
        window_cells(&self.model, &self.grid)
    }
}

/// dx-weighted window sum of g over one spatial row.
fn window_sum<G: Fn(f64) -> f64>(
    model: &ModelSpec,
    grid: &GridSpec,
    row: &[f64],
    g: &G,
) -> f64 {
    let mut acc = 0.0;
    for k in window_cells(model, grid) {
        acc += g(row[k]);
    }
    grid.dx * acc
}

/// The spatial average dx sum_{y_k in window} g(X_{t_index}(y_k)), the
/// Riemann-sum form of int_Gamma g(X_t(y)) dy.
pub fn spatial_average<G: Fn(f64) -> f64>(traj: &Trajectory, g: G, t_index: usize) -> f64 {
    assert!(t_index < traj.n_rows(), "time index {t_index} out of range");
    window_sum(&traj.model, &traj.grid, traj.row(t_index), &g)
}

/// Constants entering the explicit variance bound for spatial averages:
/// derivative norms of the test function, the density envelope constant
/// p_max, window measure, dispersion and heat-kernel constants, the
/// reaction's Lipschitz bound, and the regime exponent alpha.
#[derive(Debug, Clone, Copy)]
pub struct VarianceBoundInputs {
    pub g_norm_l1: f64,
    pub g_norm_l2: f64,
    pub g_norm_inf: f64,
    pub p_max: f64,
    pub gamma_measure: f64,
    pub b_norm: f64,
    pub c0: f64,
    pub lip: f64,
    pub alpha: f64,
    pub t: f64,
    pub sigma: f64,
}

impl VarianceBoundInputs {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.g_norm_l1,
            self.g_norm_l2,
            self.g_norm_inf,
            self.p_max,
            self.gamma_measure,
            self.b_norm,
            self.c0,
            self.lip,
            self.t,
            self.sigma,
        ];
        if fields.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "variance-bound constants must be finite and nonnegative".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha = {} must lie in (0, 1)",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceBounds {
    pub l1_case: f64,
    pub l2_case: f64,
    pub inf_case: f64,
}

/// The three-case explicit bound on Var(int_Gamma g(X_t(y)) dy): a common
/// factor sigma^2 |Gamma| ||B||^2 C0^2 t^{1-alpha} times a case term driven
/// by which derivative norm of g is finite.
pub fn variance_bound(inputs: &VarianceBoundInputs) -> Result<VarianceBounds> {
    inputs.validate()?;
    let i = inputs;
    let common = i.sigma * i.sigma
        * i.gamma_measure
        * i.b_norm * i.b_norm
        * i.c0 * i.c0
        * i.t.powf(1.0 - i.alpha);
    let lt = i.lip * i.t;
    let growth = 2.0 * (1.0 + (2.0 * lt).exp() * lt * lt);
    Ok(VarianceBounds {
        l1_case: common * i.g_norm_l1 * i.g_norm_l1 * i.p_max * i.p_max
            / (1.0 - i.alpha)
            * growth,
        l2_case: common
            * i.g_norm_l2 * i.g_norm_l2
            * i.t.powf(i.alpha / 2.0)
            * i.p_max
            * (2.0 * i.c0 * lt).exp(),
        inf_case: common * i.g_norm_inf * i.g_norm_inf * i.t.powf(i.alpha) * growth,
    })
}

/// One bandwidth's row of a variance scan: the MC variance of the spatial
/// average of a localized test function, with its MC standard error and the
/// ratios to sigma^2 and to the l1-case bound.
#[derive(Debug, Clone, Copy)]
pub struct ScanRow {
    pub h: f64,
    pub variance: f64,
    pub mc_stderr: f64,
    pub ratio_to_sigma2: f64,
    pub ratio_to_l1_bound: f64,
}

/// MC standard error of a sample variance via the fourth central moment.
fn variance_stderr(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let m = mean(samples);
    let m2 = samples.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m4 = samples.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

/// Monte-Carlo variance of the spatial average for a family of localized
/// test functions over a shared ensemble (same seeds for every h, so the
/// table is deterministic in base_seed). The bound constants come from
/// `bound`, whose derivative norms must be the localization-invariant norms
/// of the unlocalized test function.
pub fn variance_scan<G: Fn(f64) -> f64 + Sync>(
    model: &ModelSpec,
    grid: &GridSpec,
    g_family: &[(f64, G)],
    t: f64,
    n_runs: usize,
    base_seed: u64,
    bound: &VarianceBoundInputs,
) -> Result<Vec<ScanRow>> {
    if n_runs < 100 {
        return Err(Error::EnsembleTooSmall { n_runs, min: 100 });
    }
    let ensemble = EnsembleSlice::generate(model, grid, t, n_runs, base_seed)?;
    let l1 = variance_bound(bound)?.l1_case;
    let sigma2 = model.sigma * model.sigma;
    let mut rows = Vec::with_capacity(g_family.len());
    for (h, g) in g_family {
        let averages: Vec<f64> = (0..n_runs)
            .map(|r| window_sum(model, grid, ensemble.run(r), g))
            .collect();
        let variance = crate::stats::sample_variance(&averages);
        rows.push(ScanRow {
            h: *h,
            variance,
            mc_stderr: variance_stderr(&averages),
            ratio_to_sigma2: variance / sigma2,
            ratio_to_l1_bound: variance / l1,
        });
    }
    Ok(rows)
}

/// Occupation time M(A) = dx sum_{y_k in window} 1[a_low <= X <= a_high] of
/// the level set A = [a_low, a_high] at one time slice.
pub fn occupation_time(traj: &Trajectory, a_low: f64, a_high: f64, t_index: usize) -> f64 {
    assert!(a_low <= a_high, "need a_low <= a_high");
    spatial_average(
        traj,
        |x| if (a_low..=a_high).contains(&x) { 1.0 } else { 0.0 },
        t_index,
    )
}

#[derive(Debug, Clone, Copy)]
pub struct OccupationRow {
    pub nu: f64,
    pub sigma: f64,
    pub mu_hat: f64,
    /// MC standard deviation of M(A)/mu_hat; None when the level set was
    /// never visited (mu_hat = 0).
    pub sd_ratio: Option<f64>,
    pub n_runs: usize,
}

/// The occupation measure mu(A) = E[M(A)] estimated by the MC mean, and the
/// concentration of M(A)/mu_hat(A), per diffusivity (sigma re-derived from
/// the coupling at each nu). Exhibits M(A)/mu(A) -> 1 as nu -> 0.
pub fn occupation_concentration(
    template: &ModelSpec,
    grid: &GridSpec,
    a_low: f64,
    a_high: f64,
    t: f64,
    nu_list: &[f64],
    n_runs: usize,
    base_seed: u64,
) -> Result<Vec<OccupationRow>> {
    if n_runs < 2 {
        return Err(Error::EnsembleTooSmall { n_runs, min: 2 });
    }
    if !(a_low <= a_high) {
        return Err(Error::InvalidConfig(format!("level set [{a_low}, {a_high}] is inverted")));
    }
    let mut rows = Vec::with_capacity(nu_list.len());
    for (j, &nu) in nu_list.iter().enumerate() {
        let model = template.with_nu(nu)?;
        let t_index = ((t / grid.dt).round() as usize).min(grid.n_time);
        let m: Vec<Result<f64>> = run_indexed(n_runs, |run| {
            let seed = base_seed.wrapping_add((j * n_runs + run) as u64);
            let traj = simulate(&model, grid, seed)?;
            Ok(occupation_time(&traj, a_low, a_high, t_index))
        });
        let m: Vec<f64> = m.into_iter().collect::<Result<_>>()?;
        let mu_hat = mean(&m);
        let sd_ratio = if mu_hat > 0.0 { Some(sample_sd(&m) / mu_hat) } else { None };
        rows.push(OccupationRow { nu, sigma: model.sigma, mu_hat, sd_ratio, n_runs });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
pub struct HistogramBin {
    pub center: f64,
    pub density: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct DensityDiagnostic {
    pub histogram: Vec<HistogramBin>,
    /// max bin density * t^{alpha/2}: the empirical version of the envelope
    /// constant p_max in the bound p(x) <= p_max t^{-alpha/2}.
    pub p_max_hat: f64,
    /// Gaussian envelope C t^{-alpha/2} exp(-x~^2/(2 C1 t^alpha)) fitted by
    /// least squares on the log-density (x~ centered at the sample mean).
    pub envelope_c: f64,
    /// None when the log-density fit has non-Gaussian (non-negative)
    /// curvature, leaving no finite envelope width.
    pub envelope_c1: Option<f64>,
    pub envelope_violations: usize,
    /// Set when the requested bins would average fewer than 10 samples and
    /// were widened.
    pub bins_widened: bool,
}

/// Histogram density estimate of the marginal X_t(y_k) across the ensemble,
/// with the empirical envelope constant and a fitted Gaussian envelope.
/// Meaningful ensembles need >= 1000 runs; anything below 2 is rejected
/// outright.
pub fn density_diagnostic(
    ensemble: &EnsembleSlice,
    y_index: usize,
    n_bins: usize,
) -> Result<DensityDiagnostic> {
    if ensemble.n_runs < 2 {
        return Err(Error::EnsembleTooSmall { n_runs: ensemble.n_runs, min: 2 });
    }
    assert!(y_index < ensemble.grid.n_space, "cell index {y_index} out of range");
    assert!(n_bins >= 1, "need at least one bin");
    let samples: Vec<f64> =
        (0..ensemble.n_runs).map(|r| ensemble.run(r)[y_index]).collect();

    let mut n_bins = n_bins;
    let mut bins_widened = false;
    if ensemble.n_runs < 10 * n_bins {
        n_bins = (ensemble.n_runs / 10).max(1);
        bins_widened = true;
    }

    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::InvalidConfig(
            "ensemble values are all identical; no density to estimate".into(),
        ));
    }
    let bw = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &x in &samples {
        let idx = (((x - lo) / bw) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    let n = samples.len() as f64;
    let histogram: Vec<HistogramBin> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| HistogramBin {
            center: lo + (i as f64 + 0.5) * bw,
            density: c as f64 / (n * bw),
            count: c,
        })
        .collect();

    let alpha = crate::model::alpha_of(&ensemble.model.noise)?;
    let t_scale = ensemble.t.powf(alpha / 2.0);
    let p_max_hat =
        histogram.iter().map(|b| b.density).fold(0.0f64, f64::max) * t_scale;

    // envelope fit: log p = log(C t^{-alpha/2}) - x~^2/(2 C1 t^alpha)
    let m = mean(&samples);
    let (xs, ys): (Vec<f64>, Vec<f64>) = histogram
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| ((b.center - m).powi(2), b.density.ln()))
        .unzip();
    let (envelope_c, envelope_c1, envelope_violations) = if xs.len() >= 2 {
        match linreg(&xs, &ys) {
            Some((a, b)) => {
                let c = a.exp() * t_scale;
                let c1 = if b < 0.0 {
                    Some(-1.0 / (2.0 * b * ensemble.t.powf(alpha)))
                } else {
                    None
                };
                let violations = histogram
                    .iter()
                    .filter(|bin| {
                        bin.count > 0
                            && bin.density > (a + b * (bin.center - m).powi(2)).exp()
                    })
                    .count();
                (c, c1, violations)
            }
            None => (f64::NAN, None, 0),
        }
    } else {
        (f64::NAN, None, 0)
    };

    Ok(DensityDiagnostic {
        histogram,
        p_max_hat,
        envelope_c,
        envelope_c1,
        envelope_violations,
        bins_widened,
    })
}
