//! Pointwise estimation of the reaction function.
//!
//! The estimator localizes the observed field around a level x0 with a pair
//! of one-sided kernels whose data-driven weights make the combined random
//! kernel nonnegative, normalized, and first-moment free:
//!
//! ```text
//! (I)   K_hat >= 0
//! (II)  dt dx sum K_hat(X) = 1
//! (III) dt dx sum K_hat(X) (X - x0) = 0
//! ```
//!
//! in their discrete Riemann-sum form, which this module preserves exactly by
//! building the weights and the final weighted average over the same index
//! set with the same quadrature. The weighted least-squares average of the
//! local space-time increments then estimates f(x0), with a studentized
//! standard error driving confidence intervals and level tests.

use crate::error::{Error, Result};
use crate::model::Boundary;
use crate::simulate::Trajectory;
use crate::stats::normal_quantile;
use std::sync::Arc;

type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Two one-sided kernels: k_minus supported in [-1, 0], k_plus in [0, 1],
/// both nonnegative, Lipschitz, and not identically zero. The constructor
/// spot-checks support and sign on a sample grid; Lipschitz continuity is the
/// caller's contract.
#[derive(Clone)]
pub struct KernelPair {
    k_minus: KernelFn,
    k_plus: KernelFn,
}

impl std::fmt::Debug for KernelPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelPair").finish_non_exhaustive()
    }
}

impl KernelPair {
    pub fn new<FM, FP>(k_minus: FM, k_plus: FP) -> Result<Self>
    where
        FM: Fn(f64) -> f64 + Send + Sync + 'static,
        FP: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let pair = KernelPair { k_minus: Arc::new(k_minus), k_plus: Arc::new(k_plus) };
        let mut max_m: f64 = 0.0;
        let mut max_p: f64 = 0.0;
        for i in 0..=240 {
            let u = -3.0 + i as f64 * 0.025;
            let (m, p) = (pair.k_minus(u), pair.k_plus(u));
            if m < 0.0 || p < 0.0 {
                return Err(Error::InvalidConfig(format!("kernel negative at {u}")));
            }
            if m > 0.0 && !(-1.0..=0.0).contains(&u) {
                return Err(Error::InvalidConfig(format!(
                    "k_minus positive at {u}, outside [-1, 0]"
                )));
            }
            if p > 0.0 && !(0.0..=1.0).contains(&u) {
                return Err(Error::InvalidConfig(format!(
                    "k_plus positive at {u}, outside [0, 1]"
                )));
            }
            max_m = max_m.max(m);
            max_p = max_p.max(p);
        }
        if max_m == 0.0 || max_p == 0.0 {
            return Err(Error::InvalidConfig("kernel identically zero on its support".into()));
        }
        Ok(pair)
    }

    #[inline]
    pub fn k_minus(&self, u: f64) -> f64 {
        (self.k_minus)(u)
    }

    #[inline]
    pub fn k_plus(&self, u: f64) -> f64 {
        (self.k_plus)(u)
    }
}

/// Tent kernels: K-(x) = max(0, 1 - |2x+1|) on [-1, 0] and
/// K+(x) = max(0, 1 - |2x-1|) on [0, 1].
pub fn default_kernels() -> KernelPair {
    KernelPair::new(
        |x| (1.0 - (2.0 * x + 1.0).abs()).max(0.0),
        |x| (1.0 - (2.0 * x - 1.0).abs()).max(0.0),
    )
    .expect("tent kernels satisfy the kernel contract")
}

/// The localisation g_h(x) = g((x - x0)/h): support is the affine image of
/// supp(g), and integrals scale by h.
pub fn localize<F: Fn(f64) -> f64>(g: F, h: f64, x0: f64) -> impl Fn(f64) -> f64 {
    assert!(h > 0.0, "bandwidth must be positive");
    move |x| g((x - x0) / h)
}

/// Data-driven weight statistics of one trajectory: kernel masses t_m1/t_p1,
/// one-sided first moments t_m2/t_p2 (both nonnegative by the support
/// geometry), the normalizer j = t_m1 t_p2 + t_p1 t_m2, and the quadratic
/// variations i_m/i_p entering the standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub t_m1: f64,
    pub t_p1: f64,
    pub t_m2: f64,
    pub t_p2: f64,
    pub j: f64,
    pub i_m: f64,
    pub i_p: f64,
}

/// Estimation regime: the small-diffusivity asymptotics on a fixed window,
/// or the growing-window regime (unit diffusivity and noise level, window
/// length gamma) where the standard error drops the sigma factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    SmallDiffusivity,
    GrowingWindow { gamma: f64 },
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub x0: f64,
    pub h: f64,
    pub kernels: KernelPair,
    /// Assumed Hoelder regularity of f, in [1, 2]; drives the bandwidth rule.
    pub beta: f64,
    pub nu_known: f64,
    pub sigma: f64,
    pub mode: Mode,
    /// CI/test level: intervals cover with asymptotic probability 1 - alpha_bar.
    pub alpha_bar: f64,
}

impl EstimatorConfig {
    pub fn new(x0: f64, h: f64, nu_known: f64, sigma: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidConfig(format!("bandwidth h = {h} must be positive")));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidConfig("x0 must be finite".into()));
        }
        if !(nu_known > 0.0) || !(sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "need nu > 0 and sigma >= 0, got nu = {nu_known}, sigma = {sigma}"
            )));
        }
        Ok(EstimatorConfig {
            x0,
            h,
            kernels: default_kernels(),
            beta: 2.0,
            nu_known,
            sigma,
            mode: Mode::SmallDiffusivity,
            alpha_bar: 0.05,
        })
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&beta) {
            return Err(Error::InvalidConfig(format!("beta = {beta} must lie in [1, 2]")));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn with_kernels(mut self, kernels: KernelPair) -> Self {
        self.kernels = kernels;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Result<Self> {
        if let Mode::GrowingWindow { gamma } = mode {
            if !(gamma > 0.0) {
                return Err(Error::InvalidConfig(format!("gamma = {gamma} must be positive")));
            }
        }
        self.mode = mode;
        Ok(self)
    }

    pub fn with_alpha_bar(mut self, alpha_bar: f64) -> Result<Self> {
        if !(alpha_bar > 0.0 && alpha_bar < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha_bar = {alpha_bar} not in (0, 1)")));
        }
        self.alpha_bar = alpha_bar;
        Ok(self)
    }

    fn sigma_effective(&self) -> f64 {
        match self.mode {
            Mode::SmallDiffusivity => self.sigma,
            // growing-window CLT is studentized without the noise level
            Mode::GrowingWindow { .. } => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub x0: f64,
    pub h: f64,
    pub f_hat: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub test_statistic: Option<f64>,
    pub weights: Weights,
    /// Number of space-time points with the field inside the kernel support.
    pub n_window_points: usize,
}

impl EstimateReport {
    pub const CSV_HEADER: &'static str =
        "x0,h,f_hat,std_error,ci_low,ci_high,n_window_points,t_m1,t_p1,t_m2,t_p2,j,i_m,i_p";

    pub fn csv_row(&self) -> String {
        let w = &self.weights;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.x0,
            self.h,
            self.f_hat,
            self.std_error,
            self.ci_low,
            self.ci_high,
            self.n_window_points,
            w.t_m1,
            w.t_p1,
            w.t_m2,
            w.t_p2,
            w.j,
            w.i_m,
            w.i_p
        )
    }
}

/// One pass over the estimation index set: time rows 0..n_time (left-endpoint
/// rule; the last row only feeds the forward difference), window cells in
/// space. Everything downstream (weights, WLS average, quadratic sums for the
/// joint objective) is assembled from these side-separated sums so that the
/// discrete kernel identities hold by construction.
#[derive(Debug, Clone, Copy, Default)]
struct Scan {
    sm: f64,
    sp: f64,
    /// sum K_-(u) (x0 - X) and sum K_+(u) (X - x0); both termwise >= 0
    mm: f64,
    mp: f64,
    im: f64,
    ip: f64,
    /// response sums sum K_{+/-}(u) q with q = Y - nu AX
    um: f64,
    up: f64,
    /// quadratic sums for the joint (nu, zeta) objective
    ym: f64,
    yp: f64,
    am: f64,
    ap: f64,
    yym: f64,
    yyp: f64,
    yam: f64,
    yap: f64,
    aam: f64,
    aap: f64,
    n_m: usize,
    n_p: usize,
    n_union: usize,
}

fn scan(traj: &Trajectory, cfg: &EstimatorConfig) -> Scan {
    let grid = &traj.grid;
    let n = grid.n_space;
    let cells = traj.window_cells();
    let inv_dt = 1.0 / grid.dt;
    let inv_dx2 = 1.0 / (grid.dx * grid.dx);
    let neumann = traj.model.domain.boundary == Boundary::Neumann;
    let nu = cfg.nu_known;
    // per-cell squared dispersion for the quadratic variations
    let disp2: Vec<f64> = cells
        .clone()
        .map(|k| traj.model.noise.multiplier_at(traj.y(k)).powi(2))
        .collect();

    let mut s = Scan::default();
    for i in 0..grid.n_time {
        let cur = traj.row(i);
        let nxt = traj.row(i + 1);
        for (k, d2) in cells.clone().zip(disp2.iter()) {
            let x = cur[k];
            let u = (x - cfg.x0) / cfg.h;
            if !(u.abs() < 1.0) || u.is_nan() {
                continue;
            }
            let km = cfg.kernels.k_minus(u);
            let kp = cfg.kernels.k_plus(u);
            if km <= 0.0 && kp <= 0.0 {
                continue;
            }
            let left = if k == 0 {
                if neumann { cur[0] } else { 0.0 }
            } else {
                cur[k - 1]
            };
            let right = if k == n - 1 {
                if neumann { cur[n - 1] } else { 0.0 }
            } else {
                cur[k + 1]
            };
            let ax = (left - 2.0 * x + right) * inv_dx2;
            let y_diff = (nxt[k] - x) * inv_dt;
            let q = y_diff - nu * ax;

            if km > 0.0 {
                s.n_m += 1;
                s.sm += km;
                s.mm += km * (cfg.x0 - x);
                s.im += d2 * km * km;
                s.um += km * q;
                s.ym += km * y_diff;
                s.am += km * ax;
                s.yym += km * y_diff * y_diff;
                s.yam += km * y_diff * ax;
                s.aam += km * ax * ax;
            }
            if kp > 0.0 {
                s.n_p += 1;
                s.sp += kp;
                s.mp += kp * (x - cfg.x0);
                s.ip += d2 * kp * kp;
                s.up += kp * q;
                s.yp += kp * y_diff;
                s.ap += kp * ax;
                s.yyp += kp * y_diff * y_diff;
                s.yap += kp * y_diff * ax;
                s.aap += kp * ax * ax;
            }
        }
    }
    // union count: rerunning the loop would double the cost, and the kernel
    // supports overlap only at u = 0 where both vanish for valid pairs, so
    // points counted on both sides are exactly those with km > 0 and kp > 0
    s.n_union = s.n_m + s.n_p - count_overlap(traj, cfg);
    s
}

fn count_overlap(traj: &Trajectory, cfg: &EstimatorConfig) -> usize {
    let cells = traj.window_cells();
    let mut overlap = 0;
    for i in 0..traj.grid.n_time {
        let cur = traj.row(i);
        for k in cells.clone() {
            let u = (cur[k] - cfg.x0) / cfg.h;
            if u.abs() < 1.0
                && cfg.kernels.k_minus(u) > 0.0
                && cfg.kernels.k_plus(u) > 0.0
            {
                overlap += 1;
            }
        }
    }
    overlap
}

fn weights_from_scan(s: &Scan, grid_weight: f64) -> Weights {
    let t_m1 = grid_weight * s.sm;
    let t_p1 = grid_weight * s.sp;
    let t_m2 = grid_weight * s.mm;
    let t_p2 = grid_weight * s.mp;
    Weights {
        t_m1,
        t_p1,
        t_m2,
        t_p2,
        j: t_m1 * t_p2 + t_p1 * t_m2,
        i_m: grid_weight * s.im,
        i_p: grid_weight * s.ip,
    }
}

/// Riemann-sum weights over the window: left-endpoint rule in time, midpoint
/// cells in space;
/// t_{m,p}1 = dt dx sum K_{-,+}(u), t_{m,p}2 = -+ dt dx sum K_{-,+}(u)(X - x0),
/// i_{m,p} = dt dx sum disp(y)^2 K_{-,+}(u)^2.
pub fn compute_weights(traj: &Trajectory, cfg: &EstimatorConfig) -> Weights {
    let s = scan(traj, cfg);
    weights_from_scan(&s, traj.grid.dt * traj.grid.dx)
}

/// The random kernel x -> (t_p2 K_-((x-x0)/h) + t_m2 K_+((x-x0)/h)) / j.
/// Its discrete Riemann sums normalize to one and kill the first moment
/// around x0 by construction.
pub fn random_kernel(
    weights: &Weights,
    kernels: &KernelPair,
    h: f64,
    x0: f64,
) -> Result<impl Fn(f64) -> f64 + Send + Sync> {
    if !(weights.j > 0.0) {
        return Err(Error::DegenerateWindow { x0 });
    }
    let (t_p2, t_m2, j) = (weights.t_p2, weights.t_m2, weights.j);
    let kernels = kernels.clone();
    assert!(h > 0.0, "bandwidth must be positive");
    Ok(move |x: f64| {
        let u = (x - x0) / h;
        (t_p2 * kernels.k_minus(u) + t_m2 * kernels.k_plus(u)) / j
    })
}

/// Central second difference (X[i][k-1] - 2 X[i][k] + X[i][k+1]) / dx^2 with
/// the boundary-condition ghost value (zero for Dirichlet, reflection for
/// Neumann) substituted at the edge cells. Panics when (i, k) is outside the
/// stored field.
pub fn discrete_generator(traj: &Trajectory, i: usize, k: usize) -> f64 {
    let n = traj.grid.n_space;
    assert!(i < traj.n_rows() && k < n, "index ({i}, {k}) out of range");
    let row = traj.row(i);
    let neumann = traj.model.domain.boundary == Boundary::Neumann;
    let left = if k == 0 {
        if neumann { row[0] } else { 0.0 }
    } else {
        row[k - 1]
    };
    let right = if k == n - 1 {
        if neumann { row[n - 1] } else { 0.0 }
    } else {
        row[k + 1]
    };
    (left - 2.0 * row[k] + right) / (traj.grid.dx * traj.grid.dx)
}

/// Central CI at level 1 - alpha_bar around a point estimate.
pub fn confidence_interval(f_hat: f64, std_error: f64, alpha_bar: f64) -> (f64, f64) {
    let q = normal_quantile(1.0 - alpha_bar / 2.0);
    (f_hat - q * std_error, f_hat + q * std_error)
}

/// The pointwise estimator: weighted least squares of the local increments
/// Y = (X_{t_{i+1}} - X_{t_i})/dt against the known drift term nu AX, under
/// the random kernel's weights. The standard error is the studentized CLT
/// scale sigma sqrt(t_p2^2 i_m + t_m2^2 i_p) / j, with sigma dropped in the
/// growing-window regime.
pub fn estimate(traj: &Trajectory, cfg: &EstimatorConfig) -> Result<EstimateReport> {
    let s = scan(traj, cfg);
    let gw = traj.grid.dt * traj.grid.dx;
    let w = weights_from_scan(&s, gw);
    if !(w.j > 0.0) {
        return Err(Error::DegenerateWindow { x0: cfg.x0 });
    }
    // numerator dt dx sum K_hat(X) q assembled from the side sums; the
    // denominator dt dx sum K_hat(X) is exactly 1 by the normalization
    // identity, so the ratio is the numerator itself
    let f_hat = (w.t_p2 * (gw * s.um) + w.t_m2 * (gw * s.up)) / w.j;
    let std_error = cfg.sigma_effective()
        * (w.t_p2 * w.t_p2 * w.i_m + w.t_m2 * w.t_m2 * w.i_p).sqrt()
        / w.j;
    let (ci_low, ci_high) = confidence_interval(f_hat, std_error, cfg.alpha_bar);
    let n_window_points = match (w.t_p2 > 0.0, w.t_m2 > 0.0) {
        (true, true) => s.n_union,
        (true, false) => s.n_m,
        (false, true) => s.n_p,
        (false, false) => 0,
    };
    Ok(EstimateReport {
        x0: cfg.x0,
        h: cfg.h,
        f_hat,
        std_error,
        ci_low,
        ci_high,
        test_statistic: None,
        weights: w,
        n_window_points,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct TestOutcome {
    pub statistic: f64,
    pub reject: bool,
}

/// Level-alpha_bar test of H0: f(x0) = zeta via the studentized statistic.
pub fn hypothesis_test(
    report: &EstimateReport,
    zeta: f64,
    alpha_bar: f64,
) -> Result<TestOutcome> {
    if !(report.std_error > 0.0) {
        return Err(Error::DegenerateWindow { x0: report.x0 });
    }
    assert!(alpha_bar > 0.0 && alpha_bar < 1.0, "alpha_bar must lie in (0, 1)");
    let statistic = (report.f_hat - zeta) / report.std_error;
    Ok(TestOutcome { statistic, reject: statistic.abs() > normal_quantile(1.0 - alpha_bar / 2.0) })
}

/// Rate-optimal bandwidth h = sigma^{2/(1+2 beta)}, balancing the bias
/// h^beta against the stochastic error sigma h^{-1/2}.
pub fn select_bandwidth(sigma: f64, beta: f64) -> f64 {
    assert!(sigma > 0.0, "sigma must be positive");
    assert!((1.0..=2.0).contains(&beta), "beta must lie in [1, 2]");
    sigma.powf(2.0 / (1.0 + 2.0 * beta))
}

/// Growing-window analogue h = gamma^{-1/(1+2 beta)}, balancing h^beta
/// against gamma^{-1/2} h^{-1/2}.
pub fn select_bandwidth_growing(gamma: f64, beta: f64) -> f64 {
    assert!(gamma > 0.0, "gamma must be positive");
    assert!((1.0..=2.0).contains(&beta), "beta must lie in [1, 2]");
    gamma.powf(-1.0 / (1.0 + 2.0 * beta))
}

#[derive(Debug, Clone, Copy)]
pub struct JointEstimate {
    pub nu_hat: f64,
    pub f_hat: f64,
    /// Set when the WLS objective does not vary over the bracket (e.g. AX
    /// vanishes on the window); nu_hat is then the bracket midpoint.
    pub objective_flat: bool,
}

/// Quadratic coefficients of the profiled WLS objective
/// O(nu) = min_zeta sum K_hat (Y - nu AX - zeta)^2 = c0 + c1 nu + c2 nu^2.
struct Profile {
    c0: f64,
    c1: f64,
    c2: f64,
}

impl Profile {
    fn eval(&self, nu: f64) -> f64 {
        self.c0 + nu * (self.c1 + nu * self.c2)
    }
}

fn profile_objective(s: &Scan, w: &Weights, gw: f64) -> Profile {
    // K_hat-weighted sums, assembled from the side sums
    let blend = |a: f64, b: f64| (w.t_p2 * (gw * a) + w.t_m2 * (gw * b)) / w.j;
    let sw = blend(s.sm, s.sp);
    let sy = blend(s.ym, s.yp);
    let sa = blend(s.am, s.ap);
    let syy = blend(s.yym, s.yyp);
    let sya = blend(s.yam, s.yap);
    let saa = blend(s.aam, s.aap);
    Profile {
        c0: syy - sy * sy / sw,
        c1: -2.0 * (sya - sy * sa / sw),
        c2: saa - sa * sa / sw,
    }
}

/// Joint estimation of (nu, f(x0)) by minimizing the WLS objective: the
/// inner zeta-minimum is the estimator at fixed nu, and the outer problem is
/// solved by golden-section search over [nu_lo, nu_hi].
pub fn joint_estimate(
    traj: &Trajectory,
    cfg: &EstimatorConfig,
    nu_lo: f64,
    nu_hi: f64,
) -> Result<JointEstimate> {
    if !(nu_lo > 0.0 && nu_hi > nu_lo) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < nu_lo < nu_hi, got [{nu_lo}, {nu_hi}]"
        )));
    }
    let s = scan(traj, cfg);
    let gw = traj.grid.dt * traj.grid.dx;
    let w = weights_from_scan(&s, gw);
    if !(w.j > 0.0) {
        return Err(Error::DegenerateWindow { x0: cfg.x0 });
    }
    let prof = profile_objective(&s, &w, gw);
    let f_at = |nu: f64| (w.t_p2 * (gw * (s.ym - nu * s.am)) + w.t_m2 * (gw * (s.yp - nu * s.ap))) / w.j;

    let mid = 0.5 * (nu_lo + nu_hi);
    let spread = [nu_lo, mid, nu_hi]
        .iter()
        .map(|&v| prof.eval(v))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| (lo.min(o), hi.max(o)));
    if spread.1 - spread.0 <= 1e-12 * (1.0 + prof.eval(mid).abs()) {
        return Ok(JointEstimate { nu_hat: mid, f_hat: f_at(mid), objective_flat: true });
    }

    // golden-section search
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (nu_lo, nu_hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (prof.eval(c), prof.eval(d));
    for _ in 0..200 {
        if b - a <= 1e-12 * (nu_hi - nu_lo) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = prof.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = prof.eval(d);
        }
    }
    let nu_hat = 0.5 * (a + b);

    // a minimizer pinned to an endpoint with the objective still falling
    // toward it means the bracket never contained the minimum
    let edge = 1e-6 * (nu_hi - nu_lo);
    if (nu_hat - nu_lo <= edge && prof.eval(nu_lo) <= prof.eval(nu_lo + edge))
        || (nu_hi - nu_hat <= edge && prof.eval(nu_hi) <= prof.eval(nu_hi - edge))
    {
        return Err(Error::BracketNoMinimum { lo: nu_lo, hi: nu_hi });
    }
    Ok(JointEstimate { nu_hat, f_hat: f_at(nu_hat), objective_flat: false })
}
