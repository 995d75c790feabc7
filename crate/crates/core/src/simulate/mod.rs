//! Trajectory generation for the semi-linear stochastic heat equation with a
//! semi-implicit Euler scheme: the Laplacian is treated implicitly (one
//! tridiagonal solve per step), reaction and noise explicitly.

mod noise;
mod tridiag;

pub(crate) use noise::NoiseSampler;

use crate::error::{Error, Result};
use crate::model::{Boundary, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use tridiag::TridiagSolver;

/// Uniform space-time grid: n_space interior cells at spacing
/// dx = |domain| / (n_space + 1), n_time steps of size dt = T / n_time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_space: usize,
    pub n_time: usize,
    pub dx: f64,
    pub dt: f64,
}

impl GridSpec {
    pub fn new(model: &ModelSpec, n_space: usize, n_time: usize) -> Result<Self> {
        if n_space < 3 {
            return Err(Error::InvalidGrid(format!("n_space = {n_space} must be at least 3")));
        }
        if n_time < 1 {
            return Err(Error::InvalidGrid("n_time must be at least 1".into()));
        }
        Ok(GridSpec {
            n_space,
            n_time,
            dx: model.domain.len() / (n_space + 1) as f64,
            dt: model.horizon / n_time as f64,
        })
    }

    /// The default mesh relation n_time = n_space^2 (diffusive scaling).
    pub fn with_default_time(model: &ModelSpec, n_space: usize) -> Result<Self> {
        GridSpec::new(model, n_space, n_space * n_space)
    }

    /// Errors unless dx and dt are the ones this model induces.
    pub(crate) fn check_consistent(&self, model: &ModelSpec) -> Result<()> {
        let dx = model.domain.len() / (self.n_space + 1) as f64;
        let dt = model.horizon / self.n_time as f64;
        if (self.dx - dx).abs() > 1e-9 * dx || (self.dt - dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidGrid(format!(
                "grid (dx = {}, dt = {}) does not match the model (dx = {dx}, dt = {dt})",
                self.dx, self.dt
            )));
        }
        Ok(())
    }
}

/// A realized space-time field X_{t_i}(y_k) stored row-major over
/// (n_time + 1) time slices of n_space cells.
#[derive(Debug, Clone)]
pub struct Trajectory {
    values: Vec<f64>,
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub seed: u64,
}

impl Trajectory {
    #[inline]
    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.grid.n_space + k]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.n_space;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn n_rows(&self) -> usize {
        self.grid.n_time + 1
    }

    /// Spatial cell centre y_k = left + (k+1) dx.
    #[inline]
    pub fn y(&self, k: usize) -> f64 {
        self.model.domain.left + (k + 1) as f64 * self.grid.dx
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.grid.dt
    }

    /// Index range of the cells inside the observation window.
    pub fn window_cells(&self) -> std::ops::Range<usize> {
        window_cells(&self.model, &self.grid)
    }

    /// Time index closest to t.
    pub fn time_index(&self, t: f64) -> usize {
        ((t / self.grid.dt).round() as usize).min(self.grid.n_time)
    }

    /// CSV export with header `t,y,value`, row-major over (time, space).
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,y,value")?;
        for i in 0..self.n_rows() {
            let t = self.time(i);
            for k in 0..self.grid.n_space {
                writeln!(w, "{t},{},{}", self.y(k), self.value(i, k))?;
            }
        }
        Ok(())
    }

    /// Binary dump: two little-endian u64 (row count n_time + 1, n_space)
    /// followed by the row-major matrix as little-endian f64.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&(self.n_rows() as u64).to_le_bytes())?;
        w.write_all(&(self.grid.n_space as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a binary dump back against a known (model, grid) pair; the file
    /// stores no metadata beyond the matrix dimensions.
    pub fn read_binary<R: Read>(r: &mut R, model: ModelSpec, grid: GridSpec) -> Result<Self> {
        let mut u = [0u8; 8];
        r.read_exact(&mut u)?;
        let rows = u64::from_le_bytes(u) as usize;
        r.read_exact(&mut u)?;
        let cols = u64::from_le_bytes(u) as usize;
        if rows != grid.n_time + 1 || cols != grid.n_space {
            return Err(Error::InvalidGrid(format!(
                "stored trajectory is {rows} x {cols}, grid wants {} x {}",
                grid.n_time + 1,
                grid.n_space
            )));
        }
        let mut values = vec![0.0; rows * cols];
        let mut buf = [0u8; 8];
        for v in values.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        Trajectory::from_values(model, grid, values)
    }

    /// Wraps externally produced values (row-major, (n_time + 1) x n_space)
    /// as a trajectory; used for stored data and synthetic fields.
    pub fn from_values(model: ModelSpec, grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.check_consistent(&model)?;
        let want = (grid.n_time + 1) * grid.n_space;
        if values.len() != want {
            return Err(Error::InvalidGrid(format!(
                "value buffer holds {} entries, grid wants {want}",
                values.len()
            )));
        }
        Ok(Trajectory { values, grid, model, seed: 0 })
    }

    /// Synthetic field sampled from a closure (t, y) -> value.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(
        model: ModelSpec,
        grid: GridSpec,
        g: F,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity((grid.n_time + 1) * grid.n_space);
        for i in 0..=grid.n_time {
            let t = i as f64 * grid.dt;
            for k in 0..grid.n_space {
                values.push(g(t, model.domain.left + (k + 1) as f64 * grid.dx));
            }
        }
        Trajectory::from_values(model, grid, values)
    }
}

/// Cells y_k of the grid lying inside the observation window, as an index
/// range. Window edges sitting exactly on a cell are included.
pub(crate) fn window_cells(model: &ModelSpec, grid: &GridSpec) -> std::ops::Range<usize> {
    let d = &model.domain;
    let lo = ((d.gamma_left - d.left) / grid.dx - 1.0 - 1e-9).ceil().max(0.0) as usize;
    let hi = ((d.gamma_right - d.left) / grid.dx - 1.0 + 1e-9).floor();
    if hi < lo as f64 {
        return lo..lo;
    }
    let hi = (hi as usize).min(grid.n_space - 1);
    lo..hi + 1
}

/// Runs the semi-implicit Euler scheme: each step solves
/// (I - nu dt L) X^{i+1} = X^i + dt f(X^i) + sigma dW^i
/// with L the second-difference matrix under the model's boundary condition.
/// Deterministic in (model, grid, seed).
pub fn simulate(model: &ModelSpec, grid: &GridSpec, seed: u64) -> Result<Trajectory> {
    grid.check_consistent(model)?;
    let n = grid.n_space;
    let off = model.nu * grid.dt / (grid.dx * grid.dx);

    let mut diag = vec![1.0 + 2.0 * off; n];
    if model.domain.boundary == Boundary::Neumann {
        // reflecting ghost cells: constants stay in the kernel of L
        diag[0] = 1.0 + off;
        diag[n - 1] = 1.0 + off;
    }
    let band = vec![-off; n - 1];
    let solver = TridiagSolver::new(&band, &diag, &band)?;

    let mut x: Vec<f64> = (0..n)
        .map(|k| model.initial_at(model.domain.left + (k + 1) as f64 * grid.dx))
        .collect();
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidModel("initial condition is not finite on the grid".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = if model.sigma > 0.0 {
        Some(NoiseSampler::new(model, grid)?)
    } else {
        None
    };
    let mut dw = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    let mut values = Vec::with_capacity((grid.n_time + 1) * n);
    values.extend_from_slice(&x);

    for step in 1..=grid.n_time {
        if let Some(s) = sampler.as_mut() {
            s.fill_increment(&mut rng, &mut dw);
            for k in 0..n {
                rhs[k] = x[k] + grid.dt * model.reaction.eval(x[k]) + model.sigma * dw[k];
            }
        } else {
            for k in 0..n {
                rhs[k] = x[k] + grid.dt * model.reaction.eval(x[k]);
            }
        }
        solver.solve_in_place(&mut rhs);
        std::mem::swap(&mut x, &mut rhs);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::BlowUp { step });
        }
        values.extend_from_slice(&x);
    }

    Ok(Trajectory { values, grid: *grid, model: model.clone(), seed })
}

/// One discrete noise increment for the model's covariance. Convenience
/// wrapper; simulation holds a sampler instead of rebuilding the
/// factorization per step.
pub fn noise_increment<R: Rng + ?Sized>(
    model: &ModelSpec,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut sampler = NoiseSampler::new(model, grid)?;
    let mut out = vec![0.0; grid.n_space];
    sampler.fill_increment(rng, &mut out);
    Ok(out)
}

/// Exact marginal variance of the linear (f = 0) equation on the unit
/// interval with Dirichlet conditions and white noise, by the truncated
/// eigen-expansion:
/// sigma^2 sum_k 2 sin^2(k pi y) (1 - exp(-2 nu pi^2 k^2 t)) / (2 nu pi^2 k^2).
pub fn linear_variance_exact(nu: f64, sigma: f64, t: f64, y: f64, n_modes: usize) -> f64 {
    assert!(nu > 0.0 && t >= 0.0, "need nu > 0 and t >= 0");
    let mut acc = 0.0;
    for k in 1..=n_modes {
        let lam = nu * (std::f64::consts::PI * k as f64).powi(2);
        let s = (k as f64 * std::f64::consts::PI * y).sin();
        acc += 2.0 * s * s * (1.0 - (-2.0 * lam * t).exp()) / (2.0 * lam);
    }
    sigma * sigma * acc
}

/// Moment comparison for the diffusive rescaling: X_t(nu^{1/2} y) has the law
/// of the unit-diffusivity equation on the stretched domain with noise level
/// nu^{-1/4} sigma. Both fields are evaluated at matched grid points (the
/// companion grid is the stretched image of the primary one, so no
/// interpolation error enters).
#[derive(Debug, Clone, Copy)]
pub struct ComparisonReport {
    pub n_points: usize,
    pub mean_primary: f64,
    pub mean_companion: f64,
    pub mean_diff: f64,
    pub second_primary: f64,
    pub second_companion: f64,
    pub second_diff: f64,
}

/// Simulates the rescaled companion model and compares first and second
/// empirical moments over the window cells at the final time.
pub fn rescale_check(traj: &Trajectory) -> Result<ComparisonReport> {
    use crate::model::{Domain, NoiseKind, NoiseSpec};

    let model = &traj.model;
    if model.noise.kind() != NoiseKind::White || model.domain.boundary != Boundary::Dirichlet {
        return Err(Error::InvalidModel(
            "rescale check is defined for white noise with Dirichlet conditions".into(),
        ));
    }
    let lam = model.nu.sqrt();
    let d = &model.domain;
    let companion_domain = Domain::new(
        d.left / lam,
        d.right / lam,
        Boundary::Dirichlet,
        d.gamma_left / lam,
        d.gamma_right / lam,
    )?;
    let initial = model.clone();
    let companion = ModelSpec::new(
        companion_domain,
        1.0,
        NoiseSpec::white(),
        model.reaction.clone(),
        model.horizon,
    )?
    .with_sigma(model.nu.powf(-0.25) * model.sigma)
    .with_initial(move |y| initial.initial_at(lam * y));

    let companion_grid = GridSpec::new(&companion, traj.grid.n_space, traj.grid.n_time)?;
    let companion_traj = simulate(
        &companion,
        &companion_grid,
        traj.seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
    )?;

    let cells = traj.window_cells();
    let i = traj.grid.n_time;
    let n_points = cells.len();
    assert!(n_points > 0, "observation window contains no cells");
    let (mut ma, mut mb, mut sa, mut sb) = (0.0, 0.0, 0.0, 0.0);
    for k in cells {
        let a = traj.value(i, k);
        let b = companion_traj.value(i, k);
        ma += a;
        mb += b;
        sa += a * a;
        sb += b * b;
    }
    let nf = n_points as f64;
    Ok(ComparisonReport {
        n_points,
        mean_primary: ma / nf,
        mean_companion: mb / nf,
        mean_diff: ma / nf - mb / nf,
        second_primary: sa / nf,
        second_companion: sb / nf,
        second_diff: sa / nf - sb / nf,
    })
}
