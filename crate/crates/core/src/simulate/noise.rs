//! Discrete noise increments for the three covariance models. A sampler is
//! built once per simulation: it holds the precomputed cell scales (white),
//! Cholesky factor (Riesz) or eigenbasis (spectral).

use crate::error::{Error, Result};
use crate::model::{Boundary, ModelSpec, NoiseKind};
use crate::simulate::GridSpec;
use rand::Rng;
use rand_distr::StandardNormal;

pub(crate) enum SamplerKind {
    /// out[j] = scale[j] * xi_j with scale = sqrt(dt/dx) * Sigma(y_j)
    White { scale: Vec<f64> },
    /// out = sqrt(dt) * C xi with C the Cholesky factor of the covariance
    Riesz { chol: Vec<f64>, sqrt_dt: f64 },
    /// out[j] = sqrt(dt) * sum_k coeffs[k] xi_k basis[k][j]
    Spectral { coeffs: Vec<f64>, basis: Vec<f64>, sqrt_dt: f64 },
}

pub(crate) struct NoiseSampler {
    kind: SamplerKind,
    n: usize,
    scratch: Vec<f64>,
}

impl NoiseSampler {
    pub fn new(model: &ModelSpec, grid: &GridSpec) -> Result<Self> {
        let n = grid.n_space;
        let kind = match model.noise.kind() {
            NoiseKind::White => {
                let base = (grid.dt / grid.dx).sqrt();
                let mut scale = Vec::with_capacity(n);
                let bounds = model.noise.multiplier_bounds();
                for k in 0..n {
                    let y = model.domain.left + (k + 1) as f64 * grid.dx;
                    let s = model.noise.multiplier_at(y);
                    if let Some((lo, hi)) = bounds {
                        if !(s >= lo - 1e-12 && s <= hi + 1e-12) {
                            return Err(Error::InvalidModel(format!(
                                "dispersion multiplier at y = {y} is {s}, outside its claimed bounds [{lo}, {hi}]"
                            )));
                        }
                    }
                    scale.push(base * s);
                }
                SamplerKind::White { scale }
            }
            NoiseKind::Riesz { rho } => {
                let mut cov = riesz_covariance(rho, grid);
                if cholesky_in_place(&mut cov, n).is_err() {
                    // PSD guard: re-build and jitter the diagonal once
                    cov = riesz_covariance(rho, grid);
                    let trace: f64 = (0..n).map(|j| cov[j * n + j]).sum();
                    let jitter = 1e-10 * trace / n as f64;
                    for j in 0..n {
                        cov[j * n + j] += jitter;
                    }
                    cholesky_in_place(&mut cov, n).map_err(|row| {
                        Error::Covariance(format!(
                            "Riesz covariance not positive definite at pivot {row} even after jitter"
                        ))
                    })?;
                }
                SamplerKind::Riesz { chol: cov, sqrt_dt: grid.dt.sqrt() }
            }
            NoiseKind::Spectral { rho1: _, rho2 } => {
                let coeffs: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-rho2)).collect();
                SamplerKind::Spectral {
                    coeffs,
                    basis: eigenbasis(model, grid),
                    sqrt_dt: grid.dt.sqrt(),
                }
            }
        };
        Ok(NoiseSampler { kind, n, scratch: vec![0.0; n] })
    }

    pub fn fill_increment<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        match &self.kind {
            SamplerKind::White { scale } => {
                for (o, s) in out.iter_mut().zip(scale) {
                    let xi: f64 = rng.sample(StandardNormal);
                    *o = s * xi;
                }
            }
            SamplerKind::Riesz { chol, sqrt_dt } => {
                for z in self.scratch.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
                let n = self.n;
                for j in 0..n {
                    let row = &chol[j * n..j * n + j + 1];
                    let mut acc = 0.0;
                    for (c, z) in row.iter().zip(&self.scratch) {
                        acc += c * z;
                    }
                    out[j] = sqrt_dt * acc;
                }
            }
            SamplerKind::Spectral { coeffs, basis, sqrt_dt } => {
                out.fill(0.0);
                let n = self.n;
                for (k, c) in coeffs.iter().enumerate() {
                    let xi: f64 = rng.sample(StandardNormal);
                    let w = sqrt_dt * c * xi;
                    for (o, b) in out.iter_mut().zip(&basis[k * n..(k + 1) * n]) {
                        *o += w * b;
                    }
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn kind_mut(&mut self) -> &mut SamplerKind {
        &mut self.kind
    }
}

/// Covariance [chi(y_j - y_k) dx] with chi(x) = |x|^{-rho}; the singular
/// diagonal is replaced by the cell-midpoint value chi(dx/2).
fn riesz_covariance(rho: f64, grid: &GridSpec) -> Vec<f64> {
    let n = grid.n_space;
    let dx = grid.dx;
    let mut cov = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            let r = if j == k { dx / 2.0 } else { (j as f64 - k as f64).abs() * dx };
            cov[j * n + k] = r.powf(-rho) * dx;
        }
    }
    cov
}

/// In-place lower-triangular Cholesky; Err carries the failing pivot row.
fn cholesky_in_place(a: &mut [f64], n: usize) -> std::result::Result<(), usize> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 {
            return Err(j);
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// L2-normalized Laplacian eigenfunctions sampled on the grid: Dirichlet
/// sines (exactly orthonormal in the discrete inner product dx * sum) or
/// Neumann cosines, modes 1..n_space.
fn eigenbasis(model: &ModelSpec, grid: &GridSpec) -> Vec<f64> {
    let n = grid.n_space;
    let len = model.domain.len();
    let amp = (2.0 / len).sqrt();
    let mut basis = vec![0.0; n * n];
    for k in 1..=n {
        for j in 0..n {
            let rel = (j + 1) as f64 * grid.dx / len;
            basis[(k - 1) * n + j] = match model.domain.boundary {
                Boundary::Dirichlet => amp * (k as f64 * std::f64::consts::PI * rel).sin(),
                Boundary::Neumann => amp * (k as f64 * std::f64::consts::PI * rel).cos(),
            };
        }
    }
    basis
}
