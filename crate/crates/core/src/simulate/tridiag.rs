//! Thomas algorithm with a precomputed forward sweep: the implicit-step
//! matrix never changes across time steps, so factor once, solve many.

use crate::error::{Error, Result};

pub(crate) struct TridiagSolver {
    lower: Vec<f64>,   // lower[k] multiplies x[k-1] in row k, k >= 1
    c_prime: Vec<f64>, // scaled upper diagonal from the forward sweep
    m: Vec<f64>,       // reciprocal pivots
}

impl TridiagSolver {
    /// Factors the tridiagonal matrix with diagonals (lower, diag, upper),
    /// where lower/upper have length n-1.
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        assert!(n >= 1 && lower.len() == n - 1 && upper.len() == n - 1);
        let mut c_prime = vec![0.0; n];
        let mut m = vec![0.0; n];
        let mut denom = diag[0];
        for k in 0..n {
            if k > 0 {
                denom = diag[k] - lower[k - 1] * c_prime[k - 1];
            }
            if denom.abs() <= 1e-12 * (1.0 + diag[k].abs()) {
                return Err(Error::SingularSystem { row: k });
            }
            m[k] = 1.0 / denom;
            if k + 1 < n {
                c_prime[k] = upper[k] * m[k];
            }
        }
        Ok(TridiagSolver { lower: lower.to_vec(), c_prime, m })
    }

    /// Solves in place: on entry `d` is the right-hand side, on exit the solution.
    pub fn solve_in_place(&self, d: &mut [f64]) {
        let n = self.m.len();
        debug_assert_eq!(d.len(), n);
        d[0] *= self.m[0];
        for k in 1..n {
            d[k] = (d[k] - self.lower[k - 1] * d[k - 1]) * self.m[k];
        }
        for k in (0..n - 1).rev() {
            d[k] -= self.c_prime[k] * d[k + 1];
        }
    }
}
