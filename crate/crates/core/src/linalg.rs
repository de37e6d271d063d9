//! Small dense linear algebra on row-major square matrices.
//!
//! Only what the Gaussian models and the Kalman oracle need: a Cholesky
//! factor with triangular solves, quadratic forms and the Gaussian
//! log-density built on them.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `ln(2π)`.
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors the symmetric positive definite `n × n` matrix `a`.
    ///
    /// Only the lower triangle of `a` is read.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch {
                what: "matrix",
                expected: n * n,
                found: a.len(),
            });
        }
        let mut lower = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[i * n + j];
                for k in 0..j {
                    sum -= lower[i * n + k] * lower[j * n + k];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite);
                    }
                    lower[i * n + i] = libm::sqrt(sum);
                } else {
                    lower[i * n + j] = sum / lower[j * n + j];
                }
            }
        }
        Ok(Self { n, lower })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Row-major lower factor.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// `ln det A = 2 Σ ln Lᵢᵢ`.
    pub fn log_det(&self) -> f64 {
        (0..self.n)
            .map(|i| libm::log(self.lower[i * self.n + i]))
            .sum::<f64>()
            * 2.0
    }

    /// Solves `L z = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let mut sum = b[i];
            for (l, z) in row.iter().zip(b.iter()) {
                sum -= l * z;
            }
            b[i] = sum / self.lower[i * n + i];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut sum = b[i];
            for k in i + 1..n {
                sum -= self.lower[k * n + i] * b[k];
            }
            b[i] = sum / self.lower[i * n + i];
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.solve_lower_in_place(b);
        self.solve_upper_in_place(b);
    }

    /// `rᵀ A⁻¹ r`, using `r` as scratch.
    pub fn quad_form_in_place(&self, r: &mut [f64]) -> f64 {
        self.solve_lower_in_place(r);
        r.iter().map(|z| z * z).sum()
    }

    /// `out = L z`.
    pub fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            out[i] = self.lower[i * n..i * n + i + 1]
                .iter()
                .zip(z)
                .map(|(l, v)| l * v)
                .sum();
        }
    }
}

/// Log-density of `N(residual | 0, A)` given the factor of `A` and its log
/// determinant. `residual` is overwritten.
pub fn gaussian_log_density(chol: &Cholesky, log_det: f64, residual: &mut [f64]) -> f64 {
    let quad = chol.quad_form_in_place(residual);
    -0.5 * (chol.dim() as f64 * LN_2PI + log_det + quad)
}

/// Symmetrizes a square matrix in place as `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = avg;
            a[j * n + i] = avg;
        }
    }
}

pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}
