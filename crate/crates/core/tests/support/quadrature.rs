//! Gauss–Hermite quadrature against the standard normal weight.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights with `Σ wᵢ f(xᵢ) ≈ E[f(Z)]`, `Z ~ N(0, 1)`.
///
/// Golub–Welsch on the Jacobi matrix of the probabilists' Hermite
/// polynomials.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `ln E[exp(log_f(Z))]` for `Z ~ N(0, I_k)` on the `n^k` tensor grid.
pub fn log_expect_normal(k: usize, n: usize, mut log_f: impl FnMut(&[f64]) -> f64) -> f64 {
    let (nodes, weights) = gauss_hermite(n);
    let mut idx = vec![0usize; k];
    let mut z = vec![0.0; k];
    let mut terms = Vec::with_capacity(n.pow(k as u32));
    loop {
        let mut lw = 0.0;
        for (j, &i) in idx.iter().enumerate() {
            z[j] = nodes[i];
            lw += weights[i].ln();
        }
        terms.push(lw + log_f(&z));
        let mut j = 0;
        loop {
            if j == k {
                let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                return max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
            }
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}
