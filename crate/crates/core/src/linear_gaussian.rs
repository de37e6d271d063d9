//! Random-walk state with correlated Gaussian observations.
//!
//! `x₂ = x₁ + v₂`, `v₂ ~ N(0, I)`, `y₂ ~ N(x₂, Q)`. The observation
//! covariance is either equicorrelated (unit variances, constant
//! correlation ρ) or block-diagonal with equicorrelated blocks. Both have a
//! closed-form spectrum, and the partial likelihoods of the coordinate
//! filter are Gaussian in closed form.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_finite, check_len};
use crate::linalg::{gaussian_log_density, identity, symmetrize, Cholesky};
use crate::model::{
    checked_log_density, NoisePrefix, Observation, PartialEvaluator, StateSpaceModel, StateVector,
};
use crate::rng::SeedSpec;
use crate::{Error, Result};

/// Unit-diagonal covariance with every off-diagonal entry equal to `rho`.
///
/// Its eigenvalues are `1 − ρ` with multiplicity `D − 1` and `(D − 1)ρ + 1`
/// once.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedCovariance {
    dim: usize,
    rho: f64,
    matrix: Vec<f64>,
}

impl CorrelatedCovariance {
    /// `rho` must lie in `[0, 1)`; `rho = 1` is singular.
    pub fn new(dim: usize, rho: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1"));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidConfig("correlation must lie in [0, 1)"));
        }
        let mut matrix = vec![rho; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        Ok(Self { dim, rho, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Row-major `D × D` matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// Closed-form eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev = vec![1.0 - self.rho; self.dim - 1];
        ev.push(self.largest_eigenvalue());
        ev
    }

    /// `(D − 1)ρ + 1`, the eigenvalue along the all-ones direction.
    pub fn largest_eigenvalue(&self) -> f64 {
        (self.dim as f64 - 1.0) * self.rho + 1.0
    }

    pub fn log_det(&self) -> f64 {
        (self.dim as f64 - 1.0) * libm::log1p(-self.rho) + libm::log(self.largest_eigenvalue())
    }

    pub fn det(&self) -> f64 {
        libm::exp(self.log_det())
    }
}

/// A factored observation covariance with its log-determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationCovariance {
    dim: usize,
    matrix: Vec<f64>,
    chol: Cholesky,
    log_det: f64,
}

impl ObservationCovariance {
    /// Equicorrelated covariance; log-determinant from the closed form.
    pub fn equicorrelated(cov: &CorrelatedCovariance) -> Result<Self> {
        Self::block_diagonal(core::slice::from_ref(cov))
    }

    /// Block-diagonal covariance with zero cross-block entries.
    pub fn block_diagonal(blocks: &[CorrelatedCovariance]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one covariance block is required",
            ));
        }
        let dim: usize = blocks.iter().map(CorrelatedCovariance::dim).sum();
        let mut matrix = vec![0.0; dim * dim];
        let mut offset = 0;
        for b in blocks {
            let m = b.matrix();
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    matrix[(offset + i) * dim + offset + j] = m[i * b.dim() + j];
                }
            }
            offset += b.dim();
        }
        let chol = Cholesky::factor(&matrix, dim)?;
        let log_det = blocks.iter().map(CorrelatedCovariance::log_det).sum();
        Ok(Self {
            dim,
            matrix,
            chol,
            log_det,
        })
    }

    /// Arbitrary symmetric positive definite covariance; log-determinant
    /// from the Cholesky factor.
    pub fn general(matrix: Vec<f64>, dim: usize) -> Result<Self> {
        let chol = Cholesky::factor(&matrix, dim)?;
        let log_det = chol.log_det();
        Ok(Self {
            dim,
            matrix,
            chol,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    fn log_density(&self, y: &[f64], mean: &[f64]) -> f64 {
        let mut r: Vec<f64> = y.iter().zip(mean).map(|(a, b)| a - b).collect();
        gaussian_log_density(&self.chol, self.log_det, &mut r)
    }
}

/// `x₂ = x₁ + v₂` observed through `N(y₂ | x₂, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianModel {
    cov: ObservationCovariance,
}

impl LinearGaussianModel {
    pub fn new(cov: ObservationCovariance) -> Self {
        Self { cov }
    }

    /// Model with equicorrelated `Q(dim, rho)`.
    pub fn equicorrelated(dim: usize, rho: f64) -> Result<Self> {
        let q = CorrelatedCovariance::new(dim, rho)?;
        Ok(Self::new(ObservationCovariance::equicorrelated(&q)?))
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    pub fn covariance(&self) -> &ObservationCovariance {
        &self.cov
    }

    /// Draws a ground-truth trajectory `x₁..x_T` and its observations,
    /// starting from `x0`.
    ///
    /// Process noise for step `t` comes from `seed/t/0`, observation noise
    /// from `seed/t/1`.
    pub fn simulate(
        &self,
        steps: usize,
        x0: &StateVector,
        seed: &SeedSpec,
    ) -> Result<(Vec<StateVector>, Vec<Observation>)> {
        let d = self.dim();
        check_len("initial state", d, x0.len())?;
        check_finite("initial state", x0)?;
        if steps == 0 {
            return Err(Error::InvalidConfig("simulation needs at least one step"));
        }
        let mut states = Vec::with_capacity(steps);
        let mut observations = Vec::with_capacity(steps);
        let mut x = x0.to_vec();
        let mut v = vec![0.0; d];
        let mut z = vec![0.0; d];
        let mut w = vec![0.0; d];
        for t in 1..=steps as u64 {
            let step = seed.child(t);
            step.child(0).fill_standard_normal(&mut v);
            let prev = x.clone();
            self.propagate_into(&prev, &v, &mut x);
            step.child(1).fill_standard_normal(&mut z);
            self.cov.chol.mul_lower(&z, &mut w);
            let y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
            states.push(StateVector(x.clone()));
            observations.push(Observation(y));
        }
        Ok((states, observations))
    }

    /// `ln N(y | x_prev + ν_pad, Q + E)` where `E` has unit variance on the
    /// coordinates the prefix has not filled yet.
    pub fn exact_partial_loglik(
        &self,
        y: &Observation,
        x_prev: &StateVector,
        prefix: &NoisePrefix,
    ) -> Result<f64> {
        let d = self.dim();
        check_len("observation", d, y.len())?;
        check_len("state", d, x_prev.len())?;
        check_len("noise prefix", d, prefix.dim())?;
        check_finite("observation", y)?;
        check_finite("state", x_prev)?;
        let eval = ExactPartial::new(self, y, prefix.coords())?;
        checked_log_density(eval.log_partial(x_prev, prefix.padded()))
    }
}

impl StateSpaceModel for LinearGaussianModel {
    fn state_dim(&self) -> usize {
        self.dim()
    }

    fn obs_dim(&self) -> usize {
        self.dim()
    }

    fn propagate_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(x).zip(v) {
            *o = a + b;
        }
    }

    fn log_likelihood(&self, y: &[f64], x: &[f64]) -> f64 {
        self.cov.log_density(y, x)
    }

    fn exact_partial<'a>(
        &'a self,
        y: &'a [f64],
        filled: &[usize],
    ) -> Option<Box<dyn PartialEvaluator + 'a>> {
        ExactPartial::new(self, y, filled)
            .ok()
            .map(|e| Box::new(e) as Box<dyn PartialEvaluator + 'a>)
    }
}

/// Closed-form marginal over the unfilled noise coordinates.
struct ExactPartial<'a> {
    model: &'a LinearGaussianModel,
    y: &'a [f64],
    /// `None` once every coordinate is filled: the marginal is then the
    /// likelihood itself and is evaluated through the model.
    inflated: Option<(Cholesky, f64)>,
}

impl<'a> ExactPartial<'a> {
    fn new(model: &'a LinearGaussianModel, y: &'a [f64], filled: &[usize]) -> Result<Self> {
        let d = model.dim();
        let mut is_filled = vec![false; d];
        for &c in filled {
            if c >= d || is_filled[c] {
                return Err(Error::InvalidConfig(
                    "filled coordinates must be distinct and in range",
                ));
            }
            is_filled[c] = true;
        }
        let inflated = if filled.len() == d {
            None
        } else {
            let mut m = model.cov.matrix.clone();
            for (i, f) in is_filled.iter().enumerate() {
                if !f {
                    m[i * d + i] += 1.0;
                }
            }
            let chol = Cholesky::factor(&m, d)?;
            let log_det = chol.log_det();
            Some((chol, log_det))
        };
        Ok(Self { model, y, inflated })
    }
}

impl PartialEvaluator for ExactPartial<'_> {
    fn log_partial(&self, x_prev: &[f64], padded_noise: &[f64]) -> f64 {
        let mut mean = vec![0.0; self.model.dim()];
        self.model.propagate_into(x_prev, padded_noise, &mut mean);
        match &self.inflated {
            None => self.model.log_likelihood(self.y, &mean),
            Some((chol, log_det)) => {
                let mut r: Vec<f64> = self.y.iter().zip(&mean).map(|(a, b)| a - b).collect();
                gaussian_log_density(chol, *log_det, &mut r)
            }
        }
    }
}

/// Gaussian belief of the Kalman filter.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanBelief {
    pub mean: Vec<f64>,
    /// Row-major `D × D`.
    pub covariance: Vec<f64>,
}

impl KalmanBelief {
    /// `N(mean, I)`.
    pub fn isotropic(mean: Vec<f64>) -> Self {
        let d = mean.len();
        Self {
            mean,
            covariance: identity(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Random-walk prediction: covariance grows by `I`.
    pub fn predict(&self) -> Self {
        let d = self.dim();
        let mut covariance = self.covariance.clone();
        for i in 0..d {
            covariance[i * d + i] += 1.0;
        }
        Self {
            mean: self.mean.clone(),
            covariance,
        }
    }

    /// Conditions on `y ~ N(x, Q)`.
    pub fn update(&self, y: &Observation, model: &LinearGaussianModel) -> Result<Self> {
        let d = self.dim();
        check_len("observation", d, y.len())?;
        check_len("belief", model.dim(), d)?;
        check_finite("observation", y)?;
        let p = &self.covariance;
        let mut s = p.clone();
        for (a, q) in s.iter_mut().zip(model.cov.matrix()) {
            *a += q;
        }
        let chol = Cholesky::factor(&s, d)?;

        let mut innovation: Vec<f64> = y.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        chol.solve_in_place(&mut innovation);
        let mean = (0..d)
            .map(|i| self.mean[i] + (0..d).map(|k| p[i * d + k] * innovation[k]).sum::<f64>())
            .collect();

        // S⁻¹ P, one column at a time.
        let mut s_inv_p = vec![0.0; d * d];
        let mut col = vec![0.0; d];
        for j in 0..d {
            for i in 0..d {
                col[i] = p[i * d + j];
            }
            chol.solve_in_place(&mut col);
            for i in 0..d {
                s_inv_p[i * d + j] = col[i];
            }
        }
        let mut covariance = p.clone();
        for i in 0..d {
            for j in 0..d {
                let gain: f64 = (0..d).map(|k| p[i * d + k] * s_inv_p[k * d + j]).sum();
                covariance[i * d + j] -= gain;
            }
        }
        symmetrize(&mut covariance, d);
        Ok(Self { mean, covariance })
    }

    /// Predict, then update with `y`.
    pub fn step(&self, y: &Observation, model: &LinearGaussianModel) -> Result<Self> {
        self.predict().update(y, model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::LN_2PI;
    use crate::model::log_likelihood;

    #[test]
    fn identity_at_zero_correlation() {
        let q = CorrelatedCovariance::new(2, 0.0).unwrap();
        assert_eq!(q.matrix(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(q.eigenvalues(), vec![1.0, 1.0]);
    }

    #[test]
    fn closed_form_spectrum() {
        let q = CorrelatedCovariance::new(3, 0.4).unwrap();
        let ev = q.eigenvalues();
        assert!((ev[0] - 0.6).abs() < 1e-15 && (ev[1] - 0.6).abs() < 1e-15);
        assert!((ev[2] - 1.8).abs() < 1e-15);
        let q5 = CorrelatedCovariance::new(5, 0.4).unwrap();
        assert!((q5.det() - 0.336_96).abs() < 1e-12);
    }

    #[test]
    fn closed_form_log_det_matches_cholesky() {
        for d in [1, 2, 7, 30] {
            for rho in [0.0, 0.35, 0.9] {
                let q = CorrelatedCovariance::new(d, rho).unwrap();
                let chol = Cholesky::factor(q.matrix(), d).unwrap();
                assert!((q.log_det() - chol.log_det()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_singular_and_negative_correlation() {
        assert!(CorrelatedCovariance::new(3, 1.0).is_err());
        assert!(CorrelatedCovariance::new(3, -0.1).is_err());
        assert!(CorrelatedCovariance::new(0, 0.1).is_err());
    }

    #[test]
    fn log_normalizer_at_mode() {
        let m = LinearGaussianModel::equicorrelated(3, 0.4).unwrap();
        let y: Observation = vec![0.3, -1.0, 2.0].into();
        let x: StateVector = y.to_vec().into();
        let v = log_likelihood(&m, &y, &x).unwrap();
        let expected = -0.5 * (3.0 * LN_2PI + libm::log(0.648));
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn exact_partial_without_prefix_at_zero_correlation() {
        let m = LinearGaussianModel::equicorrelated(2, 0.0).unwrap();
        let y: Observation = vec![1.0, -0.5].into();
        let x: StateVector = vec![0.2, 0.1].into();
        let got = m
            .exact_partial_loglik(&y, &x, &NoisePrefix::empty(2))
            .unwrap();
        // N(y | x, 2I)
        let q = 0.8 * 0.8 + 0.6 * 0.6;
        let expected = -0.5 * (2.0 * LN_2PI + 2.0 * libm::log(2.0) + q / 2.0);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn exact_and_dirac_identical_when_complete() {
        let m = LinearGaussianModel::equicorrelated(3, 0.6).unwrap();
        let y: Observation = vec![0.1, 0.9, -0.4].into();
        let x: StateVector = vec![1.0, -1.0, 0.5].into();
        let mut prefix = NoisePrefix::empty(3);
        for (c, v) in [(1, 0.3), (0, -0.2), (2, 1.1)] {
            prefix.push(c, v).unwrap();
        }
        let exact = m.exact_partial_loglik(&y, &x, &prefix).unwrap();
        let dirac = crate::model::dirac_partial_loglik(&m, &y, &x, &prefix).unwrap();
        assert_eq!(exact.to_bits(), dirac.to_bits());
    }

    #[test]
    fn simulation_is_deterministic() {
        let m = LinearGaussianModel::equicorrelated(3, 0.5).unwrap();
        let seed = SeedSpec::with_path(1, &[2]);
        let a = m.simulate(20, &StateVector::zeros(3), &seed).unwrap();
        let b = m.simulate(20, &StateVector::zeros(3), &seed).unwrap();
        assert_eq!(a, b);
    }

    fn residual_correlation(rho: f64) -> f64 {
        let m = LinearGaussianModel::equicorrelated(2, rho).unwrap();
        let (xs, ys) = m
            .simulate(10_000, &StateVector::zeros(2), &SeedSpec::new(77))
            .unwrap();
        let r: Vec<(f64, f64)> = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y[0] - x[0], y[1] - x[1]))
            .collect();
        let n = r.len() as f64;
        let (ma, mb) = r
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (a, b) in &r {
            sab += (a - ma) * (b - mb);
            saa += (a - ma) * (a - ma);
            sbb += (b - mb) * (b - mb);
        }
        sab / libm::sqrt(saa * sbb)
    }

    #[test]
    fn simulated_observation_noise_has_requested_correlation() {
        assert!(residual_correlation(0.0).abs() < 0.03);
        assert!((residual_correlation(0.8) - 0.8).abs() < 0.03);
    }

    #[test]
    fn scalar_kalman_step() {
        let m = LinearGaussianModel::equicorrelated(1, 0.0).unwrap();
        let prior = KalmanBelief::isotropic(vec![0.0]);
        let post = prior.step(&vec![1.0].into(), &m).unwrap();
        assert!((post.mean[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((post.covariance[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_prior_variance_ignores_observation() {
        let m = LinearGaussianModel::equicorrelated(2, 0.3).unwrap();
        let prior = KalmanBelief {
            mean: vec![0.5, -0.5],
            covariance: vec![0.0; 4],
        };
        let post = prior.update(&vec![10.0, 10.0].into(), &m).unwrap();
        assert_eq!(post.mean, vec![0.5, -0.5]);
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        for (d, rho) in [(1, 0.0), (3, 0.7), (6, 0.2)] {
            let m = LinearGaussianModel::equicorrelated(d, rho).unwrap();
            let mean: Vec<f64> = (0..d).map(|i| i as f64 * 0.3 - 1.0).collect();
            let belief = KalmanBelief::isotropic(mean.clone())
                .step(&mean.clone().into(), &m)
                .unwrap();
            for (a, b) in belief.mean.iter().zip(&mean) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }
}
