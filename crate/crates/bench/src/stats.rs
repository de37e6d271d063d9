//! Error metrics and the Gaussian win-probability comparison.

use cpf_core::StateVector;

use crate::{BenchError, Result};

/// `sqrt(mean_t ‖x̂_t − x_t‖²)`.
pub fn rmse(estimates: &[StateVector], truth: &[StateVector]) -> Result<f64> {
    let dim = truth.first().map_or(0, |t| t.len());
    object_rmse(estimates, truth, dim.max(1))
}

/// RMSE per object: the state is split into consecutive objects of
/// `object_dim` coordinates and the squared error is averaged over time
/// steps and objects. With `object_dim = D` this is [`rmse`].
pub fn object_rmse(
    estimates: &[StateVector],
    truth: &[StateVector],
    object_dim: usize,
) -> Result<f64> {
    if estimates.len() != truth.len() || truth.is_empty() {
        return Err(BenchError::Config(format!(
            "rmse needs equally long non-empty sequences, got {} estimates and {} states",
            estimates.len(),
            truth.len()
        )));
    }
    let dim = truth[0].len();
    if object_dim == 0 || dim % object_dim != 0 {
        return Err(BenchError::Config(format!(
            "object size {object_dim} does not divide dimension {dim}"
        )));
    }
    let mut total = 0.0;
    for (e, t) in estimates.iter().zip(truth) {
        if e.len() != dim || t.len() != dim {
            return Err(BenchError::Config("rmse inputs differ in dimension".into()));
        }
        total += e
            .iter()
            .zip(t.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    let objects = (dim / object_dim) as f64;
    Ok((total / (truth.len() as f64 * objects)).sqrt())
}

/// Sample mean and sample standard deviation (`n − 1` denominator).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `P(E_a < E_b)` for independent `E_a ~ N(μ_a, σ_a²)`, `E_b ~ N(μ_b, σ_b²)`.
///
/// With both deviations zero the comparison is deterministic: 1, 0, or ½
/// on a tie.
pub fn prob_smaller_error(mean_a: f64, std_a: f64, mean_b: f64, std_b: f64) -> f64 {
    let spread = (std_a * std_a + std_b * std_b).sqrt();
    if spread == 0.0 {
        return match mean_a.partial_cmp(&mean_b) {
            Some(std::cmp::Ordering::Less) => 1.0,
            Some(std::cmp::Ordering::Greater) => 0.0,
            _ => 0.5,
        };
    }
    normal_cdf((mean_b - mean_a) / spread)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[&[f64]]) -> Vec<StateVector> {
        v.iter().map(|s| s.to_vec().into()).collect()
    }

    #[test]
    fn rmse_examples() {
        let truth = seq(&[&[1.0, 2.0], &[3.0, -1.0]]);
        assert_eq!(rmse(&truth, &truth).unwrap(), 0.0);
        let shifted = seq(&[&[2.0, 2.0], &[4.0, -1.0]]);
        assert!((rmse(&shifted, &truth).unwrap() - 1.0).abs() < 1e-15);
        let e = seq(&[&[3.0], &[4.0]]);
        let t = seq(&[&[0.0], &[0.0]]);
        assert!((rmse(&e, &t).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&e[..1], &t).is_err());
    }

    #[test]
    fn object_rmse_divides_by_object_count() {
        let t = seq(&[&[0.0; 4]]);
        let e = seq(&[&[1.0, 1.0, 1.0, 1.0]]);
        assert!((object_rmse(&e, &t, 2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((object_rmse(&e, &t, 4).unwrap() - 2.0).abs() < 1e-15);
        assert!(object_rmse(&e, &t, 3).is_err());
    }

    #[test]
    fn win_probability_examples() {
        assert_eq!(prob_smaller_error(1.0, 0.3, 1.0, 0.3), 0.5);
        assert_eq!(prob_smaller_error(1.0, 0.0, 2.0, 0.0), 1.0);
        assert_eq!(prob_smaller_error(2.0, 0.0, 1.0, 0.0), 0.0);
        assert_eq!(prob_smaller_error(1.0, 0.0, 1.0, 0.0), 0.5);
        // Φ(1/√2)
        assert!((prob_smaller_error(1.0, 1.0, 2.0, 1.0) - 0.760_249_938_906_523_3).abs() < 1e-9);
    }

    #[test]
    fn complement() {
        for (ma, sa, mb, sb) in [
            (1.0, 0.2, 1.3, 0.1),
            (5.0, 2.0, 0.0, 0.5),
            (0.1, 1e-3, 0.1, 0.0),
        ] {
            let p = prob_smaller_error(ma, sa, mb, sb) + prob_smaller_error(mb, sb, ma, sa);
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
