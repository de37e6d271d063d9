//! Weighted particle ensembles, log-domain normalization, effective sample
//! size and unbiased resampling.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::model::{NoisePrefix, StateVector, LOG_ZERO};
use crate::rng::SeedSpec;
use crate::{Error, Result};

/// Tolerance on `|logsumexp(log_weights)|` for an ensemble to count as
/// normalized.
pub const NORMALIZED_TOLERANCE: f64 = 1e-9;

/// Resampling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Resampler {
    /// `N` independent categorical draws.
    Multinomial,
    /// One uniform offset, `N` evenly spaced pointers.
    #[default]
    Systematic,
}

/// Noise prefixes of a whole ensemble in the middle of a coordinate step.
///
/// Every particle has the same filled coordinate set, so the coordinate
/// list is shared and only the values are stored per particle.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PrefixBlock {
    /// `N × D`, zeros in unfilled coordinates.
    pub(crate) padded: Vec<f64>,
    pub(crate) coords: Vec<usize>,
    /// Partial log-likelihood at the current depth, per particle.
    pub(crate) last_partial: Vec<f64>,
}

/// Particle states with log-weights.
///
/// States are stored row-major, one row of length `dim` per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedParticles {
    dim: usize,
    states: Vec<f64>,
    log_weights: Vec<f64>,
    pub(crate) prefixes: Option<PrefixBlock>,
}

impl WeightedParticles {
    /// Builds an ensemble from row-major `states` and matching log-weights.
    pub fn new(dim: usize, states: Vec<f64>, log_weights: Vec<f64>) -> Result<Self> {
        let n = log_weights.len();
        if n == 0 || dim == 0 {
            return Err(Error::InvalidConfig(
                "ensemble needs at least one particle and dimension",
            ));
        }
        if states.len() != n * dim {
            return Err(Error::DimensionMismatch {
                what: "particle states",
                expected: n * dim,
                found: states.len(),
            });
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("particle states"));
        }
        if log_weights
            .iter()
            .any(|w| w.is_nan() || *w == f64::INFINITY)
        {
            return Err(Error::NonFinite("log-weights"));
        }
        Ok(Self {
            dim,
            states,
            log_weights,
            prefixes: None,
        })
    }

    /// Equally weighted ensemble.
    pub fn uniform(states: &[StateVector]) -> Result<Self> {
        let dim = states.first().map_or(0, |s| s.len());
        if states.iter().any(|s| s.len() != dim) {
            return Err(Error::InvalidConfig("particle states differ in length"));
        }
        let n = states.len();
        let flat = states.iter().flat_map(|s| s.iter().copied()).collect();
        Self::new(dim, flat, vec![-libm::log(n as f64); n])
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub(crate) fn states_mut(&mut self) -> &mut [f64] {
        &mut self.states
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub(crate) fn log_weights_mut(&mut self) -> &mut [f64] {
        &mut self.log_weights
    }

    /// Linear-domain weights.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|&w| libm::exp(w)).collect()
    }

    /// Mid-step noise prefix of particle `i`, if a coordinate step is in
    /// progress.
    pub fn noise_prefix(&self, i: usize) -> Option<NoisePrefix> {
        let block = self.prefixes.as_ref()?;
        let padded = block.padded[i * self.dim..(i + 1) * self.dim].to_vec();
        NoisePrefix::from_parts(padded, block.coords.clone()).ok()
    }

    /// Number of filled coordinates in the in-progress prefixes.
    pub fn prefix_depth(&self) -> Option<usize> {
        self.prefixes.as_ref().map(|b| b.coords.len())
    }

    /// Normalizes so that `logsumexp(log_weights) = 0`. Returns the log of
    /// the pre-normalization total.
    pub fn normalize(&mut self) -> Result<f64> {
        let total = log_sum_exp(&self.log_weights);
        if total.is_nan() || total == f64::INFINITY {
            return Err(Error::NonFinite("log-weights"));
        }
        if total == LOG_ZERO {
            return Err(Error::DegenerateEnsemble);
        }
        for w in &mut self.log_weights {
            *w -= total;
        }
        Ok(total)
    }

    pub fn is_normalized(&self) -> bool {
        log_sum_exp(&self.log_weights).abs() <= NORMALIZED_TOLERANCE
    }

    /// New ensemble made of the particles at `ancestors`, equally weighted.
    /// Noise prefixes travel with their particles.
    pub fn select(&self, ancestors: &[usize]) -> Self {
        let n = ancestors.len();
        let d = self.dim;
        let mut states = Vec::with_capacity(n * d);
        for &a in ancestors {
            states.extend_from_slice(self.state(a));
        }
        let prefixes = self.prefixes.as_ref().map(|block| {
            let mut padded = Vec::with_capacity(n * d);
            for &a in ancestors {
                padded.extend_from_slice(&block.padded[a * d..(a + 1) * d]);
            }
            PrefixBlock {
                padded,
                coords: block.coords.clone(),
                last_partial: ancestors.iter().map(|&a| block.last_partial[a]).collect(),
            }
        });
        Self {
            dim: d,
            states,
            log_weights: vec![-libm::log(n as f64); n],
            prefixes,
        }
    }
}

/// `ln Σ exp(xᵢ)` with max-subtraction. Returns [`LOG_ZERO`] for an empty or
/// all-log-zero input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(LOG_ZERO, f64::max);
    if !max.is_finite() {
        if xs.iter().any(|x| x.is_nan()) {
            return f64::NAN;
        }
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| libm::exp(x - max)).sum();
    max + libm::log(sum)
}

/// Returns a normalized copy of `p`.
pub fn normalize_log_weights(p: &WeightedParticles) -> Result<WeightedParticles> {
    let mut out = p.clone();
    out.normalize()?;
    Ok(out)
}

/// `1 / Σ wᵢ²` for a normalized ensemble, clamped to `[1, N]`.
pub fn effective_sample_size(p: &WeightedParticles) -> Result<f64> {
    let log_total = log_sum_exp(p.log_weights());
    if !(log_total.abs() <= NORMALIZED_TOLERANCE) {
        return Err(Error::Unnormalized { log_total });
    }
    Ok(ess_unchecked(p.log_weights()))
}

pub(crate) fn ess_unchecked(log_weights: &[f64]) -> f64 {
    let sum_sq: f64 = log_weights.iter().map(|&w| libm::exp(2.0 * w)).sum();
    (1.0 / sum_sq).clamp(1.0, log_weights.len() as f64)
}

/// Normalized cumulative weights with the last entry pinned to exactly 1.
fn cumulative(log_weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = log_weights
        .iter()
        .map(|&w| {
            acc += libm::exp(w);
            acc
        })
        .collect();
    let total = acc;
    for c in &mut cdf {
        *c /= total;
    }
    // Trailing zero-weight particles must keep a cdf below 1 so they are
    // never selected; pin only from the last positive weight on.
    if let Some(last) = log_weights.iter().rposition(|&w| w > LOG_ZERO) {
        for c in &mut cdf[last..] {
            *c = 1.0;
        }
    }
    cdf
}

/// First index whose cumulative weight exceeds `u`.
fn search(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn check_normalized(p: &WeightedParticles) -> Result<()> {
    let log_total = log_sum_exp(p.log_weights());
    if log_total.abs() <= NORMALIZED_TOLERANCE {
        Ok(())
    } else {
        Err(Error::Unnormalized { log_total })
    }
}

/// Ancestor indices from `N` independent categorical draws.
pub fn multinomial_ancestors(log_weights: &[f64], seed: &SeedSpec) -> Vec<usize> {
    let cdf = cumulative(log_weights);
    let mut rng = seed.rng();
    (0..log_weights.len())
        .map(|_| search(&cdf, rng.random::<f64>()))
        .collect()
}

/// Ancestor indices from systematic resampling: pointers `(k + u) / N`
/// with a single `u ~ U[0, 1)`.
pub fn systematic_ancestors(log_weights: &[f64], seed: &SeedSpec) -> Vec<usize> {
    let cdf = cumulative(log_weights);
    let n = log_weights.len();
    let u: f64 = seed.rng().random();
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let pointer = (k as f64 + u) / n as f64;
        while j + 1 < n && cdf[j] <= pointer {
            j += 1;
        }
        out.push(j);
    }
    out
}

impl Resampler {
    pub fn ancestors(self, log_weights: &[f64], seed: &SeedSpec) -> Vec<usize> {
        match self {
            Resampler::Multinomial => multinomial_ancestors(log_weights, seed),
            Resampler::Systematic => systematic_ancestors(log_weights, seed),
        }
    }

    pub fn resample(self, p: &WeightedParticles, seed: &SeedSpec) -> Result<WeightedParticles> {
        check_normalized(p)?;
        Ok(p.select(&self.ancestors(p.log_weights(), seed)))
    }
}

/// Redraws every particle with probability proportional to its weight.
pub fn multinomial_resample(p: &WeightedParticles, seed: &SeedSpec) -> Result<WeightedParticles> {
    Resampler::Multinomial.resample(p, seed)
}

/// Systematic resampling; each copy count is `⌊N wᵢ⌋` or `⌈N wᵢ⌉`.
pub fn systematic_resample(p: &WeightedParticles, seed: &SeedSpec) -> Result<WeightedParticles> {
    Resampler::Systematic.resample(p, seed)
}
