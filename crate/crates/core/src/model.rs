//! Noise-driven state-space models.
//!
//! A model is a deterministic process map `x' = g(x, v)` driven by
//! standard-normal noise `v`, plus an observation log-likelihood
//! `ln p(y | x)`. Measurement noise never appears explicitly.
//!
//! The coordinate filter additionally needs partial likelihoods
//! `ln p(y | v¹..vᵈ)`, the observation density after only some of the
//! current step's noise coordinates have been drawn. Any model gets the
//! Dirac rule (unfilled coordinates pinned at zero) for free; models that
//! can marginalize the unfilled coordinates in closed form override
//! [`StateSpaceModel::exact_partial`].

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{check_finite, check_len};
use crate::{Error, Result};

/// Log of a zero density. Distinct from NaN, which is always a bug.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

macro_rules! real_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(len: usize) -> Self {
                Self(vec![0.0; len])
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl From<&[f64]> for $name {
            fn from(v: &[f64]) -> Self {
                Self(v.to_vec())
            }
        }
    };
}

real_vector!(
    /// A point in state space.
    StateVector
);
real_vector!(
    /// One measurement.
    Observation
);
real_vector!(
    /// Standard-normal process noise for one time step.
    NoiseVector
);

/// The first `d` injected coordinates of the current step's noise.
///
/// Stored padded to full length: coordinates not yet injected hold exactly
/// `0.0`, so the padded vector is directly usable as a Dirac-rule noise
/// vector. `coords` lists the injected coordinates in injection order.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePrefix {
    padded: Vec<f64>,
    coords: Vec<usize>,
}

impl NoisePrefix {
    /// The empty prefix for a `dim`-dimensional noise vector.
    pub fn empty(dim: usize) -> Self {
        Self {
            padded: vec![0.0; dim],
            coords: Vec::new(),
        }
    }

    /// Prefix filling coordinates `0..values.len()` in identity order.
    pub fn leading(dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() > dim {
            return Err(Error::PrefixLength {
                expected: dim,
                found: values.len(),
            });
        }
        let mut p = Self::empty(dim);
        for (c, &v) in values.iter().enumerate() {
            p.push(c, v)?;
        }
        Ok(p)
    }

    /// Rebuilds a prefix from its padded form and the filled coordinates.
    pub fn from_parts(padded: Vec<f64>, coords: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; padded.len()];
        for &c in &coords {
            if c >= padded.len() || seen[c] {
                return Err(Error::InvalidConfig(
                    "prefix coordinates must be distinct and in range",
                ));
            }
            seen[c] = true;
        }
        if padded.iter().zip(&seen).any(|(v, s)| !s && *v != 0.0) {
            return Err(Error::InvalidConfig(
                "unfilled prefix coordinates must be zero",
            ));
        }
        Ok(Self { padded, coords })
    }

    /// Injects `value` at coordinate `coord`.
    pub fn push(&mut self, coord: usize, value: f64) -> Result<()> {
        if coord >= self.padded.len() || self.coords.contains(&coord) {
            return Err(Error::InvalidConfig(
                "coordinate already filled or out of range",
            ));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite("noise"));
        }
        self.padded[coord] = value;
        self.coords.push(coord);
        Ok(())
    }

    /// Number of filled coordinates.
    pub fn depth(&self) -> usize {
        self.coords.len()
    }

    pub fn dim(&self) -> usize {
        self.padded.len()
    }

    pub fn is_complete(&self) -> bool {
        self.depth() == self.dim()
    }

    /// Full-length noise with zeros in unfilled coordinates.
    pub fn padded(&self) -> &[f64] {
        &self.padded
    }

    /// Filled coordinates in injection order.
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    /// Filled values in injection order.
    pub fn filled(&self) -> impl Iterator<Item = f64> + '_ {
        self.coords.iter().map(move |&c| self.padded[c])
    }
}

/// Which partial-likelihood rule the coordinate filter uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartialKind {
    /// Closed-form marginalization of the unfilled noise coordinates.
    Exact,
    /// Unfilled noise coordinates fixed at zero.
    Dirac,
}

/// Evaluates `ln p(y | x_prev, prefix)` for one observation and one set of
/// filled coordinates.
///
/// Constructed once per coordinate update and then applied to every
/// particle, so expensive per-update work (factorizations) is shared.
pub trait PartialEvaluator {
    /// `padded_noise` has the filled coordinates set and zeros elsewhere.
    fn log_partial(&self, x_prev: &[f64], padded_noise: &[f64]) -> f64;
}

/// A noise-driven dynamical system with an observation likelihood.
///
/// Implementations must be pure: identical inputs give bit-identical
/// outputs. `log_likelihood` returns a finite value or [`LOG_ZERO`], never
/// NaN.
pub trait StateSpaceModel {
    /// Dimension of both the state and the process noise.
    fn state_dim(&self) -> usize;

    fn obs_dim(&self) -> usize;

    /// Writes `g(x, v)` into `out`.
    fn propagate_into(&self, x: &[f64], v: &[f64], out: &mut [f64]);

    /// `ln p(y | x)`.
    fn log_likelihood(&self, y: &[f64], x: &[f64]) -> f64;

    /// Closed-form partial likelihood for the filled coordinate set
    /// `filled`, if the model has one. When every coordinate is filled the
    /// evaluator must agree bit-for-bit with `log_likelihood ∘ propagate`.
    fn exact_partial<'a>(
        &'a self,
        _y: &'a [f64],
        _filled: &[usize],
    ) -> Option<Box<dyn PartialEvaluator + 'a>> {
        None
    }
}

struct DiracPartial<'a, M: ?Sized> {
    model: &'a M,
    y: &'a [f64],
}

impl<M: StateSpaceModel + ?Sized> PartialEvaluator for DiracPartial<'_, M> {
    fn log_partial(&self, x_prev: &[f64], padded_noise: &[f64]) -> f64 {
        let mut x = vec![0.0; self.model.state_dim()];
        self.model.propagate_into(x_prev, padded_noise, &mut x);
        self.model.log_likelihood(self.y, &x)
    }
}

/// Builds the partial-likelihood evaluator of the requested kind for the
/// filled coordinate set `filled`.
pub fn partial_evaluator<'a, M: StateSpaceModel + ?Sized>(
    model: &'a M,
    kind: PartialKind,
    y: &'a [f64],
    filled: &[usize],
) -> Result<Box<dyn PartialEvaluator + 'a>> {
    check_len("observation", model.obs_dim(), y.len())?;
    match kind {
        PartialKind::Dirac => Ok(Box::new(DiracPartial { model, y })),
        PartialKind::Exact => model.exact_partial(y, filled).ok_or(Error::Unsupported(
            "model has no closed-form partial likelihood",
        )),
    }
}

/// `g(x, v)` with dimension and finiteness checks.
pub fn propagate<M: StateSpaceModel + ?Sized>(
    model: &M,
    x: &StateVector,
    v: &NoiseVector,
) -> Result<StateVector> {
    check_len("state", model.state_dim(), x.len())?;
    check_len("noise", model.state_dim(), v.len())?;
    check_finite("state", x)?;
    check_finite("noise", v)?;
    let mut out = StateVector::zeros(model.state_dim());
    model.propagate_into(x, v, &mut out.0);
    Ok(out)
}

/// `ln p(y | x)` with dimension and finiteness checks.
pub fn log_likelihood<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &Observation,
    x: &StateVector,
) -> Result<f64> {
    check_len("observation", model.obs_dim(), y.len())?;
    check_len("state", model.state_dim(), x.len())?;
    check_finite("observation", y)?;
    check_finite("state", x)?;
    checked_log_density(model.log_likelihood(y, x))
}

/// `ln p(y | x = g(x_prev, ν_pad))` where `ν_pad` is the prefix with zeros in
/// the unfilled coordinates.
pub fn dirac_partial_loglik<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &Observation,
    x_prev: &StateVector,
    prefix: &NoisePrefix,
) -> Result<f64> {
    check_len("observation", model.obs_dim(), y.len())?;
    check_len("state", model.state_dim(), x_prev.len())?;
    check_len("noise prefix", model.state_dim(), prefix.dim())?;
    check_finite("observation", y)?;
    check_finite("state", x_prev)?;
    let eval = DiracPartial {
        model,
        y: y.as_slice(),
    };
    checked_log_density(eval.log_partial(x_prev, prefix.padded()))
}

pub(crate) fn checked_log_density(v: f64) -> Result<f64> {
    if v.is_nan() || v == f64::INFINITY {
        Err(Error::NonFinite("log-likelihood"))
    } else {
        Ok(v)
    }
}
