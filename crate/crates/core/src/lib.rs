//! Particle filtering for high-dimensional state spaces.
//!
//! Two filters share one model layer:
//!
//! - the bootstrap Particle Filter, which propagates every particle with a
//!   full noise vector and re-weights by the observation likelihood;
//! - the Coordinate Particle Filter, which injects the process noise one
//!   coordinate at a time, re-weights after each coordinate with a partial
//!   likelihood, and may resample between coordinates.
//!
//! Without intra-step resampling both filters produce the same weights; the
//! intermediate partial likelihoods telescope away. With it, the coordinate
//! filter discards poor partial samples early, which is what keeps it usable
//! as the state dimension grows.
//!
//! The crate is `no_std` and needs only `alloc`. All randomness flows from
//! [`SeedSpec`] streams, so every run is a pure function of its inputs.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod filters;
pub mod linalg;
pub mod linear_gaussian;
pub mod model;
pub mod rng;
pub mod sampling;

pub use error::Error;
pub use filters::{
    cpf_dimension_update, cpf_step, cpf_time_update, estimate_mean, pf_step, DegeneracyPolicy,
    DimensionOrder, FilterConfig, FilterKind, FilterState, IntraStepResampling,
};
pub use linear_gaussian::{
    CorrelatedCovariance, KalmanBelief, LinearGaussianModel, ObservationCovariance,
};
pub use model::{
    dirac_partial_loglik, log_likelihood, partial_evaluator, propagate, NoisePrefix, NoiseVector,
    Observation, PartialEvaluator, PartialKind, StateSpaceModel, StateVector, LOG_ZERO,
};
pub use rng::SeedSpec;
pub use sampling::{
    effective_sample_size, log_sum_exp, multinomial_resample, normalize_log_weights,
    systematic_resample, Resampler, WeightedParticles,
};

pub type Result<T, E = Error> = core::result::Result<T, E>;
