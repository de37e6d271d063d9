//! The bootstrap Particle Filter and the Coordinate Particle Filter.
//!
//! Both filters use the transition prior as proposal, so the process-noise
//! density cancels against the proposal density and weights are driven by
//! (partial) likelihoods only.
//!
//! One coordinate-filter step is:
//!
//! 1. time update: `w ← w · p(y | x_prev)` under the partial rule with no
//!    noise coordinate filled;
//! 2. for each coordinate `c` in the dimension order, draw `ν_c ~ N(0, 1)`,
//!    extend the prefix and apply `w ← w · p(y | prefix ∪ c) / p(y | prefix)`,
//!    optionally resampling in between;
//! 3. absorb the complete noise into the states with the process map.
//!
//! Without intra-step resampling the partial terms telescope and the final
//! weight is the Particle Filter weight, whatever partial rule is used.
//!
//! # Random streams
//!
//! Given a step seed `s`, slot `i` draws its full noise vector from `s/i`
//! (coordinate `c` is the `c`-th variate of that stream) in both filters, so
//! the two see identical noise. Resampling after coordinate position `k`
//! uses `s/RESAMPLE/k`, end-of-step resampling uses `s/RESAMPLE/FINAL`, and a
//! random dimension order is drawn from `s/ORDER`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::check_len;
use crate::model::{partial_evaluator, PartialKind, StateSpaceModel, StateVector, LOG_ZERO};
use crate::rng::SeedSpec;
use crate::sampling::{ess_unchecked, PrefixBlock, Resampler, WeightedParticles};
use crate::{Error, Result};

/// Stream index reserved for resampling draws.
pub const RESAMPLE_STREAM: u64 = u64::MAX;
/// Stream index reserved for random dimension orders.
pub const ORDER_STREAM: u64 = u64::MAX - 1;
/// Resampling sub-stream used at the end of a step.
pub const FINAL_RESAMPLE: u64 = u64::MAX;

/// Order in which the coordinate filter injects noise coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum DimensionOrder {
    #[default]
    Identity,
    /// A fixed permutation of `0..D`.
    Fixed(Vec<usize>),
    /// A fresh uniformly random permutation every step.
    RandomPerStep,
}

impl DimensionOrder {
    /// The permutation used for the step seeded by `step_seed`.
    pub fn resolve(&self, dim: usize, step_seed: &SeedSpec) -> Result<Vec<usize>> {
        match self {
            DimensionOrder::Identity => Ok((0..dim).collect()),
            DimensionOrder::Fixed(order) => {
                check_len("dimension order", dim, order.len())?;
                let mut seen = vec![false; dim];
                for &c in order {
                    if c >= dim || seen[c] {
                        return Err(Error::InvalidConfig("dimension order is not a permutation"));
                    }
                    seen[c] = true;
                }
                Ok(order.clone())
            }
            DimensionOrder::RandomPerStep => {
                let mut order: Vec<usize> = (0..dim).collect();
                order.shuffle(&mut step_seed.child(ORDER_STREAM).rng());
                Ok(order)
            }
        }
    }
}

/// When the coordinate filter resamples inside a time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntraStepResampling {
    /// Only at the end of the step, exactly like the Particle Filter.
    Disabled,
    /// After the time update and after each coordinate when ESS < αN.
    #[default]
    ByEss,
    /// After the time update and after every coordinate.
    Always,
}

impl From<bool> for IntraStepResampling {
    fn from(enabled: bool) -> Self {
        if enabled {
            IntraStepResampling::ByEss
        } else {
            IntraStepResampling::Disabled
        }
    }
}

/// What to do when every particle ends up with log-zero weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneracyPolicy {
    /// Undo the offending update, count the event in
    /// [`FilterState::degenerate_events`] and carry on.
    #[default]
    Revert,
    /// Return [`Error::DegenerateEnsemble`].
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub n_particles: usize,
    /// Resample when ESS < `ess_fraction · N`.
    pub ess_fraction: f64,
    pub resampler: Resampler,
    pub dimension_order: DimensionOrder,
    pub intra_step_resampling: IntraStepResampling,
    pub partial_kind: PartialKind,
    pub degeneracy: DegeneracyPolicy,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            n_particles: 1000,
            ess_fraction: 0.5,
            resampler: Resampler::Systematic,
            dimension_order: DimensionOrder::Identity,
            intra_step_resampling: IntraStepResampling::ByEss,
            partial_kind: PartialKind::Exact,
            degeneracy: DegeneracyPolicy::Revert,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidConfig("at least one particle is required"));
        }
        if !(self.ess_fraction > 0.0 && self.ess_fraction <= 1.0) {
            return Err(Error::InvalidConfig("ESS fraction must lie in (0, 1]"));
        }
        if let DimensionOrder::Fixed(order) = &self.dimension_order {
            self.dimension_order
                .resolve(order.len(), &SeedSpec::new(0))?;
        }
        Ok(())
    }
}

/// Which filter to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Particle,
    Coordinate(PartialKind),
}

impl FilterKind {
    /// Advances `state` by one observation.
    pub fn step<M: StateSpaceModel + ?Sized>(
        self,
        state: &mut FilterState,
        model: &M,
        y: &[f64],
        cfg: &FilterConfig,
        seed: &SeedSpec,
    ) -> Result<()> {
        match self {
            FilterKind::Particle => pf_step(state, model, y, cfg, seed),
            FilterKind::Coordinate(kind) => {
                let cfg = FilterConfig {
                    partial_kind: kind,
                    ..cfg.clone()
                };
                cpf_step(state, model, y, &cfg, seed)
            }
        }
    }

    /// Likelihood evaluations per step for `n` particles in dimension `dim`.
    pub fn evals_per_step(self, n: usize, dim: usize) -> u64 {
        match self {
            FilterKind::Particle => n as u64,
            FilterKind::Coordinate(_) => (n * (dim + 1)) as u64,
        }
    }
}

/// Ensemble plus bookkeeping carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub particles: WeightedParticles,
    pub time_index: u64,
    /// Total (partial) likelihood evaluations so far.
    pub likelihood_evals: u64,
    /// Updates undone because every particle reached log-zero weight.
    pub degenerate_events: u64,
}

impl FilterState {
    pub fn new(particles: WeightedParticles) -> Self {
        Self {
            particles,
            time_index: 0,
            likelihood_evals: 0,
            degenerate_events: 0,
        }
    }

    /// `n` equally weighted particles drawn from `N(mean, I)`; particle `i`
    /// uses stream `seed/i`.
    pub fn from_isotropic_prior(mean: &[f64], n: usize, seed: &SeedSpec) -> Result<Self> {
        if n == 0 || mean.is_empty() {
            return Err(Error::InvalidConfig(
                "prior needs particles and a dimension",
            ));
        }
        let d = mean.len();
        let mut states = vec![0.0; n * d];
        for (i, row) in states.chunks_exact_mut(d).enumerate() {
            seed.child(i as u64).fill_standard_normal(row);
            for (x, m) in row.iter_mut().zip(mean) {
                *x += m;
            }
        }
        let particles = WeightedParticles::new(d, states, vec![-libm::log(n as f64); n])?;
        Ok(Self::new(particles))
    }
}

/// `Σᵢ wᵢ xᵢ`.
pub fn estimate_mean(state: &FilterState) -> StateVector {
    let p = &state.particles;
    let mut mean = vec![0.0; p.dim()];
    for (i, &lw) in p.log_weights().iter().enumerate() {
        let w = libm::exp(lw);
        if w == 0.0 {
            continue;
        }
        for (m, x) in mean.iter_mut().zip(p.state(i)) {
            *m += w * x;
        }
    }
    StateVector(mean)
}

fn check_step_inputs<M: StateSpaceModel + ?Sized>(
    state: &FilterState,
    model: &M,
    y: &[f64],
    cfg: &FilterConfig,
) -> Result<()> {
    cfg.validate()?;
    check_len("observation", model.obs_dim(), y.len())?;
    check_len("particle state", model.state_dim(), state.particles.dim())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("observation"));
    }
    Ok(())
}

/// Normalizes; on total degeneracy applies the policy. Returns `false` when
/// the update was reverted.
fn normalize_or_revert(
    state: &mut FilterState,
    saved: &[f64],
    policy: DegeneracyPolicy,
) -> Result<bool> {
    match state.particles.normalize() {
        Ok(_) => Ok(true),
        Err(Error::DegenerateEnsemble) => match policy {
            DegeneracyPolicy::Fail => Err(Error::DegenerateEnsemble),
            DegeneracyPolicy::Revert => {
                state.particles.log_weights_mut().copy_from_slice(saved);
                state.degenerate_events += 1;
                Ok(false)
            }
        },
        Err(e) => Err(e),
    }
}

fn resample_if(state: &mut FilterState, cfg: &FilterConfig, always: bool, seed: &SeedSpec) {
    let n = state.particles.len();
    let ess = ess_unchecked(state.particles.log_weights());
    if always || ess < cfg.ess_fraction * n as f64 {
        let ancestors = cfg.resampler.ancestors(state.particles.log_weights(), seed);
        state.particles = state.particles.select(&ancestors);
    }
}

fn validate_increment(v: f64) -> Result<f64> {
    if v.is_nan() || v == f64::INFINITY {
        Err(Error::NonFinite("log-likelihood"))
    } else {
        Ok(v)
    }
}

/// One bootstrap Particle Filter step.
///
/// Every particle is propagated with a fresh noise vector from `seed/i` and
/// re-weighted by `p(y | x)`; the ensemble is normalized and resampled when
/// ESS < αN.
pub fn pf_step<M: StateSpaceModel + ?Sized>(
    state: &mut FilterState,
    model: &M,
    y: &[f64],
    cfg: &FilterConfig,
    seed: &SeedSpec,
) -> Result<()> {
    check_step_inputs(state, model, y, cfg)?;
    if state.particles.prefixes.is_some() {
        return Err(Error::Unsupported(
            "particle step inside an unfinished coordinate step",
        ));
    }
    let n = state.particles.len();
    let d = model.state_dim();
    let saved = state.particles.log_weights().to_vec();

    let mut noise = vec![0.0; d];
    let mut prev = vec![0.0; d];
    for i in 0..n {
        seed.child(i as u64).fill_standard_normal(&mut noise);
        let row = &mut state.particles.states_mut()[i * d..(i + 1) * d];
        prev.copy_from_slice(row);
        model.propagate_into(&prev, &noise, row);
    }
    for i in 0..n {
        let ll = validate_increment(model.log_likelihood(y, state.particles.state(i)))?;
        let w = &mut state.particles.log_weights_mut()[i];
        *w = if *w == LOG_ZERO { LOG_ZERO } else { *w + ll };
    }
    state.likelihood_evals += n as u64;
    normalize_or_revert(state, &saved, cfg.degeneracy)?;
    resample_if(
        state,
        cfg,
        false,
        &seed.child(RESAMPLE_STREAM).child(FINAL_RESAMPLE),
    );
    state.time_index += 1;
    Ok(())
}

fn intra_step_resample(
    state: &mut FilterState,
    cfg: &FilterConfig,
    position: u64,
    seed: &SeedSpec,
) {
    let stream = seed.child(RESAMPLE_STREAM).child(position);
    match cfg.intra_step_resampling {
        IntraStepResampling::Disabled => {}
        IntraStepResampling::ByEss => resample_if(state, cfg, false, &stream),
        IntraStepResampling::Always => resample_if(state, cfg, true, &stream),
    }
}

/// Time update of the coordinate filter.
///
/// Multiplies each weight by the partial likelihood with an empty noise
/// prefix and opens the per-particle prefixes. Resamples (stream
/// `seed/RESAMPLE/0`) if intra-step resampling is enabled.
pub fn cpf_time_update<M: StateSpaceModel + ?Sized>(
    state: &mut FilterState,
    model: &M,
    y: &[f64],
    cfg: &FilterConfig,
    seed: &SeedSpec,
) -> Result<()> {
    check_step_inputs(state, model, y, cfg)?;
    if let Some(depth) = state.particles.prefix_depth() {
        return Err(Error::PrefixLength {
            expected: 0,
            found: depth,
        });
    }
    let n = state.particles.len();
    let d = model.state_dim();
    let eval = partial_evaluator(model, cfg.partial_kind, y, &[])?;
    let zeros = vec![0.0; d];
    let saved = state.particles.log_weights().to_vec();
    let mut partials = Vec::with_capacity(n);
    for i in 0..n {
        let p = validate_increment(eval.log_partial(state.particles.state(i), &zeros))?;
        partials.push(p);
        let w = &mut state.particles.log_weights_mut()[i];
        *w = if *w == LOG_ZERO { LOG_ZERO } else { *w + p };
    }
    state.likelihood_evals += n as u64;
    let kept = normalize_or_revert(state, &saved, cfg.degeneracy)?;
    state.particles.prefixes = Some(PrefixBlock {
        padded: vec![0.0; n * d],
        coords: Vec::new(),
        // After a revert the weights carry no partial term, so the next
        // ratio must telescope against nothing: use a flat reference.
        last_partial: if kept { partials } else { vec![0.0; n] },
    });
    intra_step_resample(state, cfg, 0, seed);
    Ok(())
}

fn dimension_update_with<M, F>(
    state: &mut FilterState,
    model: &M,
    y: &[f64],
    position: usize,
    coord: usize,
    cfg: &FilterConfig,
    seed: &SeedSpec,
    mut draw: F,
) -> Result<()>
where
    M: StateSpaceModel + ?Sized,
    F: FnMut(usize) -> f64,
{
    let d = model.state_dim();
    let n = state.particles.len();
    let block = state
        .particles
        .prefixes
        .as_mut()
        .ok_or(Error::PrefixLength {
            expected: position - 1,
            found: 0,
        })?;
    if block.coords.len() != position - 1 {
        return Err(Error::PrefixLength {
            expected: position - 1,
            found: block.coords.len(),
        });
    }
    if block.coords.contains(&coord) {
        return Err(Error::InvalidConfig("coordinate injected twice"));
    }
    for i in 0..n {
        block.padded[i * d + coord] = draw(i);
    }
    block.coords.push(coord);
    let coords = block.coords.clone();

    let eval = partial_evaluator(model, cfg.partial_kind, y, &coords)?;
    let saved = state.particles.log_weights().to_vec();
    let mut partials = Vec::with_capacity(n);
    {
        let block = state
            .particles
            .prefixes
            .as_ref()
            .expect("prefix block present");
        for i in 0..n {
            let noise = &block.padded[i * d..(i + 1) * d];
            partials.push(validate_increment(
                eval.log_partial(state.particles.state(i), noise),
            )?);
        }
    }
    let last = state
        .particles
        .prefixes
        .as_ref()
        .expect("prefix block present")
        .last_partial
        .clone();
    for (i, (&p, &q)) in partials.iter().zip(&last).enumerate() {
        let w = &mut state.particles.log_weights_mut()[i];
        // A log-zero reference partial means the weight is already log-zero.
        *w = if *w == LOG_ZERO || q == LOG_ZERO {
            LOG_ZERO
        } else {
            *w + (p - q)
        };
    }
    state.likelihood_evals += n as u64;
    if normalize_or_revert(state, &saved, cfg.degeneracy)? {
        state
            .particles
            .prefixes
            .as_mut()
            .expect("prefix block present")
            .last_partial = partials;
    }
    if position < d {
        intra_step_resample(state, cfg, position as u64, seed);
    }
    Ok(())
}

/// Injects the noise coordinate at 1-based `position` of the dimension
/// order.
///
/// Each particle draws `ν ~ N(0, 1)` for that coordinate, extends its prefix
/// and multiplies its weight by `p(y | prefix_d) / p(y | prefix_{d−1})`. Then
/// the ensemble is normalized and, for `position < D`, resampled according
/// to the intra-step policy with stream `seed/RESAMPLE/position`.
pub fn cpf_dimension_update<M: StateSpaceModel + ?Sized>(
    state: &mut FilterState,
    model: &M,
    y: &[f64],
    position: usize,
    cfg: &FilterConfig,
    seed: &SeedSpec,
) -> Result<()> {
    check_step_inputs(state, model, y, cfg)?;
    let d = model.state_dim();
    if position == 0 || position > d {
        return Err(Error::InvalidConfig(
            "coordinate position must lie in 1..=D",
        ));
    }
    let order = cfg.dimension_order.resolve(d, seed)?;
    let coord = order[position - 1];
    let mut row = vec![0.0; d];
    dimension_update_with(state, model, y, position, coord, cfg, seed, |i| {
        seed.child(i as u64).fill_standard_normal(&mut row);
        row[coord]
    })
}

/// Moves every particle to `g(x_prev, ν)` and closes the prefixes.
fn absorb_prefixes<M: StateSpaceModel + ?Sized>(state: &mut FilterState, model: &M) -> Result<()> {
    let d = model.state_dim();
    let block = state
        .particles
        .prefixes
        .take()
        .ok_or(Error::Unsupported("no coordinate step in progress"))?;
    if block.coords.len() != d {
        let found = block.coords.len();
        state.particles.prefixes = Some(block);
        return Err(Error::PrefixLength { expected: d, found });
    }
    let mut prev = vec![0.0; d];
    for (i, noise) in block.padded.chunks_exact(d).enumerate() {
        let row = &mut state.particles.states_mut()[i * d..(i + 1) * d];
        prev.copy_from_slice(row);
        model.propagate_into(&prev, noise, row);
    }
    Ok(())
}

/// One full Coordinate Particle Filter step: time update, one dimension
/// update per coordinate in the configured order, absorption of the noise
/// into the states, then end-of-step resampling when ESS < αN.
pub fn cpf_step<M: StateSpaceModel + ?Sized>(
    state: &mut FilterState,
    model: &M,
    y: &[f64],
    cfg: &FilterConfig,
    seed: &SeedSpec,
) -> Result<()> {
    check_step_inputs(state, model, y, cfg)?;
    let d = model.state_dim();
    let n = state.particles.len();
    let order = cfg.dimension_order.resolve(d, seed)?;

    // Noise indexed by slot, not by particle lineage: after an intra-step
    // resample, slot i keeps drawing from stream i.
    let mut noise = vec![0.0; n * d];
    for (i, row) in noise.chunks_exact_mut(d).enumerate() {
        seed.child(i as u64).fill_standard_normal(row);
    }

    cpf_time_update(state, model, y, cfg, seed)?;
    for (k, &coord) in order.iter().enumerate() {
        dimension_update_with(state, model, y, k + 1, coord, cfg, seed, |i| {
            noise[i * d + coord]
        })?;
    }
    absorb_prefixes(state, model)?;
    resample_if(
        state,
        cfg,
        false,
        &seed.child(RESAMPLE_STREAM).child(FINAL_RESAMPLE),
    );
    state.time_index += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_gaussian::LinearGaussianModel;
    use crate::sampling::log_sum_exp;

    fn scalar_state(states: &[f64], log_weights: &[f64]) -> FilterState {
        FilterState::new(WeightedParticles::new(1, states.to_vec(), log_weights.to_vec()).unwrap())
    }

    /// Likelihood ignores the state entirely.
    struct Flat(usize);

    impl StateSpaceModel for Flat {
        fn state_dim(&self) -> usize {
            self.0
        }
        fn obs_dim(&self) -> usize {
            1
        }
        fn propagate_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
            for ((o, a), b) in out.iter_mut().zip(x).zip(v) {
                *o = a + b;
            }
        }
        fn log_likelihood(&self, y: &[f64], _x: &[f64]) -> f64 {
            -y[0] * y[0]
        }
    }

    #[test]
    fn single_particle_always_has_unit_weight() {
        let m = LinearGaussianModel::equicorrelated(1, 0.0).unwrap();
        let mut s = scalar_state(&[0.0], &[0.0]);
        let cfg = FilterConfig {
            n_particles: 1,
            ..FilterConfig::default()
        };
        pf_step(&mut s, &m, &[5.0], &cfg, &SeedSpec::new(3)).unwrap();
        assert_eq!(s.particles.log_weights(), &[0.0]);
        let v = SeedSpec::with_path(3, &[0]).draw_standard_normal(1)[0];
        assert_eq!(s.particles.state(0), &[v]);

        let mut s = scalar_state(&[0.0], &[0.0]);
        cpf_time_update(&mut s, &m, &[5.0], &cfg, &SeedSpec::new(3)).unwrap();
        assert_eq!(s.particles.log_weights(), &[0.0]);
    }

    #[test]
    fn gaussian_tail_drives_weight_to_zero() {
        let m = LinearGaussianModel::equicorrelated(1, 0.0).unwrap();
        let mut p = scalar_state(&[0.0, 100.0], &[-libm::log(2.0); 2]);
        let ll: Vec<f64> = [0.0, 100.0]
            .iter()
            .map(|x| m.log_likelihood(&[0.0], &[*x]))
            .collect();
        for (w, l) in p.particles.log_weights_mut().iter_mut().zip(&ll) {
            *w += l;
        }
        p.particles.normalize().unwrap();
        let w = p.particles.weights();
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert_eq!(w[1], 0.0);
        assert!((p.particles.log_weights()[1] + 5000.0).abs() < 1e-9);
    }

    #[test]
    fn flat_likelihood_time_update_keeps_weights() {
        let m = Flat(2);
        let lw = [libm::log(0.2), libm::log(0.3), libm::log(0.5)];
        let mut s = FilterState::new(
            WeightedParticles::new(2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], lw.to_vec()).unwrap(),
        );
        let cfg = FilterConfig {
            n_particles: 3,
            partial_kind: PartialKind::Dirac,
            intra_step_resampling: IntraStepResampling::Disabled,
            ..FilterConfig::default()
        };
        cpf_time_update(&mut s, &m, &[0.7], &cfg, &SeedSpec::new(1)).unwrap();
        for (a, b) in s.particles.log_weights().iter().zip(&lw) {
            assert!((a - b).abs() < 1e-14);
        }
        cpf_dimension_update(&mut s, &m, &[0.7], 1, &cfg, &SeedSpec::new(1)).unwrap();
        for (a, b) in s.particles.log_weights().iter().zip(&lw) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(s.particles.prefix_depth(), Some(1));
    }

    #[test]
    fn time_update_increment_is_inflated_gaussian() {
        let m = LinearGaussianModel::equicorrelated(2, 0.5).unwrap();
        let states = vec![0.3, -0.2, 1.0, 0.4];
        let mut s = FilterState::new(
            WeightedParticles::new(2, states.clone(), vec![-libm::log(2.0); 2]).unwrap(),
        );
        let y = [0.5, 0.1];
        let cfg = FilterConfig {
            n_particles: 2,
            partial_kind: PartialKind::Exact,
            intra_step_resampling: IntraStepResampling::Disabled,
            ..FilterConfig::default()
        };
        cpf_time_update(&mut s, &m, &y, &cfg, &SeedSpec::new(0)).unwrap();
        // N(y | x, Q + I) with Q + I = [[2, .5], [.5, 2]].
        let inc = |x: &[f64]| {
            let (a, b) = (y[0] - x[0], y[1] - x[1]);
            let det = 4.0 - 0.25;
            let quad = (2.0 * a * a - 2.0 * 0.5 * a * b + 2.0 * b * b) / det;
            -0.5 * (2.0 * crate::linalg::LN_2PI + libm::log(det) + quad)
        };
        let raw = [inc(&states[0..2]), inc(&states[2..4])];
        let lse = log_sum_exp(&raw);
        for (w, r) in s.particles.log_weights().iter().zip(&raw) {
            assert!((w - (r - lse)).abs() < 1e-12);
        }
        assert_eq!(s.likelihood_evals, 2);
    }

    #[test]
    fn coordinate_with_no_influence_leaves_weights() {
        // Likelihood depends on coordinate 0 only.
        struct FirstOnly;
        impl StateSpaceModel for FirstOnly {
            fn state_dim(&self) -> usize {
                2
            }
            fn obs_dim(&self) -> usize {
                1
            }
            fn propagate_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
                out[0] = x[0] + v[0];
                out[1] = x[1] + v[1];
            }
            fn log_likelihood(&self, y: &[f64], x: &[f64]) -> f64 {
                -0.5 * (y[0] - x[0]) * (y[0] - x[0])
            }
        }
        let mut s = FilterState::from_isotropic_prior(&[0.0, 0.0], 5, &SeedSpec::new(4)).unwrap();
        let cfg = FilterConfig {
            n_particles: 5,
            partial_kind: PartialKind::Dirac,
            intra_step_resampling: IntraStepResampling::Disabled,
            dimension_order: DimensionOrder::Fixed(vec![0, 1]),
            ..FilterConfig::default()
        };
        let seed = SeedSpec::new(8);
        cpf_time_update(&mut s, &FirstOnly, &[0.3], &cfg, &seed).unwrap();
        cpf_dimension_update(&mut s, &FirstOnly, &[0.3], 1, &cfg, &seed).unwrap();
        let before = s.particles.log_weights().to_vec();
        cpf_dimension_update(&mut s, &FirstOnly, &[0.3], 2, &cfg, &seed).unwrap();
        for (a, b) in s.particles.log_weights().iter().zip(&before) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_update_checks_prefix_length() {
        let m = LinearGaussianModel::equicorrelated(3, 0.1).unwrap();
        let mut s = FilterState::from_isotropic_prior(&[0.0; 3], 4, &SeedSpec::new(0)).unwrap();
        let cfg = FilterConfig {
            n_particles: 4,
            ..FilterConfig::default()
        };
        let seed = SeedSpec::new(1);
        assert!(matches!(
            cpf_dimension_update(&mut s, &m, &[0.0; 3], 1, &cfg, &seed),
            Err(Error::PrefixLength { .. })
        ));
        cpf_time_update(&mut s, &m, &[0.0; 3], &cfg, &seed).unwrap();
        assert!(matches!(
            cpf_dimension_update(&mut s, &m, &[0.0; 3], 2, &cfg, &seed),
            Err(Error::PrefixLength {
                expected: 1,
                found: 0
            })
        ));
        assert!(matches!(
            cpf_time_update(&mut s, &m, &[0.0; 3], &cfg, &seed),
            Err(Error::PrefixLength { .. })
        ));
    }

    #[test]
    fn eval_counters() {
        let m = LinearGaussianModel::equicorrelated(6, 0.3).unwrap();
        let cfg = FilterConfig {
            n_particles: 100,
            ..FilterConfig::default()
        };
        let mut s = FilterState::from_isotropic_prior(&[0.0; 6], 100, &SeedSpec::new(0)).unwrap();
        cpf_step(&mut s, &m, &[0.1; 6], &cfg, &SeedSpec::new(1)).unwrap();
        assert_eq!(s.likelihood_evals, 700);
        assert!(s.particles.prefixes.is_none());
        let mut s = FilterState::from_isotropic_prior(&[0.0; 6], 100, &SeedSpec::new(0)).unwrap();
        pf_step(&mut s, &m, &[0.1; 6], &cfg, &SeedSpec::new(1)).unwrap();
        assert_eq!(s.likelihood_evals, 100);
        assert_eq!(
            FilterKind::Coordinate(PartialKind::Dirac).evals_per_step(100, 6),
            700
        );
    }

    #[test]
    fn weighted_mean_examples() {
        let s = scalar_state(&[4.2], &[0.0]);
        assert_eq!(estimate_mean(&s).as_slice(), &[4.2]);
        let s = scalar_state(&[0.0, 2.0], &[libm::log(0.5); 2]);
        assert!((estimate_mean(&s)[0] - 1.0).abs() < 1e-15);
        let s = scalar_state(&[0.0, 4.0], &[libm::log(0.25), libm::log(0.75)]);
        assert!((estimate_mean(&s)[0] - 3.0).abs() < 1e-15);
    }

    struct Cliff;

    impl StateSpaceModel for Cliff {
        fn state_dim(&self) -> usize {
            1
        }
        fn obs_dim(&self) -> usize {
            1
        }
        fn propagate_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
            out[0] = x[0] + v[0];
        }
        fn log_likelihood(&self, y: &[f64], x: &[f64]) -> f64 {
            if x[0] > y[0] {
                0.0
            } else {
                LOG_ZERO
            }
        }
    }

    #[test]
    fn total_degeneracy_reverts_or_fails() {
        let cfg = FilterConfig {
            n_particles: 3,
            ..FilterConfig::default()
        };
        let mut s = scalar_state(&[0.0, 0.1, 0.2], &[libm::log(1.0 / 3.0); 3]);
        let before = s.particles.log_weights().to_vec();
        pf_step(&mut s, &Cliff, &[1e6], &cfg, &SeedSpec::new(0)).unwrap();
        assert_eq!(s.degenerate_events, 1);
        assert_eq!(s.particles.log_weights(), &before[..]);

        let strict = FilterConfig {
            degeneracy: DegeneracyPolicy::Fail,
            ..cfg.clone()
        };
        let mut s = scalar_state(&[0.0, 0.1, 0.2], &[libm::log(1.0 / 3.0); 3]);
        assert_eq!(
            pf_step(&mut s, &Cliff, &[1e6], &strict, &SeedSpec::new(0)),
            Err(Error::DegenerateEnsemble)
        );

        let mut s = scalar_state(&[0.0, 0.1, 0.2], &[libm::log(1.0 / 3.0); 3]);
        for kind in [PartialKind::Dirac] {
            let cfg = FilterConfig {
                partial_kind: kind,
                ..cfg.clone()
            };
            cpf_step(&mut s, &Cliff, &[1e6], &cfg, &SeedSpec::new(0)).unwrap();
            assert!(s.degenerate_events >= 1);
            assert!(s.particles.log_weights().iter().all(|w| !w.is_nan()));
        }
    }

    #[test]
    fn partial_death_resamples_cleanly() {
        let cfg = FilterConfig {
            n_particles: 4,
            ..FilterConfig::default()
        };
        let mut s = scalar_state(&[-10.0, -10.0, -10.0, 10.0], &[libm::log(0.25); 4]);
        pf_step(&mut s, &Cliff, &[0.0], &cfg, &SeedSpec::new(5)).unwrap();
        assert_eq!(s.degenerate_events, 0);
        assert!(s.particles.states().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn random_order_is_a_permutation_and_seeded() {
        let o = DimensionOrder::RandomPerStep;
        let a = o.resolve(10, &SeedSpec::new(1)).unwrap();
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_eq!(a, o.resolve(10, &SeedSpec::new(1)).unwrap());
        assert!(DimensionOrder::Fixed(vec![0, 0, 1])
            .resolve(3, &SeedSpec::new(0))
            .is_err());
    }

    #[test]
    fn config_validation() {
        let bad = FilterConfig {
            ess_fraction: 0.0,
            ..FilterConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = FilterConfig {
            n_particles: 0,
            ..FilterConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
