//! Running cells and whole grids.
//!
//! Every run of a cell derives its streams from
//! `master_seed / scenario / D / bits(ρ) / run`: the ground truth from
//! `…/0`, the filter prior from `…/1` and step `t` from `…/2/t`. The filter
//! is deliberately not part of the path, so all filters of a cell see the
//! same trajectories and observations.

use cpf_core::{estimate_mean, FilterState, KalmanBelief, SeedSpec, StateVector};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, FilterId, Scenario};
use crate::scenario::{build_model, object_dim};
use crate::stats::{mean_std, object_rmse, prob_smaller_error};
use crate::{BenchError, Result};

/// Error statistics of one `(D, ρ, filter)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStatistics {
    pub scenario: Scenario,
    pub dim: usize,
    pub rho: f64,
    pub filter: FilterId,
    pub n_particles: usize,
    pub steps: usize,
    pub runs: usize,
    /// RMSE of each run, over its time steps.
    pub rmse_per_run: Vec<f64>,
    pub rmse_mean: f64,
    /// Sample standard deviation of `rmse_per_run`.
    pub rmse_std: f64,
    /// Steps, summed over runs, whose update had to be reverted.
    pub degenerate_steps: u64,
    /// (Partial) likelihood evaluations, summed over runs and steps.
    pub likelihood_evals: u64,
    pub seed: u64,
}

impl CellStatistics {
    /// Assembles a cell from its per-run outcomes.
    pub fn from_runs(
        cfg: &ExperimentConfig,
        dim: usize,
        rho: f64,
        filter: FilterId,
        outcomes: &[RunOutcome],
    ) -> Self {
        let rmse_per_run: Vec<f64> = outcomes.iter().map(|o| o.rmse).collect();
        let (rmse_mean, rmse_std) = mean_std(&rmse_per_run);
        Self {
            scenario: cfg.scenario,
            dim,
            rho,
            filter,
            n_particles: if filter == FilterId::Kf {
                0
            } else {
                cfg.particles_for(filter, dim)
            },
            steps: cfg.steps,
            runs: outcomes.len(),
            rmse_per_run,
            rmse_mean,
            rmse_std,
            degenerate_steps: outcomes.iter().map(|o| o.degenerate_steps).sum(),
            likelihood_evals: outcomes.iter().map(|o| o.likelihood_evals).sum(),
            seed: cfg.master_seed,
        }
    }

    /// Mean likelihood evaluations per filter step.
    pub fn evals_per_step(&self) -> f64 {
        self.likelihood_evals as f64 / (self.runs * self.steps) as f64
    }

    /// `P(error of self < error of other)` under the Gaussian error model.
    pub fn prob_smaller_error(&self, other: &CellStatistics) -> f64 {
        prob_smaller_error(
            self.rmse_mean,
            self.rmse_std,
            other.rmse_mean,
            other.rmse_std,
        )
    }
}

/// What one run of one filter produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub rmse: f64,
    pub degenerate_steps: u64,
    pub likelihood_evals: u64,
}

fn run_seed(cfg: &ExperimentConfig, dim: usize, rho: f64, run: usize) -> SeedSpec {
    SeedSpec::with_path(
        cfg.master_seed,
        &[
            cfg.scenario.stream_tag(),
            dim as u64,
            rho.to_bits(),
            run as u64,
        ],
    )
}

/// One run: simulate, filter, score.
pub fn run_once(
    cfg: &ExperimentConfig,
    dim: usize,
    rho: f64,
    filter: FilterId,
    run: usize,
) -> Result<RunOutcome> {
    let model = build_model(cfg, dim, rho)?;
    let seed = run_seed(cfg, dim, rho, run);
    let x0 = StateVector::from(seed.child(0).draw_standard_normal(dim));
    let (truth, observations) = model.simulate(cfg.steps, &x0, &seed.child(0))?;
    let prior_mean = vec![0.0; dim];

    let mut estimates = Vec::with_capacity(cfg.steps);
    let (degenerate_steps, likelihood_evals) = match filter.kind() {
        None => {
            let mut belief = KalmanBelief::isotropic(prior_mean);
            for y in &observations {
                belief = belief.step(y, &model)?;
                estimates.push(StateVector::from(belief.mean.clone()));
            }
            (0, 0)
        }
        Some(kind) => {
            let fcfg = cfg.filter_config(filter, dim);
            let mut state =
                FilterState::from_isotropic_prior(&prior_mean, fcfg.n_particles, &seed.child(1))?;
            let steps = seed.child(2);
            for (t, y) in observations.iter().enumerate() {
                kind.step(&mut state, &model, y, &fcfg, &steps.child(t as u64))?;
                estimates.push(estimate_mean(&state));
            }
            (state.degenerate_events, state.likelihood_evals)
        }
    };
    Ok(RunOutcome {
        rmse: object_rmse(&estimates, &truth, object_dim(cfg, dim))?,
        degenerate_steps,
        likelihood_evals,
    })
}

/// All runs of one cell, sequentially.
pub fn run_cell(
    cfg: &ExperimentConfig,
    dim: usize,
    rho: f64,
    filter: FilterId,
) -> Result<CellStatistics> {
    cfg.validate()?;
    let outcomes = (0..cfg.runs)
        .map(|r| run_once(cfg, dim, rho, filter, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(CellStatistics::from_runs(cfg, dim, rho, filter, &outcomes))
}

/// `P(error_a < error_b)` for one grid point and an ordered filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WinProbability {
    pub dim: usize,
    pub rho: f64,
    pub filter_a: FilterId,
    pub filter_b: FilterId,
    pub p_a_less_b: f64,
}

/// Cells in sweep order (grid point, then configured filter order) and the
/// pairwise win probabilities of every ordered pair of distinct filters.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub config: ExperimentConfig,
    pub cells: Vec<CellStatistics>,
    pub win_probabilities: Vec<WinProbability>,
}

impl GridResult {
    pub fn cell(&self, dim: usize, rho: f64, filter: FilterId) -> Option<&CellStatistics> {
        self.cells
            .iter()
            .find(|c| c.dim == dim && c.rho == rho && c.filter == filter)
    }

    pub fn win_probability(&self, dim: usize, rho: f64, a: FilterId, b: FilterId) -> Option<f64> {
        self.win_probabilities
            .iter()
            .find(|w| w.dim == dim && w.rho == rho && w.filter_a == a && w.filter_b == b)
            .map(|w| w.p_a_less_b)
    }

    /// Unordered filter pairs in configured order, `(earlier, later)`.
    pub fn filter_pairs(&self) -> Vec<(FilterId, FilterId)> {
        let f = &self.config.filters;
        (0..f.len())
            .flat_map(|i| (i + 1..f.len()).map(move |j| (f[i], f[j])))
            .collect()
    }
}

/// Runs the whole grid on `workers` threads (`0` = rayon's default).
///
/// Runs are scheduled independently but merged by grid position, so the
/// result does not depend on the worker count.
pub fn grid_sweep(cfg: &ExperimentConfig, workers: usize) -> Result<GridResult> {
    cfg.validate()?;
    let points = cfg.grid_points();
    let tasks: Vec<(usize, FilterId, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(p, _)| {
            cfg.filters
                .iter()
                .flat_map(move |&f| (0..cfg.runs).map(move |r| (p, f, r)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, f, r)| run_once(cfg, points[p].dim, points[p].rho, f, r))
            .collect::<Result<Vec<_>>>()
    })?;

    let cells: Vec<CellStatistics> = tasks
        .chunks(cfg.runs)
        .zip(outcomes.chunks(cfg.runs))
        .map(|(task, runs)| {
            let (p, f, _) = task[0];
            CellStatistics::from_runs(cfg, points[p].dim, points[p].rho, f, runs)
        })
        .collect();

    let k = cfg.filters.len();
    let mut win_probabilities = Vec::new();
    for point_cells in cells.chunks(k) {
        for a in point_cells {
            for b in point_cells {
                if a.filter != b.filter {
                    win_probabilities.push(WinProbability {
                        dim: a.dim,
                        rho: a.rho,
                        filter_a: a.filter,
                        filter_b: b.filter,
                        p_a_less_b: a.prob_smaller_error(b),
                    });
                }
            }
        }
    }
    Ok(GridResult {
        config: cfg.clone(),
        cells,
        win_probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            dims: vec![1, 3],
            rhos: vec![0.0, 0.5],
            filters: vec![FilterId::Pf, FilterId::CpfDirac],
            n_pf: 60,
            steps: 8,
            runs: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn cell_statistics_are_sample_statistics() {
        let cfg = small();
        let c = run_cell(&cfg, 3, 0.5, FilterId::CpfDirac).unwrap();
        assert_eq!(c.rmse_per_run.len(), 3);
        let (m, s) = mean_std(&c.rmse_per_run);
        assert_eq!((c.rmse_mean, c.rmse_std), (m, s));
        assert_eq!(c.n_particles, 20);
        assert_eq!(c.likelihood_evals, 20 * 4 * 8 * 3);
    }

    #[test]
    fn grid_matches_individual_cells() {
        let cfg = small();
        let g = grid_sweep(&cfg, 2).unwrap();
        assert_eq!(g.cells.len(), 8);
        assert_eq!(g.win_probabilities.len(), 8);
        let direct = run_cell(&cfg, 3, 0.0, FilterId::Pf).unwrap();
        assert_eq!(g.cell(3, 0.0, FilterId::Pf), Some(&direct));
        for w in &g.win_probabilities {
            let back = g
                .win_probability(w.dim, w.rho, w.filter_b, w.filter_a)
                .unwrap();
            assert!((w.p_a_less_b + back - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kalman_reference_has_no_particles() {
        let cfg = ExperimentConfig {
            filters: vec![FilterId::Kf],
            ..small()
        };
        let c = run_cell(&cfg, 3, 0.5, FilterId::Kf).unwrap();
        assert_eq!((c.n_particles, c.likelihood_evals), (0, 0));
        assert!(c.rmse_mean > 0.0 && c.rmse_mean < 2.0);
    }
}
