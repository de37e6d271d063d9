//! Experiment configuration and its TOML file form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use cpf_core::{
    DimensionOrder, FilterConfig, FilterKind, IntraStepResampling, PartialKind, Resampler,
};
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

/// Filters the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterId {
    Pf,
    CpfExact,
    CpfDirac,
    /// Kalman filter reference; exact for the linear-Gaussian scenarios.
    Kf,
}

impl FilterId {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterId::Pf => "pf",
            FilterId::CpfExact => "cpf_exact",
            FilterId::CpfDirac => "cpf_dirac",
            FilterId::Kf => "kf",
        }
    }

    /// Particle filter kind, `None` for the Kalman reference.
    pub fn kind(self) -> Option<FilterKind> {
        match self {
            FilterId::Pf => Some(FilterKind::Particle),
            FilterId::CpfExact => Some(FilterKind::Coordinate(PartialKind::Exact)),
            FilterId::CpfDirac => Some(FilterKind::Coordinate(PartialKind::Dirac)),
            FilterId::Kf => None,
        }
    }

    pub fn is_coordinate(self) -> bool {
        matches!(self, FilterId::CpfExact | FilterId::CpfDirac)
    }
}

impl fmt::Display for FilterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "pf" => Ok(FilterId::Pf),
            "cpf_exact" => Ok(FilterId::CpfExact),
            "cpf_dirac" => Ok(FilterId::CpfDirac),
            "kf" => Ok(FilterId::Kf),
            _ => Err(BenchError::Config(format!("unknown filter `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// One equicorrelated observation covariance `Q(D, ρ)`.
    #[default]
    Equicorrelated,
    /// `K` independent equicorrelated blocks.
    Block,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Equicorrelated => "equicorrelated",
            Scenario::Block => "block",
        }
    }

    pub(crate) fn stream_tag(self) -> u64 {
        match self {
            Scenario::Equicorrelated => 0,
            Scenario::Block => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResamplerId {
    Multinomial,
    #[default]
    Systematic,
}

impl From<ResamplerId> for Resampler {
    fn from(r: ResamplerId) -> Self {
        match r {
            ResamplerId::Multinomial => Resampler::Multinomial,
            ResamplerId::Systematic => Resampler::Systematic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderId {
    #[default]
    Identity,
    Random,
}

/// A full experiment: the `(D, ρ, filter)` grid plus every knob that
/// affects the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub dims: Vec<usize>,
    pub rhos: Vec<f64>,
    pub filters: Vec<FilterId>,
    /// Particle-filter particle count; also the evaluation budget.
    pub n_pf: usize,
    /// Give coordinate filters `max(2, ⌊n_pf / D⌋)` particles.
    pub budget_parity: bool,
    #[serde(alias = "T")]
    pub steps: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub block_size: usize,
    pub block_rho: f64,
    /// Object counts `K` for the block scenario.
    pub block_counts: Vec<usize>,
    pub ess_fraction: f64,
    pub resampler: ResamplerId,
    pub intra_step_resampling: bool,
    pub dimension_order: OrderId,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Equicorrelated,
            dims: vec![1, 2, 5, 10, 15, 20, 25],
            rhos: (0..10).map(|k| k as f64 / 10.0).collect(),
            filters: vec![FilterId::Pf, FilterId::CpfExact, FilterId::CpfDirac],
            n_pf: 2000,
            budget_parity: true,
            steps: 100,
            runs: 10,
            master_seed: 0,
            block_size: 6,
            block_rho: 0.5,
            block_counts: vec![1, 3, 6, 9, 12],
            ess_fraction: 0.5,
            resampler: ResamplerId::Systematic,
            intra_step_resampling: true,
            dimension_order: OrderId::Identity,
        }
    }
}

/// One `(D, ρ)` point of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub dim: usize,
    pub rho: f64,
}

impl ExperimentConfig {
    /// The default block-scaling experiment.
    pub fn block_default() -> Self {
        Self {
            scenario: Scenario::Block,
            filters: vec![FilterId::Pf, FilterId::CpfDirac],
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    /// State dimensions actually swept.
    pub fn effective_dims(&self) -> Vec<usize> {
        match self.scenario {
            Scenario::Equicorrelated => self.dims.clone(),
            Scenario::Block => self
                .block_counts
                .iter()
                .map(|k| k * self.block_size)
                .collect(),
        }
    }

    /// Correlations actually swept.
    pub fn effective_rhos(&self) -> Vec<f64> {
        match self.scenario {
            Scenario::Equicorrelated => self.rhos.clone(),
            Scenario::Block => vec![self.block_rho],
        }
    }

    /// Grid points in sweep order: dimension-major, then correlation.
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let rhos = self.effective_rhos();
        self.effective_dims()
            .into_iter()
            .flat_map(|dim| rhos.iter().map(move |&rho| GridPoint { dim, rho }))
            .collect()
    }

    /// Particles given to `filter` in dimension `dim`.
    pub fn particles_for(&self, filter: FilterId, dim: usize) -> usize {
        if self.budget_parity && filter.is_coordinate() {
            (self.n_pf / dim).max(2)
        } else {
            self.n_pf
        }
    }

    pub fn filter_config(&self, filter: FilterId, dim: usize) -> FilterConfig {
        FilterConfig {
            n_particles: self.particles_for(filter, dim),
            ess_fraction: self.ess_fraction,
            resampler: self.resampler.into(),
            dimension_order: match self.dimension_order {
                OrderId::Identity => DimensionOrder::Identity,
                OrderId::Random => DimensionOrder::RandomPerStep,
            },
            intra_step_resampling: IntraStepResampling::from(self.intra_step_resampling),
            partial_kind: match filter {
                FilterId::CpfDirac => PartialKind::Dirac,
                _ => PartialKind::Exact,
            },
            ..FilterConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(BenchError::Config(msg.to_string()));
        if self.filters.is_empty() {
            return fail("at least one filter is required");
        }
        let mut sorted = self.filters.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.filters.len() {
            return fail("filters must not repeat");
        }
        if self.runs < 2 {
            return fail("runs must be at least 2");
        }
        if self.steps == 0 {
            return fail("steps must be at least 1");
        }
        if self.n_pf == 0 {
            return fail("n_pf must be at least 1");
        }
        if !(self.ess_fraction > 0.0 && self.ess_fraction <= 1.0) {
            return fail("ess_fraction must lie in (0, 1]");
        }
        match self.scenario {
            Scenario::Equicorrelated => {
                if self.dims.is_empty() || self.dims.contains(&0) {
                    return fail("dims must be a non-empty list of positive integers");
                }
                if self.rhos.is_empty() || self.rhos.iter().any(|r| !(0.0..1.0).contains(r)) {
                    return fail("rhos must be a non-empty list of values in [0, 1)");
                }
            }
            Scenario::Block => {
                if self.block_size == 0 {
                    return fail("block_size must be at least 1");
                }
                if self.block_counts.is_empty() || self.block_counts.contains(&0) {
                    return fail("block_counts must be a non-empty list of positive integers");
                }
                if !(0.0..1.0).contains(&self.block_rho) {
                    return fail("block_rho must lie in [0, 1)");
                }
            }
        }
        let max_dim = self.effective_dims().into_iter().max().unwrap_or(1);
        if self.budget_parity && self.n_pf < 2 * max_dim {
            return Err(BenchError::Config(format!(
                "budget parity needs n_pf >= 2 * max dimension ({})",
                2 * max_dim
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_toml() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            dims = [1, 2]
            rhos = [0.0, 0.5]
            filters = ["pf", "cpf_dirac"]
            n_pf = 200
            T = 20
            runs = 3
            master_seed = 9
            "#,
        )
        .unwrap();
        assert_eq!(cfg.steps, 20);
        assert_eq!(cfg.filters, vec![FilterId::Pf, FilterId::CpfDirac]);
        assert!(cfg.budget_parity);
        assert_eq!(cfg.grid_points().len(), 4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str("dimz = [1]").unwrap_err();
        assert!(err.to_string().contains("dimz"), "{err}");
    }

    #[test]
    fn validation_errors() {
        for text in [
            "runs = 1",
            "rhos = [1.0]",
            "filters = []",
            "filters = [\"pf\", \"pf\"]",
            "dims = [0]",
            "n_pf = 10\ndims = [6]",
            "ess_fraction = 0.0",
            "scenario = \"block\"\nblock_rho = -0.5",
        ] {
            assert!(ExperimentConfig::from_toml_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn budget_parity_particle_counts() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.particles_for(FilterId::Pf, 25), 2000);
        assert_eq!(cfg.particles_for(FilterId::CpfExact, 25), 80);
        assert_eq!(cfg.particles_for(FilterId::CpfDirac, 72), 27);
        let no_parity = ExperimentConfig {
            budget_parity: false,
            ..cfg
        };
        assert_eq!(no_parity.particles_for(FilterId::CpfDirac, 72), 2000);
        let tiny = ExperimentConfig {
            n_pf: 7,
            ..ExperimentConfig::default()
        };
        assert_eq!(tiny.particles_for(FilterId::CpfDirac, 5), 2);
    }

    #[test]
    fn block_grid_uses_object_counts() {
        let cfg = ExperimentConfig::block_default();
        assert_eq!(cfg.effective_dims(), vec![6, 18, 36, 54, 72]);
        assert_eq!(cfg.effective_rhos(), vec![0.5]);
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::block_default();
        assert_eq!(
            ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(),
            cfg
        );
    }

    #[test]
    fn filter_names() {
        assert_eq!("cpf-exact".parse::<FilterId>().unwrap(), FilterId::CpfExact);
        assert_eq!("cpf_dirac".parse::<FilterId>().unwrap(), FilterId::CpfDirac);
        assert!("ukf".parse::<FilterId>().is_err());
    }
}
