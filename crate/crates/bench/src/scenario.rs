//! Model construction for the two experiment families.

use cpf_core::{CorrelatedCovariance, LinearGaussianModel, ObservationCovariance};

use crate::config::{ExperimentConfig, Scenario};
use crate::{BenchError, Result};

/// `K` independent objects, each an equicorrelated block of
/// `cfg.block_size` coordinates with correlation `cfg.block_rho`.
pub fn block_scaling_scenario(
    cfg: &ExperimentConfig,
    objects: usize,
) -> Result<LinearGaussianModel> {
    if objects == 0 || cfg.block_size == 0 {
        return Err(BenchError::Config(
            "block scenario needs at least one object of at least one coordinate".into(),
        ));
    }
    let block = CorrelatedCovariance::new(cfg.block_size, cfg.block_rho)?;
    let cov = ObservationCovariance::block_diagonal(&vec![block; objects])?;
    Ok(LinearGaussianModel::new(cov))
}

/// The model of grid point `(dim, rho)` under `cfg.scenario`.
///
/// For the block scenario `dim` must be a multiple of the block size and
/// `rho` is ignored in favour of `cfg.block_rho`.
pub fn build_model(cfg: &ExperimentConfig, dim: usize, rho: f64) -> Result<LinearGaussianModel> {
    match cfg.scenario {
        Scenario::Equicorrelated => Ok(LinearGaussianModel::equicorrelated(dim, rho)?),
        Scenario::Block => {
            if cfg.block_size == 0 || dim % cfg.block_size != 0 {
                return Err(BenchError::Config(format!(
                    "dimension {dim} is not a multiple of block size {}",
                    cfg.block_size
                )));
            }
            block_scaling_scenario(cfg, dim / cfg.block_size)
        }
    }
}

/// Coordinates per object when computing the RMSE: one object spanning the
/// whole state in the equicorrelated scenario, one block otherwise.
pub fn object_dim(cfg: &ExperimentConfig, dim: usize) -> usize {
    match cfg.scenario {
        Scenario::Equicorrelated => dim,
        Scenario::Block => cfg.block_size,
    }
}
