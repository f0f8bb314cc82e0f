//! Per-order evidence and normalized model weights.
//!
//! The unnormalized evidence of order M is the sigma_a-grid integral of the
//! marginal likelihood times the prior shape, i.e. exactly the grid's
//! normalization constant, so evidence and predictive marginalization can
//! never disagree about quadrature. Orders are weighted uniformly a priori;
//! weights are a softmax of the unnormalized log evidences.

use crate::error::{Error, Result};
use crate::linear::{MAX_ORDER, build_design};
use crate::sigma::{GridConfig, SigmaPrior, build_sigma_grid, log_sum_exp};
use crate::toy::Dataset;

/// Posterior probabilities over polynomial order M = 0..=m_max.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub m_max: usize,
    /// Unnormalized log evidence per order.
    pub log_unnorm: Vec<f64>,
    /// Normalized pr(M | D), summing to 1.
    pub weights: Vec<f64>,
}

impl ModelWeights {
    /// Normalizes log evidences with a uniform prior over orders.
    pub fn from_log_unnorm(log_unnorm: Vec<f64>) -> Result<Self> {
        if log_unnorm.is_empty() {
            return Err(Error::InvalidArgument("need at least one model".into()));
        }
        if log_unnorm.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite log evidence in {log_unnorm:?}")));
        }
        let norm = log_sum_exp(&log_unnorm);
        let weights = log_unnorm.iter().map(|v| (v - norm).exp()).collect();
        Ok(Self { m_max: log_unnorm.len() - 1, log_unnorm, weights })
    }

    pub fn weight(&self, m: usize) -> f64 {
        self.weights[m]
    }

    /// The a-posteriori most probable order.
    pub fn argmax(&self) -> usize {
        self.weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(m, _)| m)
            .expect("nonempty weights")
    }
}

/// Unnormalized log evidence of order `m` on the given sigma_a grid.
pub fn log_evidence_unnorm(
    dataset: &Dataset,
    m: usize,
    prior: &SigmaPrior,
    grid_cfg: &GridConfig,
) -> Result<f64> {
    let ds = build_design(dataset, m)?;
    Ok(build_sigma_grid(&ds, prior, grid_cfg)?.log_norm)
}

/// Weights over M = 0..=m_max with a uniform model prior.
pub fn model_weights(
    dataset: &Dataset,
    m_max: usize,
    prior: &SigmaPrior,
    grid_cfg: &GridConfig,
) -> Result<ModelWeights> {
    if m_max > MAX_ORDER {
        return Err(Error::InvalidArgument(format!("m_max = {m_max} exceeds the cap {MAX_ORDER}")));
    }
    let log_unnorm = (0..=m_max)
        .map(|m| log_evidence_unnorm(dataset, m, prior, grid_cfg))
        .collect::<Result<Vec<_>>>()?;
    ModelWeights::from_log_unnorm(log_unnorm)
}
