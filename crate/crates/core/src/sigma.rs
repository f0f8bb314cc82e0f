//! Priors on the naturalness width sigma_a and its marginalization grid.
//!
//! sigma_a is given either a Jeffreys prior (scale invariant, 1/sigma_a) or
//! a scaled inverse-chi^2 shape; Jeffreys is the nu0 = 0 member of that
//! family. Only unnormalized log shapes are exposed: every downstream use
//! normalizes explicitly, so prior normalization constants would cancel.
//!
//! Marginalization integrates over a fixed log-spaced grid with trapezoid
//! weights in sigma_a itself. The grid's normalization constant doubles as
//! the (unnormalized) model evidence, so predictive marginalization and
//! evidence are always computed from the same quadrature.

use crate::error::{Error, Result};
use crate::linear::{DesignSystem, lec_posterior, log_marginal_likelihood};
use serde::{Deserialize, Serialize};

/// Prior shape on sigma_a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SigmaPrior {
    Jeffreys,
    /// Scaled inverse-chi^2 shape sigma^-(1+nu0) exp(-nu0 tau0^2 / (2 sigma^2)).
    #[serde(rename = "invchi2")]
    ScaledInvChi2 {
        #[serde(default = "default_hyper")]
        nu0: f64,
        #[serde(default = "default_hyper")]
        tau0: f64,
    },
}

fn default_hyper() -> f64 {
    1.5
}

impl Default for SigmaPrior {
    fn default() -> Self {
        SigmaPrior::ScaledInvChi2 { nu0: default_hyper(), tau0: default_hyper() }
    }
}

impl SigmaPrior {
    pub fn validate(&self) -> Result<()> {
        if let SigmaPrior::ScaledInvChi2 { nu0, tau0 } = self {
            if !(nu0.is_finite() && *nu0 >= 0.0) {
                return Err(Error::InvalidArgument(format!("nu0 must be finite and >= 0, got {nu0}")));
            }
            if *nu0 > 0.0 && !(tau0.is_finite() && *tau0 > 0.0) {
                return Err(Error::InvalidArgument(format!("tau0 must be finite and > 0, got {tau0}")));
            }
        }
        Ok(())
    }

    /// (nu0, tau0) with Jeffreys as the nu0 = 0 member.
    pub fn hyper(&self) -> (f64, f64) {
        match self {
            SigmaPrior::Jeffreys => (0.0, 0.0),
            SigmaPrior::ScaledInvChi2 { nu0, tau0 } => (*nu0, *tau0),
        }
    }
}

fn check_sigma(sigma_a: f64) -> Result<()> {
    if !(sigma_a > 0.0 && sigma_a.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma_a must be finite and > 0, got {sigma_a}")));
    }
    Ok(())
}

/// Unnormalized log prior shape at sigma_a.
pub fn sigma_prior_log_density(prior: &SigmaPrior, sigma_a: f64) -> Result<f64> {
    check_sigma(sigma_a)?;
    prior.validate()?;
    let (nu0, tau0) = prior.hyper();
    Ok(-(1.0 + nu0) * sigma_a.ln() - nu0 * tau0 * tau0 / (2.0 * sigma_a * sigma_a))
}

/// Direct path to the unnormalized log posterior of sigma_a:
/// log marginal likelihood plus log prior shape.
pub fn sigma_posterior_unnorm_log(ds: &DesignSystem, prior: &SigmaPrior, sigma_a: f64) -> Result<f64> {
    Ok(log_marginal_likelihood(ds, sigma_a)? + sigma_prior_log_density(prior, sigma_a)?)
}

/// Semi-analytic path: the same posterior with the sigma_a-independent
/// factor exp(-chi2_min/2) dropped, written entirely in the eigenbasis of A.
/// Differs from the direct path by the constant chi2_min/2; needs an
/// invertible design.
pub fn sigma_posterior_semianalytic_log(
    ds: &DesignSystem,
    prior: &SigmaPrior,
    sigma_a: f64,
) -> Result<f64> {
    check_sigma(sigma_a)?;
    prior.validate()?;
    if ds.is_singular() {
        return Err(Error::SingularDesign(format!(
            "semi-analytic sigma_a posterior needs invertible A (M = {}, N = {})",
            ds.m(),
            ds.n_points()
        )));
    }
    let (nu0, tau0) = prior.hyper();
    let s2 = sigma_a * sigma_a;
    let m = ds.m() as f64;
    let alpha0 = ds.alpha0().expect("nonsingular design has alpha0");
    let beta0 = ds.eigenvectors().transpose() * alpha0;
    let quad: f64 = beta0
        .iter()
        .zip(ds.eigenvalues())
        .map(|(b, l)| b * b / (1.0 / l + s2))
        .sum();
    let log_det: f64 = ds.eigenvalues().iter().map(|l| (l + 1.0 / s2).ln()).sum();
    Ok(-(m + 2.0 + nu0) * sigma_a.ln()
        - nu0 * tau0 * tau0 / (2.0 * s2)
        - 0.5 * log_det
        - 0.5 * quad)
}

/// Quadrature grid for sigma_a marginalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 13, lo: 0.25, hi: 10.0 }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidArgument(format!("sigma grid needs >= 3 nodes, got {}", self.n)));
        }
        if !(self.lo > 0.0 && self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidArgument(format!(
                "sigma grid bounds must satisfy 0 < lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Log-spaced nodes with trapezoid weights in sigma_a and the normalized
/// posterior mass each node carries.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaGrid {
    pub nodes: Vec<f64>,
    pub trap_weights: Vec<f64>,
    /// posterior mass per node: trap_weight * posterior, normalized to sum 1.
    pub posterior_mass: Vec<f64>,
    /// log of the grid integral of likelihood * prior shape over [lo, hi];
    /// this is the unnormalized log evidence of the design's order.
    pub log_norm: f64,
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let mx = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (llo + step * i as f64).exp()
            }
        })
        .collect()
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|k| {
            if k == 0 {
                (nodes[1] - nodes[0]) / 2.0
            } else if k == n - 1 {
                (nodes[n - 1] - nodes[n - 2]) / 2.0
            } else {
                (nodes[k + 1] - nodes[k - 1]) / 2.0
            }
        })
        .collect()
}

/// Builds the marginalization grid for one design, using the direct
/// posterior path (valid for singular designs too).
pub fn build_sigma_grid(ds: &DesignSystem, prior: &SigmaPrior, cfg: &GridConfig) -> Result<SigmaGrid> {
    cfg.validate()?;
    prior.validate()?;
    let nodes = log_spaced(cfg.lo, cfg.hi, cfg.n);
    let trap_weights = trapezoid_weights(&nodes);
    let log_terms: Vec<f64> = nodes
        .iter()
        .zip(&trap_weights)
        .map(|(&s, &w)| Ok(w.ln() + sigma_posterior_unnorm_log(ds, prior, s)?))
        .collect::<Result<_>>()?;
    let log_norm = log_sum_exp(&log_terms);
    if !log_norm.is_finite() {
        return Err(Error::Numeric(format!("sigma grid normalization is not finite ({log_norm})")));
    }
    let posterior_mass = log_terms.iter().map(|t| (t - log_norm).exp()).collect();
    Ok(SigmaGrid { nodes, trap_weights, posterior_mass, log_norm })
}

impl SigmaGrid {
    /// Degenerate one-node grid pinning sigma_a = sigma0 (a delta prior).
    /// Its normalization is the marginal likelihood at sigma0 itself.
    pub fn delta(ds: &DesignSystem, sigma0: f64) -> Result<SigmaGrid> {
        check_sigma(sigma0)?;
        Ok(SigmaGrid {
            nodes: vec![sigma0],
            trap_weights: vec![1.0],
            posterior_mass: vec![1.0],
            log_norm: log_marginal_likelihood(ds, sigma0)?,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The grid node carrying the largest posterior mass.
    pub fn mode_node(&self) -> f64 {
        let (k, _) = self
            .posterior_mass
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is nonempty");
        self.nodes[k]
    }

    /// Coefficient posteriors at every node, in node order.
    pub fn posteriors(&self, ds: &DesignSystem) -> Result<Vec<crate::linear::LecPosterior>> {
        self.nodes.iter().map(|&s| lec_posterior(ds, s)).collect()
    }
}
