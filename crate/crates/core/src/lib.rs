//! Bayesian model averaging of truncated polynomial fits.
//!
//! Noisy data on a short interval is fit by polynomials of every truncation
//! order up to a cap, under a zero-mean "naturalness" Gaussian prior of
//! width sigma_a on each coefficient. sigma_a itself carries a prior and is
//! marginalized on a quadrature grid; the per-order evidences weight the
//! orders into a mixture predictive. Because everything is conjugate, each
//! predictive pdf is an exact finite Gaussian mixture, and credibility
//! intervals are highest-posterior-density sets of that mixture. A
//! Monte-Carlo diagnostic measures how often held-out validation data lands
//! inside those intervals.
//!
//! Modules follow the pipeline:
//! - [`toy`]: benchmark curves, pseudodata, validation draws
//! - [`linear`]: weighted polynomial design, conjugate coefficient posterior,
//!   marginal likelihood
//! - [`sigma`]: priors on sigma_a and the marginalization grid
//! - [`evidence`]: per-order evidence and model weights
//! - [`mixture`]: fixed-order and model-averaged predictive pdfs, averaged
//!   coefficients
//! - [`hpd`]: highest-posterior-density sets of Gaussian mixtures
//! - [`cid`]: the credibility-interval diagnostic harness
//! - [`io`]: dataset/posterior file formats
//! - [`seed`]: deterministic RNG stream addressing

pub mod cid;
pub mod error;
pub mod evidence;
pub mod hpd;
pub mod io;
pub mod linear;
pub mod mixture;
pub mod seed;
pub mod sigma;
pub mod toy;

pub use cid::{Band, CidConfig, CidMode, CidReport, ModelCurve, band_stats, cid_run};
pub use error::{Error, Result};
pub use evidence::{ModelWeights, log_evidence_unnorm, model_weights};
pub use hpd::{HpdConfig, HpdSet, HpdSolver, hpd_set};
pub use linear::{
    DesignSystem, LecPosterior, build_design, chi2_aug_min_quadratic, lec_posterior,
    log_marginal_likelihood, predictive_at,
};
pub use mixture::{
    BmaFit, Component, ComponentLabel, GaussianMixturePdf, bma_pdf, fixed_order_pdf, mixture_mean,
    mixture_variance,
};
pub use seed::{SeedSpec, StreamId};
pub use sigma::{
    GridConfig, SigmaGrid, SigmaPrior, build_sigma_grid, sigma_posterior_semianalytic_log,
    sigma_posterior_unnorm_log, sigma_prior_log_density,
};
pub use toy::{
    DataConfig, DataPoint, Dataset, Provenance, UnderlyingFunction, ValidationDatum,
    draw_validation, generate_dataset,
};
