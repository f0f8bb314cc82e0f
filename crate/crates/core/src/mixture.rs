//! Gaussian-mixture predictives and Bayesian model averaging.
//!
//! With sigma_a on a quadrature grid, every predictive is an exact finite
//! Gaussian mixture: one component per grid node for a fixed order, and the
//! evidence-weighted concatenation of those for the model average. Working
//! with the components directly (instead of sampling the marginal) keeps
//! means, variances and densities exact up to the grid itself.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::evidence::ModelWeights;
use crate::linear::{DesignSystem, LecPosterior, MAX_ORDER, build_design, predictive_at};
use crate::sigma::{GridConfig, SigmaGrid, SigmaPrior, build_sigma_grid};
use crate::toy::Dataset;

/// Where a mixture component came from: polynomial order and sigma_a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentLabel {
    pub m: usize,
    pub sigma_a: f64,
}

/// One Gaussian component of a predictive mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
    pub label: ComponentLabel,
}

/// A finite Gaussian mixture with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixturePdf {
    components: Vec<Component>,
}

impl GaussianMixturePdf {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        }
        for c in &components {
            if !(c.weight.is_finite() && c.weight >= 0.0 && c.mean.is_finite()) {
                return Err(Error::Numeric(format!("bad mixture component {c:?}")));
            }
            if !(c.sd.is_finite() && c.sd > 0.0) {
                return Err(Error::Numeric(format!("component sd must be positive, got {}", c.sd)));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::Numeric(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn density(&self, f: f64) -> f64 {
        const INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7;
        self.components
            .iter()
            .map(|c| {
                let z = (f - c.mean) / c.sd;
                c.weight * INV_SQRT_TAU / c.sd * (-0.5 * z * z).exp()
            })
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let second: f64 =
            self.components.iter().map(|c| c.weight * (c.sd * c.sd + c.mean * c.mean)).sum();
        (second - mean * mean).max(0.0)
    }

    /// One draw from the mixture. Always consumes exactly two variates
    /// (component pick, then the normal), so the stream position after a
    /// sample never depends on which component was hit.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (k, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                chosen = k;
                break;
            }
        }
        let z: f64 = StandardNormal.sample(rng);
        let c = &self.components[chosen];
        c.mean + c.sd * z
    }
}

pub fn mixture_mean(pdf: &GaussianMixturePdf) -> f64 {
    pdf.mean()
}

pub fn mixture_variance(pdf: &GaussianMixturePdf) -> f64 {
    pdf.variance()
}

fn components_at(
    grid: &SigmaGrid,
    posteriors: &[LecPosterior],
    m: usize,
    x: f64,
    scale: f64,
) -> Result<Vec<Component>> {
    grid.posterior_mass
        .iter()
        .zip(posteriors)
        .map(|(&mass, lp)| {
            let (mean, var) = predictive_at(lp, x);
            let sd = var.sqrt();
            if !(sd.is_finite() && sd > 0.0) {
                return Err(Error::Numeric(format!(
                    "predictive sd at x = {x} is {sd} (order {m}, sigma_a = {})",
                    lp.sigma_a
                )));
            }
            Ok(Component {
                weight: scale * mass,
                mean,
                sd,
                label: ComponentLabel { m, sigma_a: lp.sigma_a },
            })
        })
        .collect()
}

/// Predictive mixture at `x` for one order: one component per sigma_a node.
pub fn fixed_order_pdf(ds: &DesignSystem, grid: &SigmaGrid, x: f64) -> Result<GaussianMixturePdf> {
    let posteriors = grid.posteriors(ds)?;
    GaussianMixturePdf::new(components_at(grid, &posteriors, ds.m(), x, 1.0)?)
}

struct ModelFit {
    grid: SigmaGrid,
    posteriors: Vec<LecPosterior>,
}

/// All orders 0..=m_max fitted to one dataset, with their evidence weights.
/// Designs, grids and node posteriors are built once and reused across every
/// prediction the fit serves.
pub struct BmaFit {
    fits: Vec<ModelFit>,
    weights: ModelWeights,
}

impl BmaFit {
    pub fn new(
        dataset: &Dataset,
        m_max: usize,
        prior: &SigmaPrior,
        grid_cfg: &GridConfig,
    ) -> Result<Self> {
        Self::build(dataset, m_max, |ds| build_sigma_grid(ds, prior, grid_cfg))
    }

    /// Fit with sigma_a pinned to `sigma0` instead of marginalized.
    pub fn with_delta_prior(dataset: &Dataset, m_max: usize, sigma0: f64) -> Result<Self> {
        Self::build(dataset, m_max, |ds| SigmaGrid::delta(ds, sigma0))
    }

    fn build(
        dataset: &Dataset,
        m_max: usize,
        make_grid: impl Fn(&DesignSystem) -> Result<SigmaGrid>,
    ) -> Result<Self> {
        if m_max > MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "m_max = {m_max} exceeds the cap {MAX_ORDER}"
            )));
        }
        let fits = (0..=m_max)
            .map(|m| {
                let design = build_design(dataset, m)?;
                let grid = make_grid(&design)?;
                let posteriors = grid.posteriors(&design)?;
                Ok(ModelFit { grid, posteriors })
            })
            .collect::<Result<Vec<_>>>()?;
        let weights =
            ModelWeights::from_log_unnorm(fits.iter().map(|f| f.grid.log_norm).collect())?;
        Ok(Self { fits, weights })
    }

    pub fn m_max(&self) -> usize {
        self.fits.len() - 1
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    pub fn grid(&self, m: usize) -> &SigmaGrid {
        &self.fits[m].grid
    }

    fn check_order(&self, m: usize) -> Result<()> {
        if m > self.m_max() {
            return Err(Error::InvalidArgument(format!(
                "order {m} not in this fit (m_max = {})",
                self.m_max()
            )));
        }
        Ok(())
    }

    /// Predictive mixture at `x` for one of the fitted orders.
    pub fn fixed_order_pdf(&self, m: usize, x: f64) -> Result<GaussianMixturePdf> {
        self.check_order(m)?;
        let f = &self.fits[m];
        GaussianMixturePdf::new(components_at(&f.grid, &f.posteriors, m, x, 1.0)?)
    }

    /// Model-averaged predictive at `x`: the concatenation of every order's
    /// mixture, each scaled by pr(M | D).
    pub fn bma_pdf(&self, x: f64) -> Result<GaussianMixturePdf> {
        let mut comps = Vec::new();
        for (m, f) in self.fits.iter().enumerate() {
            comps.extend(components_at(&f.grid, &f.posteriors, m, x, self.weights.weight(m))?);
        }
        GaussianMixturePdf::new(comps)
    }

    /// Mean vector and second-moment matrix of the coefficients under the
    /// model average, in the (m_max+1)-dimensional embedding where an order-m
    /// model contributes exact zeros for coefficients above m.
    pub fn lec_moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let dim = self.m_max() + 1;
        let mut mean = DVector::zeros(dim);
        let mut second = DMatrix::zeros(dim, dim);
        for (m, f) in self.fits.iter().enumerate() {
            let wm = self.weights.weight(m);
            for (lp, &mass) in f.posteriors.iter().zip(&f.grid.posterior_mass) {
                let w = wm * mass;
                for i in 0..=m {
                    mean[i] += w * lp.mean[i];
                    for j in 0..=m {
                        second[(i, j)] += w * (lp.cov[(i, j)] + lp.mean[i] * lp.mean[j]);
                    }
                }
            }
        }
        (mean, second)
    }

    /// Mean and variance of coefficient a_i under the model average.
    pub fn bma_lec(&self, i: usize) -> Result<(f64, f64)> {
        self.check_order(i)?;
        let (mean, second) = self.lec_moments();
        Ok((mean[i], (second[(i, i)] - mean[i] * mean[i]).max(0.0)))
    }
}

/// Convenience wrapper: fit all orders and return the averaged predictive.
pub fn bma_pdf(
    dataset: &Dataset,
    m_max: usize,
    prior: &SigmaPrior,
    grid_cfg: &GridConfig,
    x: f64,
) -> Result<GaussianMixturePdf> {
    BmaFit::new(dataset, m_max, prior, grid_cfg)?.bma_pdf(x)
}
