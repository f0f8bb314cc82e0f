//! Monte-Carlo credibility-interval diagnostic.
//!
//! For each extrapolant (every fixed order plus the model average) the
//! diagnostic counts how often a validation datum at the target lands inside
//! the predictive's HPD set, over many regenerated pseudodata sets. A
//! well-calibrated extrapolant hits the alpha-credible set a fraction alpha
//! of the time; the hit-rate curves and their spread over repeated
//! validation draws are the deliverable.
//!
//! Every (draw, dataset) cell owns addressed RNG streams, all models within
//! a draw see identical datasets, and reduction is by cell index, so reports
//! are byte-identical at any worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hpd::{HpdConfig, HpdSolver};
use crate::linear::MAX_ORDER;
use crate::mixture::BmaFit;
use crate::seed::{SeedSpec, StreamId};
use crate::sigma::{GridConfig, SigmaPrior};
use crate::toy::{DataConfig, UnderlyingFunction, draw_validation, generate_dataset};

/// The seven credibility levels the hit-rate curves are evaluated at by
/// default.
pub const DEFAULT_ALPHAS: [f64; 7] = [0.1974, 0.383, 0.5468, 0.6827, 0.866, 0.954, 0.987];

/// What counts as the target datum for a hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CidMode {
    /// Noisy observation of the true curve at x_t, held constant across the
    /// datasets of one validation draw.
    Validation,
    /// A fresh draw from each model's own predictive, per dataset. Every
    /// model is correct about its own draws, so hit rates must reproduce the
    /// credibility levels; used as the calibration oracle.
    SelfConsistency,
}

/// Full description of one diagnostic run.
#[derive(Debug, Clone, PartialEq)]
pub struct CidConfig {
    pub function: UnderlyingFunction,
    /// Extrapolation target the hit counting happens at.
    pub x_t: f64,
    /// Credibility levels, strictly ascending in (0, 1).
    pub alphas: Vec<f64>,
    /// Pseudodata sets per validation draw.
    pub n_datasets: usize,
    /// Validation draws (independent hit-rate lines per model).
    pub n_validation: usize,
    /// Central fraction of lines the band keeps.
    pub band_fraction: f64,
    pub m_max: usize,
    pub prior: SigmaPrior,
    pub grid: GridConfig,
    pub data: DataConfig,
    pub master_seed: u64,
    pub mode: CidMode,
    pub hpd: HpdConfig,
}

impl CidConfig {
    /// Defaults: 100 datasets x 20 draws, the seven standard levels, 70%
    /// bands, orders up to 6.
    pub fn defaults(function: UnderlyingFunction, x_t: f64, master_seed: u64) -> Self {
        Self {
            function,
            x_t,
            alphas: DEFAULT_ALPHAS.to_vec(),
            n_datasets: 100,
            n_validation: 20,
            band_fraction: 0.70,
            m_max: 6,
            prior: SigmaPrior::default(),
            grid: GridConfig::default(),
            data: DataConfig::default(),
            master_seed,
            mode: CidMode::Validation,
            hpd: HpdConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.function.eval(self.x_t)?;
        if self.alphas.is_empty() {
            return Err(Error::InvalidArgument("need at least one credibility level".into()));
        }
        for pair in self.alphas.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(Error::InvalidArgument(format!(
                    "credibility levels must be strictly ascending, got {:?}",
                    self.alphas
                )));
            }
        }
        if !(self.alphas[0] > 0.0 && *self.alphas.last().expect("nonempty") < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "credibility levels must lie inside (0, 1), got {:?}",
                self.alphas
            )));
        }
        if self.n_datasets == 0 || self.n_validation == 0 {
            return Err(Error::InvalidArgument(
                "need at least one dataset and one validation draw".into(),
            ));
        }
        if !(self.band_fraction > 0.0 && self.band_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "band fraction must lie in (0, 1], got {}",
                self.band_fraction
            )));
        }
        if self.m_max > MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "m_max = {} exceeds the cap {MAX_ORDER}",
                self.m_max
            )));
        }
        self.data.validate()?;
        self.grid.validate()?;
        self.prior.validate()?;
        self.hpd.validate()?;
        Ok(())
    }
}

/// Central band of hit-rate lines at one credibility level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub alpha: f64,
    pub lo: f64,
    pub median: f64,
    pub hi: f64,
}

/// Hit-rate curves of one extrapolant.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCurve {
    /// "M0".."M6" for fixed orders, "BMA" for the average.
    pub label: String,
    /// Hit rate per validation draw (rows) and credibility level (columns).
    pub d: Vec<Vec<f64>>,
    pub bands: Vec<Band>,
}

impl ModelCurve {
    /// Hit rate pooled over validation draws, per credibility level.
    pub fn pooled(&self) -> Vec<f64> {
        let n = self.d.len() as f64;
        let mut out = vec![0.0; self.d[0].len()];
        for row in &self.d {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v / n;
            }
        }
        out
    }

    /// Mean absolute miscalibration of the pooled curve: average of
    /// |D(alpha) - alpha| over the levels.
    pub fn mean_abs_miscalibration(&self, alphas: &[f64]) -> f64 {
        let pooled = self.pooled();
        pooled.iter().zip(alphas).map(|(d, a)| (d - a).abs()).sum::<f64>() / alphas.len() as f64
    }
}

/// Result of one diagnostic run.
#[derive(Debug, Clone, PartialEq)]
pub struct CidReport {
    pub alphas: Vec<f64>,
    pub curves: Vec<ModelCurve>,
}

impl CidReport {
    pub fn curve(&self, label: &str) -> Option<&ModelCurve> {
        self.curves.iter().find(|c| c.label == label)
    }
}

/// Labels of the extrapolants a run reports, in report order.
pub fn model_labels(m_max: usize) -> Vec<String> {
    (0..=m_max).map(|m| format!("M{m}")).chain(std::iter::once("BMA".into())).collect()
}

/// Central band and median of hit-rate lines at one level. Keeps the
/// central ceil(fraction * n) sorted values, trimming evenly with the extra
/// line (odd trims) removed from the top.
pub fn band_stats(lines: &[f64], band_fraction: f64) -> Result<(f64, f64, f64)> {
    if lines.is_empty() {
        return Err(Error::InvalidArgument("band needs at least one line".into()));
    }
    if !(band_fraction > 0.0 && band_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "band fraction must lie in (0, 1], got {band_fraction}"
        )));
    }
    let mut sorted = lines.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // The guard keeps an exact-integer product (like 0.70 * 20) from being
    // rounded up by its own representation error.
    let keep = ((band_fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let trim_lo = (n - keep) / 2;
    let lo = sorted[trim_lo];
    let hi = sorted[trim_lo + keep - 1];
    let median =
        if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    Ok((lo, hi, median))
}

/// Prefixes an error with the cell it happened in, keeping its kind.
fn add_context(e: Error, ctx: &str) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{ctx}: {m}")),
        Error::InvalidData(m) => Error::InvalidData(format!("{ctx}: {m}")),
        Error::SingularDesign(m) => Error::SingularDesign(format!("{ctx}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("{ctx}: {m}")),
        Error::Parse(m) => Error::Parse(format!("{ctx}: {m}")),
        Error::Io(io) => Error::Io(io),
    }
}

/// One (draw, dataset) cell: generate the dataset, fit every order once,
/// solve the HPD sets of each extrapolant at the target, and record hits.
/// Returns hit flags indexed by [model][alpha].
fn run_cell(cfg: &CidConfig, n_labels: usize, d_t: f64, draw: u32, dataset: u32) -> Result<Vec<Vec<bool>>> {
    let seed = SeedSpec::new(cfg.master_seed, StreamId::Dataset { draw, dataset });
    let data = generate_dataset(cfg.function, &cfg.data, seed)?;
    let fit = BmaFit::new(&data, cfg.m_max, &cfg.prior, &cfg.grid)?;
    (0..n_labels)
        .map(|li| {
            let pdf = if li <= cfg.m_max {
                fit.fixed_order_pdf(li, cfg.x_t)?
            } else {
                fit.bma_pdf(cfg.x_t)?
            };
            let solver = HpdSolver::new(&pdf, &cfg.alphas, &cfg.hpd)?;
            let target = match cfg.mode {
                CidMode::Validation => d_t,
                CidMode::SelfConsistency => {
                    let id = StreamId::SelfDraw { model: li as u32, draw, dataset };
                    pdf.sample(&mut SeedSpec::new(cfg.master_seed, id).rng())
                }
            };
            Ok(solver.sets().iter().map(|s| s.contains(target)).collect())
        })
        .collect()
}

/// Runs the full diagnostic. The (draw, dataset) grid is evaluated in
/// parallel; every cell owns its addressed streams and results are reduced
/// in cell order, so the report does not depend on the worker count.
pub fn cid_run(cfg: &CidConfig) -> Result<CidReport> {
    cfg.validate()?;
    let labels = model_labels(cfg.m_max);
    let d_ts = (0..cfg.n_validation)
        .map(|v| {
            let mut rng =
                SeedSpec::new(cfg.master_seed, StreamId::Validation { draw: v as u32 }).rng();
            Ok(draw_validation(cfg.function, cfg.x_t, cfg.data.rel_err, &mut rng)?.d_t)
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(u32, u32)> = (0..cfg.n_validation as u32)
        .flat_map(|v| (0..cfg.n_datasets as u32).map(move |i| (v, i)))
        .collect();
    let outcomes: Vec<Result<Vec<Vec<bool>>>> = cells
        .par_iter()
        .map(|&(v, i)| run_cell(cfg, labels.len(), d_ts[v as usize], v, i))
        .collect();

    let n_alpha = cfg.alphas.len();
    let mut hit_counts = vec![vec![vec![0usize; n_alpha]; cfg.n_validation]; labels.len()];
    for (&(v, i), outcome) in cells.iter().zip(outcomes) {
        let flags = outcome.map_err(|e| {
            add_context(
                e,
                &format!(
                    "validation draw {v}, dataset {i} (master seed {}, stream {:?})",
                    cfg.master_seed,
                    StreamId::Dataset { draw: v, dataset: i }
                ),
            )
        })?;
        for (per_model, counts) in flags.iter().zip(&mut hit_counts) {
            for (hit, count) in per_model.iter().zip(&mut counts[v as usize]) {
                *count += *hit as usize;
            }
        }
    }

    let curves = labels
        .into_iter()
        .zip(hit_counts)
        .map(|(label, counts)| {
            let d: Vec<Vec<f64>> = counts
                .iter()
                .map(|row| row.iter().map(|&c| c as f64 / cfg.n_datasets as f64).collect())
                .collect();
            let bands = cfg
                .alphas
                .iter()
                .enumerate()
                .map(|(ai, &alpha)| {
                    let lines: Vec<f64> = d.iter().map(|row| row[ai]).collect();
                    let (lo, hi, median) = band_stats(&lines, cfg.band_fraction)?;
                    Ok(Band { alpha, lo, median, hi })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ModelCurve { label, d, bands })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CidReport { alphas: cfg.alphas.clone(), curves })
}
