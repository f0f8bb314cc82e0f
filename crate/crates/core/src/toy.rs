//! Benchmark curves and pseudodata generation.
//!
//! Two closed-form curves stand in for an expensive calculation that is only
//! sampled at low x: `G1` rises toward a pole at x = 1, `G2` decays with a
//! pole at x = -1.3. Noisy data is generated on a uniform grid with relative
//! errors taken from the true curve (not from the noisy sample), and a
//! held-out validation datum can be drawn at an extrapolation target.

use crate::error::{Error, Result};
use crate::seed::SeedSpec;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// The curve pseudodata is generated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnderlyingFunction {
    /// (1/2 + tan(pi x / 2))^2, defined here on [0, 1); pole at x = 1.
    G1,
    /// (1.3 / (1.3 + x))^2, defined for x > -1.3.
    G2,
}

/// Scale of the g2 pole position.
const G2_POLE: f64 = 1.3;

impl UnderlyingFunction {
    /// Evaluates the curve, rejecting x outside the supported domain.
    pub fn eval(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("x = {x} is not finite")));
        }
        match self {
            UnderlyingFunction::G1 => {
                if !(0.0..1.0).contains(&x) {
                    return Err(Error::Domain(format!("g1 is defined on [0, 1), got x = {x}")));
                }
                let t = 0.5 + (FRAC_PI_2 * x).tan();
                Ok(t * t)
            }
            UnderlyingFunction::G2 => {
                if x <= -G2_POLE {
                    return Err(Error::Domain(format!("g2 requires x > -1.3, got x = {x}")));
                }
                let t = G2_POLE / (G2_POLE + x);
                Ok(t * t)
            }
        }
    }

    /// Maclaurin coefficients a_0..=a_order of the curve about x = 0.
    ///
    /// Computed by exact power-series recurrences (tan' = 1 + tan^2 for g1,
    /// squared geometric series for g2), so the values are exact up to f64
    /// rounding at any order.
    pub fn taylor_coefficients(self, order: usize) -> Vec<f64> {
        let n = order + 1;
        match self {
            UnderlyingFunction::G1 => {
                // tan(u) = sum t_k u^k from (k+1) t_{k+1} = [u^k](1 + tan^2).
                let mut t = vec![0.0f64; n.max(2)];
                t[1] = 1.0;
                for k in 1..n.saturating_sub(1) {
                    let conv: f64 = (0..=k).map(|j| t[j] * t[k - j]).sum();
                    t[k + 1] = conv / (k + 1) as f64;
                }
                // Scale u = (pi/2) x, then g1 = 1/4 + tan + tan^2.
                let mut tau = vec![0.0f64; n];
                let mut c_pow = 1.0;
                for k in 0..n {
                    tau[k] = t[k] * c_pow;
                    c_pow *= FRAC_PI_2;
                }
                (0..n)
                    .map(|k| {
                        let sq: f64 = (0..=k).map(|j| tau[j] * tau[k - j]).sum();
                        if k == 0 { 0.25 + tau[0] + sq } else { tau[k] + sq }
                    })
                    .collect()
            }
            UnderlyingFunction::G2 => {
                // 1.3/(1.3+x) = sum (-x/1.3)^k; square by Cauchy product.
                let r = -1.0 / G2_POLE;
                let h: Vec<f64> = (0..n).scan(1.0f64, |p, _| {
                    let cur = *p;
                    *p *= r;
                    Some(cur)
                })
                .collect();
                (0..n).map(|k| (0..=k).map(|j| h[j] * h[k - j]).sum()).collect()
            }
        }
    }
}

impl std::fmt::Display for UnderlyingFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnderlyingFunction::G1 => write!(f, "g1"),
            UnderlyingFunction::G2 => write!(f, "g2"),
        }
    }
}

impl std::str::FromStr for UnderlyingFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g1" => Ok(UnderlyingFunction::G1),
            "g2" => Ok(UnderlyingFunction::G2),
            other => Err(Error::InvalidArgument(format!("unknown function {other:?} (expected g1 or g2)"))),
        }
    }
}

/// One observation: abscissa, noisy value, and its known error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub d: f64,
    pub sigma: f64,
}

/// How a generated dataset came to be; serialized alongside the CSV so a
/// dataset file is reproducible from its sidecar alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub function: UnderlyingFunction,
    pub seed: SeedSpec,
    pub n: usize,
    pub rel_err: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

/// An ordered set of observations. `provenance` is `None` for data loaded
/// from an external CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<DataPoint>,
    pub provenance: Option<Provenance>,
}

impl Dataset {
    /// Validates ordering and error bars. An empty dataset is allowed (it
    /// yields pure-prior posteriors downstream).
    pub fn new(points: Vec<DataPoint>, provenance: Option<Provenance>) -> Result<Self> {
        for p in &points {
            if !(p.x.is_finite() && p.d.is_finite() && p.sigma.is_finite()) {
                return Err(Error::InvalidData(format!("non-finite data point {p:?}")));
            }
            if p.sigma <= 0.0 {
                return Err(Error::InvalidData(format!("sigma must be > 0, got {} at x = {}", p.sigma, p.x)));
            }
        }
        if let Some(w) = points.windows(2).find(|w| w[0].x >= w[1].x) {
            return Err(Error::InvalidData(format!(
                "x values must be strictly increasing, got {} then {}",
                w[0].x, w[1].x
            )));
        }
        Ok(Self { points, provenance })
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A held-out draw at the extrapolation target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationDatum {
    pub x_t: f64,
    pub d_t: f64,
}

/// Shape of the pseudodata grid and noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub n: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub rel_err: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { n: 10, x_lo: 0.0, x_hi: std::f64::consts::FRAC_1_PI, rel_err: 0.05 }
    }
}

impl DataConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("data.n must be >= 1".into()));
        }
        if !(self.rel_err > 0.0 && self.rel_err.is_finite()) {
            return Err(Error::InvalidArgument(format!("rel_err must be > 0, got {}", self.rel_err)));
        }
        if !(self.x_lo.is_finite() && self.x_hi.is_finite()) {
            return Err(Error::InvalidArgument("x bounds must be finite".into()));
        }
        if self.n > 1 && self.x_lo >= self.x_hi {
            return Err(Error::InvalidArgument(format!(
                "x_lo must be < x_hi for n > 1, got [{}, {}]",
                self.x_lo, self.x_hi
            )));
        }
        Ok(())
    }
}

/// Inclusive uniform grid; both endpoints exact.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect()
}

/// Draws one dataset: d_i ~ Normal(g(x_i), (rel_err * g(x_i))^2) on the
/// inclusive uniform grid. The error bars record rel_err * g(x_i) with the
/// true g, so they are noise-free.
pub fn generate_dataset(kind: UnderlyingFunction, cfg: &DataConfig, seed: SeedSpec) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = seed.rng();
    let points = linspace(cfg.x_lo, cfg.x_hi, cfg.n)
        .into_iter()
        .map(|x| {
            let g = kind.eval(x)?;
            let sigma = cfg.rel_err * g;
            if sigma <= 0.0 {
                return Err(Error::Numeric(format!("nonpositive noise width at x = {x}")));
            }
            let d = Normal::new(g, sigma)
                .map_err(|e| Error::Numeric(e.to_string()))?
                .sample(&mut rng);
            Ok(DataPoint { x, d, sigma })
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = Provenance {
        function: kind,
        seed,
        n: cfg.n,
        rel_err: cfg.rel_err,
        x_lo: cfg.x_lo,
        x_hi: cfg.x_hi,
    };
    Dataset::new(points, Some(provenance))
}

/// Draws the validation datum d_t ~ Normal(g(x_t), (rel_err * g(x_t))^2).
pub fn draw_validation(
    kind: UnderlyingFunction,
    x_t: f64,
    rel_err: f64,
    rng: &mut impl Rng,
) -> Result<ValidationDatum> {
    if !(rel_err > 0.0 && rel_err.is_finite()) {
        return Err(Error::InvalidArgument(format!("rel_err must be > 0, got {rel_err}")));
    }
    let g = kind.eval(x_t)?;
    let d_t = Normal::new(g, rel_err * g)
        .map_err(|e| Error::Numeric(e.to_string()))?
        .sample(rng);
    Ok(ValidationDatum { x_t, d_t })
}
