//! Run configuration: defaults, TOML file, `--set` overrides, typed flags.
//!
//! Precedence, lowest to highest: built-in defaults, config file, `--set`
//! dotted-path pairs, dedicated command-line flags. The merged result is
//! validated once and hashed; the hash is embedded in every output so any
//! artifact can be traced back to the exact configuration that produced it.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use polybma_core::cid::DEFAULT_ALPHAS;
use polybma_core::hpd::HpdConfig;
use polybma_core::linear::MAX_ORDER;
use polybma_core::{
    CidConfig, CidMode, DataConfig, Error, GridConfig, Result, SigmaPrior, UnderlyingFunction,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Replication counts and credibility levels of the diagnostic runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CidSection {
    /// Pseudodata sets per validation draw.
    pub n_datasets: usize,
    /// Validation draws (independent hit-rate lines per model).
    pub n_validation: usize,
    /// Credibility levels, strictly ascending in (0, 1).
    pub alphas: Vec<f64>,
    /// Central fraction of lines each band keeps.
    pub band_fraction: f64,
}

impl Default for CidSection {
    fn default() -> Self {
        Self {
            n_datasets: 100,
            n_validation: 20,
            alphas: DEFAULT_ALPHAS.to_vec(),
            band_fraction: 0.70,
        }
    }
}

/// Everything a run needs. Every command is a pure function of this struct
/// plus its input files, so re-running with the same config and inputs
/// reproduces every output byte for byte.
///
/// Scalar fields are declared before the table-valued sections so the struct
/// serializes to TOML directly; that serialization is the canonical form the
/// config hash is computed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub function: UnderlyingFunction,
    /// Highest polynomial order entering evidence and averaging.
    pub m_max: usize,
    /// Master seed; all streams are derived from it.
    pub seed: u64,
    /// Extrapolation targets x_t.
    pub targets: Vec<f64>,
    /// Output directory, created on demand.
    pub out: PathBuf,
    pub prior: SigmaPrior,
    pub sigma_grid: GridConfig,
    pub data: DataConfig,
    pub cid: CidSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            function: UnderlyingFunction::G2,
            m_max: 6,
            seed: 0,
            targets: vec![
                1.2 * std::f64::consts::FRAC_1_PI,
                2.0 * std::f64::consts::FRAC_1_PI,
            ],
            out: PathBuf::from("out"),
            prior: SigmaPrior::default(),
            sigma_grid: GridConfig::default(),
            data: DataConfig::default(),
            cid: CidSection::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_max > MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "m_max = {} exceeds the cap {MAX_ORDER}",
                self.m_max
            )));
        }
        self.prior.validate()?;
        self.sigma_grid.validate()?;
        self.data.validate()?;
        if self.targets.is_empty() {
            return Err(Error::InvalidArgument("need at least one target x_t".into()));
        }
        for &x in &self.targets {
            if !x.is_finite() {
                return Err(Error::InvalidArgument(format!("target x_t = {x} is not finite")));
            }
        }
        // The counts and levels are revalidated by the diagnostic harness;
        // checking here keeps bad configs from failing halfway into a run.
        self.cid_config(self.targets[0]).validate()
    }

    /// Diagnostic-harness view of this configuration at one target.
    pub fn cid_config(&self, x_t: f64) -> CidConfig {
        CidConfig {
            function: self.function,
            x_t,
            alphas: self.cid.alphas.clone(),
            n_datasets: self.cid.n_datasets,
            n_validation: self.cid.n_validation,
            band_fraction: self.cid.band_fraction,
            m_max: self.m_max,
            prior: self.prior,
            grid: self.sigma_grid,
            data: self.data,
            master_seed: self.seed,
            mode: CidMode::Validation,
            hpd: HpdConfig::default(),
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    ///
    /// The output directory is normalized away first: the hash identifies
    /// the experiment, and the same run landing in a different directory
    /// must keep the same identity.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = RunConfig::default().out;
        let canon = toml::to_string(&canonical).expect("config serializes to TOML");
        let digest = Sha256::digest(canon.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Prior family selected by `--prior`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    Jeffreys,
    InvChi2,
}

impl FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jeffreys" => Ok(PriorKind::Jeffreys),
            "invchi2" => Ok(PriorKind::InvChi2),
            other => Err(Error::InvalidArgument(format!(
                "prior must be `jeffreys` or `invchi2`, got `{other}`"
            ))),
        }
    }
}

/// Parses `--function` values.
pub fn parse_function(s: &str) -> Result<UnderlyingFunction> {
    match s {
        "g1" => Ok(UnderlyingFunction::G1),
        "g2" => Ok(UnderlyingFunction::G2),
        other => Err(Error::InvalidArgument(format!(
            "function must be `g1` or `g2`, got `{other}`"
        ))),
    }
}

/// Typed flag overrides; `None`/empty means "not given".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub function: Option<UnderlyingFunction>,
    pub seed: Option<u64>,
    pub m_max: Option<usize>,
    pub prior: Option<PriorKind>,
    pub nu0: Option<f64>,
    pub tau0: Option<f64>,
    pub grid_points: Option<usize>,
    pub grid_lo: Option<f64>,
    pub grid_hi: Option<f64>,
    pub xt: Vec<f64>,
    pub datasets: Option<usize>,
    pub validation_draws: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Loads, merges, and validates the effective configuration.
pub fn build_config(file: Option<&Path>, sets: &[String], ov: &Overrides) -> Result<RunConfig> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            text.parse::<toml::Table>().map_err(|e| {
                Error::InvalidData(format!("config {}: {e}", path.display()))
            })?
        }
        None => toml::Table::new(),
    };
    for kv in sets {
        apply_set(&mut table, kv)?;
    }
    let mut cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::InvalidData(format!("config: {e}")))?;
    apply_overrides(&mut cfg, ov)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Inserts one `path.to.key=value` pair into the raw config table, creating
/// intermediate tables as needed.
fn apply_set(table: &mut toml::Table, kv: &str) -> Result<()> {
    let (path, raw) = kv
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("--set takes KEY=VALUE, got `{kv}`")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::InvalidArgument(format!("--set key `{path}` is malformed")));
    }
    let mut node = table;
    for k in &keys[..keys.len() - 1] {
        node = node
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                Error::InvalidArgument(format!("--set {path}: `{k}` is not a table"))
            })?;
    }
    node.insert(keys[keys.len() - 1].to_string(), parse_set_value(raw.trim()));
    Ok(())
}

/// Parses the value side of a `--set` pair as TOML, so integers, floats,
/// booleans, and arrays come through typed; anything unparseable is a string,
/// letting `--set function=g2` work without shell quoting.
fn parse_set_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed assignment defines v"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_overrides(cfg: &mut RunConfig, ov: &Overrides) -> Result<()> {
    if let Some(f) = ov.function {
        cfg.function = f;
    }
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(m) = ov.m_max {
        cfg.m_max = m;
    }
    // --prior picks the family; --nu0/--tau0 adjust the inverse-chi^2
    // hyperparameters and are rejected under a Jeffreys prior rather than
    // silently ignored.
    match ov.prior {
        Some(PriorKind::Jeffreys) => cfg.prior = SigmaPrior::Jeffreys,
        Some(PriorKind::InvChi2) => {
            if !matches!(cfg.prior, SigmaPrior::ScaledInvChi2 { .. }) {
                cfg.prior = SigmaPrior::default();
            }
        }
        None => {}
    }
    if ov.nu0.is_some() || ov.tau0.is_some() {
        match &mut cfg.prior {
            SigmaPrior::ScaledInvChi2 { nu0, tau0 } => {
                if let Some(v) = ov.nu0 {
                    *nu0 = v;
                }
                if let Some(v) = ov.tau0 {
                    *tau0 = v;
                }
            }
            SigmaPrior::Jeffreys => {
                return Err(Error::InvalidArgument(
                    "--nu0/--tau0 require the invchi2 prior; pass --prior invchi2".into(),
                ));
            }
        }
    }
    if let Some(n) = ov.grid_points {
        cfg.sigma_grid.n = n;
    }
    if let Some(v) = ov.grid_lo {
        cfg.sigma_grid.lo = v;
    }
    if let Some(v) = ov.grid_hi {
        cfg.sigma_grid.hi = v;
    }
    if !ov.xt.is_empty() {
        cfg.targets = ov.xt.clone();
    }
    if let Some(n) = ov.datasets {
        cfg.cid.n_datasets = n;
    }
    if let Some(n) = ov.validation_draws {
        cfg.cid.n_validation = n;
    }
    if let Some(p) = &ov.out {
        cfg.out = p.clone();
    }
    Ok(())
}
