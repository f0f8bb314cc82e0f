//! `polybma`: Bayesian polynomial extrapolation of noisy low-x data.
//!
//! One executable, subcommand style. Configuration comes from a TOML file
//! plus `--set path=value` overrides plus dedicated flags (in rising
//! precedence); every command writes CSV/JSON artifacts and a manifest that
//! echoes the full effective configuration and its hash.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O or input-file error,
//! 4 numeric failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use polybma_core::Error;

use config::{Overrides, parse_function};

#[derive(Parser)]
#[command(
    name = "polybma",
    version,
    about = "Bayesian model averaging of polynomial fits: evidence, extrapolation bands, and a credibility-interval diagnostic"
)]
struct Cli {
    /// Config file (TOML). Flags and --set pairs override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one config key by dotted path, e.g. --set data.rel_err=0.1.
    #[arg(long, global = true, value_name = "K=V")]
    set: Vec<String>,

    /// Worker threads for the diagnostic harness (0 or absent = all cores).
    /// Results are identical at any worker count.
    #[arg(long, global = true, value_name = "INT")]
    workers: Option<usize>,

    /// Curve pseudodata is drawn from: g1 or g2.
    #[arg(long, global = true, value_name = "NAME")]
    function: Option<String>,

    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Highest polynomial order entering evidence and averaging.
    #[arg(long = "m-max", global = true, value_name = "INT")]
    m_max: Option<usize>,

    /// Prior family on the coefficient width: jeffreys or invchi2.
    #[arg(long, global = true, value_name = "NAME")]
    prior: Option<String>,

    /// Degrees of freedom of the invchi2 prior.
    #[arg(long, global = true, value_name = "R", allow_negative_numbers = true)]
    nu0: Option<f64>,

    /// Scale of the invchi2 prior.
    #[arg(long, global = true, value_name = "R", allow_negative_numbers = true)]
    tau0: Option<f64>,

    /// Node count of the width-marginalization grid.
    #[arg(long = "grid-points", global = true, value_name = "INT")]
    grid_points: Option<usize>,

    /// Lower edge of the width grid.
    #[arg(long = "grid-lo", global = true, value_name = "R", allow_negative_numbers = true)]
    grid_lo: Option<f64>,

    /// Upper edge of the width grid.
    #[arg(long = "grid-hi", global = true, value_name = "R", allow_negative_numbers = true)]
    grid_hi: Option<f64>,

    /// Extrapolation target; repeat the flag for several targets.
    #[arg(long = "xt", global = true, value_name = "R", allow_negative_numbers = true)]
    xt: Vec<f64>,

    /// Pseudodata sets per validation draw in the diagnostic.
    #[arg(long, global = true, value_name = "INT")]
    datasets: Option<usize>,

    /// Validation draws in the diagnostic.
    #[arg(long = "validation-draws", global = true, value_name = "INT")]
    validation_draws: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a pseudodata set; writes dataset.csv plus a provenance sidecar.
    Generate,
    /// Coefficient posterior at fixed order M and fixed prior width.
    Fit {
        /// Dataset CSV (columns x,d,sigma).
        dataset: PathBuf,
        /// Polynomial order.
        #[arg(value_name = "M")]
        m: usize,
        /// Prior width the coefficients are conditioned on.
        #[arg(long = "sigma-a", default_value_t = 1.0, value_name = "R")]
        sigma_a: f64,
    },
    /// Posterior model weights over orders 0..=m_max.
    Evidence {
        /// Dataset CSV (columns x,d,sigma).
        dataset: PathBuf,
    },
    /// Model-averaged predictive mean, variance, and 68% credibility
    /// intervals at each target.
    Extrapolate {
        /// Dataset CSV (columns x,d,sigma).
        dataset: PathBuf,
    },
    /// Marginal posterior of the prior width on the quadrature grid, at
    /// fixed order M.
    SigmaPosterior {
        /// Dataset CSV (columns x,d,sigma).
        dataset: PathBuf,
        /// Polynomial order.
        #[arg(value_name = "M")]
        m: usize,
    },
    /// Credibility-interval diagnostic at each target: hit-rate lines and
    /// central bands over regenerated pseudodata.
    Cid,
}

fn overrides(cli: &Cli) -> polybma_core::Result<Overrides> {
    Ok(Overrides {
        function: cli.function.as_deref().map(parse_function).transpose()?,
        seed: cli.seed,
        m_max: cli.m_max,
        prior: cli.prior.as_deref().map(config::PriorKind::from_str).transpose()?,
        nu0: cli.nu0,
        tau0: cli.tau0,
        grid_points: cli.grid_points,
        grid_lo: cli.grid_lo,
        grid_hi: cli.grid_hi,
        xt: cli.xt.clone(),
        datasets: cli.datasets,
        validation_draws: cli.validation_draws,
        out: cli.out.clone(),
    })
}

fn run(cli: &Cli) -> polybma_core::Result<()> {
    let ov = overrides(cli)?;
    let cfg = config::build_config(cli.config.as_deref(), &cli.set, &ov)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("--workers: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Generate => commands::cmd_generate(&cfg),
        Command::Fit { dataset, m, sigma_a } => commands::cmd_fit(&cfg, dataset, *m, *sigma_a),
        Command::Evidence { dataset } => commands::cmd_evidence(&cfg, dataset),
        Command::Extrapolate { dataset } => commands::cmd_extrapolate(&cfg, dataset),
        Command::SigmaPosterior { dataset, m } => commands::cmd_sigma_posterior(&cfg, dataset, *m),
        Command::Cid => commands::cmd_cid(&cfg),
    })
}

/// Documented exit-code table: configuration and validation problems are 2,
/// missing or malformed files are 3, numeric breakdown is 4.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::InvalidArgument(_) | Error::InvalidData(_) => 2,
        Error::Io(_) | Error::Parse(_) => 3,
        Error::Numeric(_) | Error::SingularDesign(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
