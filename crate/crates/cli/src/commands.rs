//! Subcommand implementations.
//!
//! Each command is a pure function of (config, input files): it writes its
//! data files plus a JSON manifest into the output directory and touches
//! nothing else. Floats are serialized with the shortest round-trip decimal
//! form, and nothing time- or host-dependent enters any file, so reruns are
//! byte-identical.

use std::path::Path;

use polybma_core::io::{self, LecPosteriorExport};
use polybma_core::{
    BmaFit, HpdConfig, Result, SeedSpec, StreamId, build_design, build_sigma_grid, cid_run,
    generate_dataset, hpd_set, lec_posterior, model_weights, sigma_posterior_unnorm_log,
};
use serde::Serialize;

use crate::config::RunConfig;

/// Credibility level of the extrapolation band columns.
const CI_ALPHA: f64 = 0.6827;

/// Common header of every manifest; `extra` carries per-command fields.
#[derive(Serialize)]
struct Manifest<'a, X: Serialize> {
    command: &'a str,
    config_hash: String,
    /// Full effective configuration; together with the listed inputs this
    /// reproduces every output.
    config: &'a RunConfig,
    outputs: Vec<String>,
    #[serde(flatten)]
    extra: X,
}

fn write_manifest<X: Serialize>(
    cfg: &RunConfig,
    command: &str,
    stem: &str,
    outputs: Vec<String>,
    extra: X,
) -> Result<()> {
    let manifest = Manifest {
        command,
        config_hash: cfg.hash(),
        config: cfg,
        outputs,
        extra,
    };
    io::write_json(&cfg.out.join(format!("{stem}.manifest.json")), &manifest)
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    Ok(())
}

/// Writes one CSV with full-precision fields; rows may differ in width when
/// `flexible` is set (extrapolation bands with several intervals).
fn write_csv(path: &Path, flexible: bool, rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(flexible).from_path(path)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt(v: f64) -> String {
    v.to_string()
}

/// Draws one pseudodata set and stores it with its provenance sidecar.
pub fn cmd_generate(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let dataset = generate_dataset(
        cfg.function,
        &cfg.data,
        SeedSpec::new(cfg.seed, StreamId::Adhoc(0)),
    )?;
    let csv_path = cfg.out.join("dataset.csv");
    io::store_dataset(&csv_path, &dataset)?;

    #[derive(Serialize)]
    struct Extra {
        n_points: usize,
    }
    write_manifest(
        cfg,
        "generate",
        "generate",
        vec!["dataset.csv".into(), "dataset.json".into()],
        Extra { n_points: dataset.len() },
    )
}

/// Coefficient posterior at fixed order and fixed prior width.
pub fn cmd_fit(cfg: &RunConfig, dataset_path: &Path, m: usize, sigma_a: f64) -> Result<()> {
    ensure_out_dir(cfg)?;
    let data = io::load_dataset(dataset_path)?;
    let design = build_design(&data, m)?;
    let posterior = lec_posterior(&design, sigma_a)?;

    #[derive(Serialize)]
    struct PosteriorFile {
        #[serde(flatten)]
        posterior: LecPosteriorExport,
        config_hash: String,
    }
    let name = format!("posterior_m{m}.json");
    io::write_json(
        &cfg.out.join(&name),
        &PosteriorFile {
            posterior: LecPosteriorExport::from(&posterior),
            config_hash: cfg.hash(),
        },
    )?;

    #[derive(Serialize)]
    struct Extra {
        dataset: String,
        m: usize,
        sigma_a: f64,
    }
    write_manifest(
        cfg,
        "fit",
        "fit",
        vec![name],
        Extra { dataset: dataset_path.display().to_string(), m, sigma_a },
    )
}

/// Posterior model weights over orders 0..=m_max.
pub fn cmd_evidence(cfg: &RunConfig, dataset_path: &Path) -> Result<()> {
    ensure_out_dir(cfg)?;
    let data = io::load_dataset(dataset_path)?;
    let weights = model_weights(&data, cfg.m_max, &cfg.prior, &cfg.sigma_grid)?;

    let mut rows = vec![vec!["M".to_string(), "weight".into(), "log_unnorm".into()]];
    for m in 0..=cfg.m_max {
        rows.push(vec![m.to_string(), fmt(weights.weights[m]), fmt(weights.log_unnorm[m])]);
    }
    write_csv(&cfg.out.join("evidence.csv"), false, &rows)?;

    #[derive(Serialize)]
    struct Extra {
        dataset: String,
        argmax: usize,
    }
    write_manifest(
        cfg,
        "evidence",
        "evidence",
        vec!["evidence.csv".into()],
        Extra { dataset: dataset_path.display().to_string(), argmax: weights.argmax() },
    )
}

/// Model-averaged predictive moments and 68% credibility intervals at the
/// configured targets. Rows carry one (lo, hi) column pair per interval, so
/// widths differ when a predictive pdf is multimodal; the manifest records
/// the interval count per target.
pub fn cmd_extrapolate(cfg: &RunConfig, dataset_path: &Path) -> Result<()> {
    ensure_out_dir(cfg)?;
    let data = io::load_dataset(dataset_path)?;
    let fit = BmaFit::new(&data, cfg.m_max, &cfg.prior, &cfg.sigma_grid)?;
    let hpd_cfg = HpdConfig::default();

    #[derive(Serialize)]
    struct TargetInfo {
        x: f64,
        intervals: usize,
    }
    let mut body: Vec<Vec<String>> = Vec::new();
    let mut infos: Vec<TargetInfo> = Vec::new();
    for &x in &cfg.targets {
        let pdf = fit.bma_pdf(x)?;
        let set = hpd_set(&pdf, CI_ALPHA, &hpd_cfg)?;
        let mut row = vec![fmt(x), fmt(pdf.mean()), fmt(pdf.variance())];
        for &(lo, hi) in &set.intervals {
            row.push(fmt(lo));
            row.push(fmt(hi));
        }
        infos.push(TargetInfo { x, intervals: set.intervals.len() });
        body.push(row);
    }

    let max_intervals = infos.iter().map(|t| t.intervals).max().unwrap_or(1);
    let mut header = vec!["x".to_string(), "mean".into(), "var".into()];
    for k in 1..=max_intervals {
        header.push(format!("ci68_lo_{k}"));
        header.push(format!("ci68_hi_{k}"));
    }
    let mut rows = vec![header];
    rows.extend(body);
    write_csv(&cfg.out.join("extrapolate.csv"), true, &rows)?;

    #[derive(Serialize)]
    struct Extra {
        dataset: String,
        ci_alpha: f64,
        targets: Vec<TargetInfo>,
    }
    write_manifest(
        cfg,
        "extrapolate",
        "extrapolate",
        vec!["extrapolate.csv".into()],
        Extra { dataset: dataset_path.display().to_string(), ci_alpha: CI_ALPHA, targets: infos },
    )
}

/// Marginal posterior of the prior width on the quadrature grid, at fixed
/// order. `post_normalized` is the density normalized to unit integral over
/// the grid range (log normalizer in the manifest).
pub fn cmd_sigma_posterior(cfg: &RunConfig, dataset_path: &Path, m: usize) -> Result<()> {
    ensure_out_dir(cfg)?;
    let data = io::load_dataset(dataset_path)?;
    let design = build_design(&data, m)?;
    let grid = build_sigma_grid(&design, &cfg.prior, &cfg.sigma_grid)?;

    let mut rows =
        vec![vec!["sigma_a".to_string(), "log_post_unnorm".into(), "post_normalized".into()]];
    for &s in &grid.nodes {
        let log_post = sigma_posterior_unnorm_log(&design, &cfg.prior, s)?;
        rows.push(vec![fmt(s), fmt(log_post), fmt((log_post - grid.log_norm).exp())]);
    }
    let name = format!("sigma_posterior_m{m}.csv");
    write_csv(&cfg.out.join(&name), false, &rows)?;

    #[derive(Serialize)]
    struct Extra {
        dataset: String,
        m: usize,
        log_norm: f64,
    }
    write_manifest(
        cfg,
        "sigma-posterior",
        "sigma_posterior",
        vec![name],
        Extra { dataset: dataset_path.display().to_string(), m, log_norm: grid.log_norm },
    )
}

/// Runs the credibility-interval diagnostic once per target. Target k gets a
/// long-form CSV (one hit rate per model, draw, and level), a band CSV, and
/// a manifest, suffixed `_tk`.
pub fn cmd_cid(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    for (k, &x_t) in cfg.targets.iter().enumerate() {
        let cid_cfg = cfg.cid_config(x_t);
        let report = cid_run(&cid_cfg)?;

        let mut long =
            vec![vec!["model".to_string(), "draw".into(), "alpha".into(), "D".into()]];
        for curve in &report.curves {
            for (draw, line) in curve.d.iter().enumerate() {
                for (&alpha, &d) in report.alphas.iter().zip(line) {
                    long.push(vec![curve.label.clone(), draw.to_string(), fmt(alpha), fmt(d)]);
                }
            }
        }
        let long_name = format!("cid_t{k}.csv");
        write_csv(&cfg.out.join(&long_name), false, &long)?;

        let mut bands =
            vec![vec!["model".to_string(), "alpha".into(), "lo".into(), "median".into(), "hi".into()]];
        for curve in &report.curves {
            for band in &curve.bands {
                bands.push(vec![
                    curve.label.clone(),
                    fmt(band.alpha),
                    fmt(band.lo),
                    fmt(band.median),
                    fmt(band.hi),
                ]);
            }
        }
        let bands_name = format!("cid_t{k}_bands.csv");
        write_csv(&cfg.out.join(&bands_name), false, &bands)?;

        #[derive(Serialize)]
        struct Extra {
            target_index: usize,
            x_t: f64,
            master_seed: u64,
            models: Vec<String>,
        }
        write_manifest(
            cfg,
            "cid",
            &format!("cid_t{k}"),
            vec![long_name, bands_name],
            Extra {
                target_index: k,
                x_t,
                master_seed: cfg.seed,
                models: report.curves.iter().map(|c| c.label.clone()).collect(),
            },
        )?;
    }
    Ok(())
}
