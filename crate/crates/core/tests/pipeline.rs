//! Cross-module pipeline tests through the public API: the composed objects
//! (evidence weights, mixture predictives, credibility sets, diagnostic
//! cells) must agree with independent reconstructions from the lower-level
//! pieces they are built from.

use approx::assert_abs_diff_eq;
use statrs::distribution::{ContinuousCDF, Normal};

use polybma_core::{
    BmaFit, CidConfig, CidMode, DataConfig, GridConfig, HpdConfig, HpdSolver, SeedSpec,
    SigmaPrior, StreamId, UnderlyingFunction, build_design, build_sigma_grid, cid_run,
    draw_validation, generate_dataset, lec_posterior, model_weights, predictive_at,
};

const X_NEAR: f64 = 1.2 * std::f64::consts::FRAC_1_PI;

fn standard_fit(seed: u64) -> (polybma_core::Dataset, BmaFit) {
    let data = generate_dataset(
        UnderlyingFunction::G2,
        &DataConfig::default(),
        SeedSpec::new(seed, StreamId::Adhoc(0)),
    )
    .expect("generation");
    let fit = BmaFit::new(&data, 6, &SigmaPrior::default(), &GridConfig::default())
        .expect("fit");
    (data, fit)
}

#[test]
fn averaged_fit_weights_match_standalone_evidence() {
    let (data, fit) = standard_fit(4);
    let weights =
        model_weights(&data, 6, &SigmaPrior::default(), &GridConfig::default()).expect("weights");
    for m in 0..=6 {
        assert_abs_diff_eq!(fit.weights().weights[m], weights.weights[m], epsilon = 1e-14);
    }
}

#[test]
fn mixture_predictive_decomposes_into_node_predictives() {
    let (data, fit) = standard_fit(4);
    let prior = SigmaPrior::default();
    let grid_cfg = GridConfig::default();
    let weights = model_weights(&data, 6, &prior, &grid_cfg).expect("weights");

    // Rebuild the averaged predictive mean from scratch: per order, the
    // width grid's node masses weight the conjugate predictive means.
    let mut mean = 0.0;
    for m in 0..=6 {
        let design = build_design(&data, m).expect("design");
        let grid = build_sigma_grid(&design, &prior, &grid_cfg).expect("grid");
        let mut order_mean = 0.0;
        for (&node, &mass) in grid.nodes.iter().zip(&grid.posterior_mass) {
            let lp = lec_posterior(&design, node).expect("posterior");
            order_mean += mass * predictive_at(&lp, X_NEAR).0;
        }
        mean += weights.weights[m] * order_mean;
    }

    let pdf = fit.bma_pdf(X_NEAR).expect("pdf");
    assert_abs_diff_eq!(pdf.mean(), mean, epsilon = 1e-12 * mean.abs().max(1.0));
}

#[test]
fn credibility_sets_agree_with_an_independent_cdf_oracle() {
    let (_, fit) = standard_fit(4);
    let pdf = fit.bma_pdf(X_NEAR).expect("pdf");
    let solver = HpdSolver::new(&pdf, &[0.383, 0.6827, 0.954], &HpdConfig::default())
        .expect("solver");

    // Mixture mass of each reported set, via the exact Gaussian CDF.
    for set in solver.sets() {
        let mut mass = 0.0;
        for component in pdf.components() {
            let normal = Normal::new(component.mean, component.sd).expect("component");
            for &(lo, hi) in &set.intervals {
                mass += component.weight * (normal.cdf(hi) - normal.cdf(lo));
            }
        }
        assert_abs_diff_eq!(mass, set.alpha, epsilon = 2e-3);
        assert_abs_diff_eq!(set.attained_mass, set.alpha, epsilon = 1e-3);
    }
}

#[test]
fn diagnostic_cells_are_reconstructible_from_the_streams() {
    let cfg = CidConfig {
        n_datasets: 3,
        n_validation: 2,
        m_max: 2,
        alphas: vec![0.383, 0.6827, 0.954],
        ..CidConfig::defaults(UnderlyingFunction::G2, X_NEAR, 9)
    };
    let report = cid_run(&cfg).expect("run");

    // Recount one full validation draw by hand: same streams, same fits,
    // same sets, every dataset, model, and level.
    let draw = 1u32;
    let mut rng = SeedSpec::new(9, StreamId::Validation { draw }).rng();
    let vd = draw_validation(cfg.function, cfg.x_t, cfg.data.rel_err, &mut rng)
        .expect("validation datum");

    let labels: Vec<String> = report.curves.iter().map(|c| c.label.clone()).collect();
    let mut hits = vec![vec![0u32; cfg.alphas.len()]; labels.len()];
    for ds_idx in 0..cfg.n_datasets as u32 {
        let data = generate_dataset(
            cfg.function,
            &cfg.data,
            SeedSpec::new(9, StreamId::Dataset { draw, dataset: ds_idx }),
        )
        .expect("generation");
        let fit = BmaFit::new(&data, cfg.m_max, &cfg.prior, &cfg.grid).expect("fit");
        for (li, label) in labels.iter().enumerate() {
            let pdf = if label == "BMA" {
                fit.bma_pdf(cfg.x_t).expect("pdf")
            } else {
                fit.fixed_order_pdf(li, cfg.x_t).expect("pdf")
            };
            let solver = HpdSolver::new(&pdf, &cfg.alphas, &cfg.hpd).expect("solver");
            for (ai, set) in solver.sets().iter().enumerate() {
                if set.contains(vd.d_t) {
                    hits[li][ai] += 1;
                }
            }
        }
    }
    for (li, curve) in report.curves.iter().enumerate() {
        for ai in 0..cfg.alphas.len() {
            let expected = hits[li][ai] as f64 / cfg.n_datasets as f64;
            assert_eq!(curve.d[draw as usize][ai], expected);
        }
    }
}

#[test]
fn self_consistency_mode_differs_from_validation_mode() {
    let base = CidConfig {
        n_datasets: 3,
        n_validation: 2,
        m_max: 1,
        alphas: vec![0.5],
        ..CidConfig::defaults(UnderlyingFunction::G2, X_NEAR, 9)
    };
    let validation = cid_run(&base).expect("run");
    let selfcon = cid_run(&CidConfig { mode: CidMode::SelfConsistency, ..base }).expect("run");
    assert_ne!(validation, selfcon, "modes must draw different targets");
}

#[test]
fn whole_pipeline_is_reproducible() {
    let (_, fit_a) = standard_fit(12);
    let (_, fit_b) = standard_fit(12);
    let pdf_a = fit_a.bma_pdf(X_NEAR).expect("pdf");
    let pdf_b = fit_b.bma_pdf(X_NEAR).expect("pdf");
    assert_eq!(pdf_a.mean(), pdf_b.mean());
    assert_eq!(pdf_a.variance(), pdf_b.variance());

    let sets_a = HpdSolver::new(&pdf_a, &[0.6827], &HpdConfig::default()).expect("solver");
    let sets_b = HpdSolver::new(&pdf_b, &[0.6827], &HpdConfig::default()).expect("solver");
    assert_eq!(sets_a.sets()[0].intervals, sets_b.sets()[0].intervals);
}
