//! Benchmarks along the pipeline: data generation, a single conjugate fit,
//! width marginalization, evidence, the averaged predictive, credibility
//! sets, and one diagnostic cell.

use criterion::{Criterion, criterion_group, criterion_main};
use std::hint::black_box;

use polybma_bench::{TARGET, fixture_dataset, fixture_fit};
use polybma_core::hpd::HpdConfig;
use polybma_core::{
    BmaFit, CidConfig, CidMode, DataConfig, GridConfig, HpdSolver, SeedSpec, SigmaPrior, StreamId,
    UnderlyingFunction, build_design, build_sigma_grid, cid_run, generate_dataset, lec_posterior,
    model_weights,
};

fn bench_generate(c: &mut Criterion) {
    let cfg = DataConfig::default();
    c.bench_function("generate_dataset_default", |b| {
        b.iter(|| {
            generate_dataset(
                UnderlyingFunction::G2,
                black_box(&cfg),
                SeedSpec::new(3, StreamId::Adhoc(0)),
            )
            .expect("generation succeeds")
        })
    });
}

fn bench_single_fit(c: &mut Criterion) {
    let data = fixture_dataset(3);
    c.bench_function("lec_posterior_m6", |b| {
        b.iter(|| {
            let design = build_design(black_box(&data), 6).expect("design");
            lec_posterior(&design, black_box(1.0)).expect("posterior")
        })
    });
}

fn bench_sigma_grid(c: &mut Criterion) {
    let data = fixture_dataset(3);
    let design = build_design(&data, 6).expect("design");
    let prior = SigmaPrior::default();
    let grid_cfg = GridConfig::default();
    c.bench_function("sigma_grid_13_nodes_m6", |b| {
        b.iter(|| build_sigma_grid(black_box(&design), &prior, &grid_cfg).expect("grid"))
    });
}

fn bench_evidence(c: &mut Criterion) {
    let data = fixture_dataset(3);
    let prior = SigmaPrior::default();
    let grid_cfg = GridConfig::default();
    c.bench_function("model_weights_m_max6", |b| {
        b.iter(|| model_weights(black_box(&data), 6, &prior, &grid_cfg).expect("weights"))
    });
}

fn bench_bma_fit_and_pdf(c: &mut Criterion) {
    let data = fixture_dataset(3);
    let prior = SigmaPrior::default();
    let grid_cfg = GridConfig::default();
    c.bench_function("bma_fit_m_max6", |b| {
        b.iter(|| BmaFit::new(black_box(&data), 6, &prior, &grid_cfg).expect("fit"))
    });

    let fit = fixture_fit(3);
    c.bench_function("bma_pdf_at_target", |b| {
        b.iter(|| fit.bma_pdf(black_box(TARGET)).expect("pdf"))
    });
}

fn bench_hpd(c: &mut Criterion) {
    let fit = fixture_fit(3);
    let pdf = fit.bma_pdf(TARGET).expect("pdf");
    let alphas = polybma_core::cid::DEFAULT_ALPHAS;
    let cfg = HpdConfig::default();
    c.bench_function("hpd_solver_7_levels_bma", |b| {
        b.iter(|| HpdSolver::new(black_box(&pdf), &alphas, &cfg).expect("solver"))
    });
}

fn bench_cid_cell(c: &mut Criterion) {
    // One validation draw with one dataset: the unit of work the diagnostic
    // harness parallelizes over.
    let cfg = CidConfig {
        n_datasets: 1,
        n_validation: 1,
        mode: CidMode::Validation,
        ..CidConfig::defaults(UnderlyingFunction::G2, TARGET, 3)
    };
    c.bench_function("cid_single_cell_m_max6", |b| {
        b.iter(|| cid_run(black_box(&cfg)).expect("run"))
    });
}

criterion_group!(
    benches,
    bench_generate,
    bench_single_fit,
    bench_sigma_grid,
    bench_evidence,
    bench_bma_fit_and_pdf,
    bench_hpd,
    bench_cid_cell,
);
criterion_main!(benches);
