//! Shared fixtures for the pipeline benchmarks: one standard pseudodata set
//! and the model-averaged fit built from it, at the default configuration.

use polybma_core::{
    BmaFit, DataConfig, Dataset, GridConfig, SeedSpec, SigmaPrior, StreamId, UnderlyingFunction,
    generate_dataset,
};

/// Default extrapolation target used by the benchmarks.
pub const TARGET: f64 = 1.2 * std::f64::consts::FRAC_1_PI;

/// One reproducible default-shaped dataset.
pub fn fixture_dataset(seed: u64) -> Dataset {
    generate_dataset(
        UnderlyingFunction::G2,
        &DataConfig::default(),
        SeedSpec::new(seed, StreamId::Adhoc(0)),
    )
    .expect("default generation succeeds")
}

/// The full marginalized fit of [`fixture_dataset`] up to order 6.
pub fn fixture_fit(seed: u64) -> BmaFit {
    BmaFit::new(
        &fixture_dataset(seed),
        6,
        &SigmaPrior::default(),
        &GridConfig::default(),
    )
    .expect("default fit succeeds")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build_and_are_deterministic() {
        let a = fixture_dataset(3);
        let b = fixture_dataset(3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);

        let fit = fixture_fit(3);
        assert_eq!(fit.m_max(), 6);
        let pdf = fit.bma_pdf(TARGET).expect("pdf");
        assert!(pdf.mean().is_finite());
        assert!(pdf.variance() > 0.0);
    }
}
