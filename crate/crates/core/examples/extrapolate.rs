//! Minimal library walkthrough: generate pseudodata, average the orders,
//! and report the model-averaged prediction with its 68% HPD set.

use polybma_core::{
    BmaFit, DataConfig, GridConfig, HpdConfig, SeedSpec, SigmaPrior, StreamId,
    UnderlyingFunction, generate_dataset, hpd_set,
};

fn main() -> polybma_core::Result<()> {
    let data = generate_dataset(
        UnderlyingFunction::G2,
        &DataConfig::default(),
        SeedSpec::new(3, StreamId::Adhoc(0)),
    )?;
    let fit = BmaFit::new(&data, 6, &SigmaPrior::default(), &GridConfig::default())?;
    let pdf = fit.bma_pdf(0.4)?; // exact Gaussian mixture, not samples
    let set = hpd_set(&pdf, 0.6827, &HpdConfig::default())?;
    println!(
        "f(0.4) = {:.4} +- {:.4}, 68% HPD {:?}",
        pdf.mean(),
        pdf.variance().sqrt(),
        set.intervals,
    );
    Ok(())
}
