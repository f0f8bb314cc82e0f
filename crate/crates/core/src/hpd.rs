//! Highest-posterior-density credibility sets for Gaussian mixtures.
//!
//! The solver rasterizes the mixture density onto a uniform grid of cell
//! centers, includes cells from the densest down until the requested mass is
//! reached, and reads the set off as maximal runs of included cells with the
//! outer endpoints interpolated to the density threshold. One rasterization
//! serves every credibility level, and because inclusion is a prefix of the
//! same density ordering, the sets for increasing alpha are exactly nested —
//! which downstream hit counting relies on. The grid is doubled until the
//! discretization is demonstrably fine enough; mixtures whose components are
//! too separated to rasterize within the cell budget are rejected rather
//! than silently mis-measured.

use crate::error::{Error, Result};
use crate::mixture::GaussianMixturePdf;

/// Rasterization controls for the HPD solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpdConfig {
    /// Cell count of the first rasterization attempt.
    pub min_cells: usize,
    /// Hard cap; exceeding it is a resolution error.
    pub max_cells: usize,
    /// Accept when every attained mass is this close to its alpha and the
    /// total rasterized mass is within 5e-3 of one.
    pub mass_tol: f64,
    /// Half-width of the rasterized domain, in component standard
    /// deviations beyond the outermost component means.
    pub span_sigmas: f64,
}

impl Default for HpdConfig {
    fn default() -> Self {
        Self { min_cells: 4096, max_cells: 1 << 18, mass_tol: 1e-3, span_sigmas: 8.0 }
    }
}

impl HpdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_cells < 16 || self.max_cells < self.min_cells {
            return Err(Error::InvalidArgument(format!(
                "cell budget must satisfy 16 <= min <= max, got {} and {}",
                self.min_cells, self.max_cells
            )));
        }
        if !(self.mass_tol > 0.0 && self.mass_tol < 1.0) {
            return Err(Error::InvalidArgument(format!("bad mass tolerance {}", self.mass_tol)));
        }
        if !(self.span_sigmas >= 2.0 && self.span_sigmas.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad span {}", self.span_sigmas)));
        }
        Ok(())
    }
}

/// The HPD set at one credibility level: disjoint ascending intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct HpdSet {
    pub alpha: f64,
    pub intervals: Vec<(f64, f64)>,
    /// Mass of the included cells; within mass_tol of alpha on acceptance.
    pub attained_mass: f64,
    /// Density at the inclusion boundary: the largest density among the
    /// cells left out (so single-cell runs keep a positive width).
    pub threshold: f64,
}

impl HpdSet {
    pub fn contains(&self, f: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= f && f <= hi)
    }

    pub fn total_width(&self) -> f64 {
        self.intervals.iter().map(|&(lo, hi)| hi - lo).sum()
    }
}

/// HPD sets for one mixture at several credibility levels, solved on a
/// shared rasterization.
#[derive(Debug, Clone)]
pub struct HpdSolver {
    alphas: Vec<f64>,
    sets: Vec<HpdSet>,
    cells: usize,
    cell_width: f64,
}

impl HpdSolver {
    pub fn new(pdf: &GaussianMixturePdf, alphas: &[f64], cfg: &HpdConfig) -> Result<Self> {
        cfg.validate()?;
        if alphas.is_empty() {
            return Err(Error::InvalidArgument("need at least one credibility level".into()));
        }
        for &a in alphas {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "credibility level must lie strictly inside (0, 1), got {a}"
                )));
            }
        }
        let (lo, hi) = domain(pdf, cfg.span_sigmas);

        let mut cells = cfg.min_cells;
        loop {
            match rasterize_and_cut(pdf, alphas, lo, hi, cells, cfg.mass_tol) {
                Ok(sets) => {
                    let cell_width = (hi - lo) / cells as f64;
                    return Ok(Self { alphas: alphas.to_vec(), sets, cells, cell_width });
                }
                Err(why) => {
                    cells *= 2;
                    if cells > cfg.max_cells {
                        return Err(Error::Numeric(format!(
                            "HPD rasterization did not converge within {} cells: {why}",
                            cfg.max_cells
                        )));
                    }
                }
            }
        }
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Sets in the same order as the input alphas.
    pub fn sets(&self) -> &[HpdSet] {
        &self.sets
    }

    pub fn set(&self, idx: usize) -> &HpdSet {
        &self.sets[idx]
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }
}

/// Convenience wrapper for a single credibility level.
pub fn hpd_set(pdf: &GaussianMixturePdf, alpha: f64, cfg: &HpdConfig) -> Result<HpdSet> {
    let solver = HpdSolver::new(pdf, &[alpha], cfg)?;
    Ok(solver.sets()[0].clone())
}

fn domain(pdf: &GaussianMixturePdf, span_sigmas: f64) -> (f64, f64) {
    let lo = pdf
        .components()
        .iter()
        .map(|c| c.mean - span_sigmas * c.sd)
        .fold(f64::INFINITY, f64::min);
    let hi = pdf
        .components()
        .iter()
        .map(|c| c.mean + span_sigmas * c.sd)
        .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Density at every cell center. Each component only touches the cells
/// within 12 of its standard deviations, so narrow components stay cheap on
/// wide domains.
fn rasterize(pdf: &GaussianMixturePdf, lo: f64, h: f64, cells: usize) -> Vec<f64> {
    const INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7;
    let mut dens = vec![0.0f64; cells];
    for c in pdf.components() {
        let left = ((c.mean - 12.0 * c.sd - lo) / h - 0.5).floor().max(0.0) as usize;
        let right = (((c.mean + 12.0 * c.sd - lo) / h - 0.5).ceil() as usize).min(cells - 1);
        let scale = c.weight * INV_SQRT_TAU / c.sd;
        for (j, d) in dens.iter_mut().enumerate().take(right + 1).skip(left) {
            let z = (lo + (j as f64 + 0.5) * h - c.mean) / c.sd;
            *d += scale * (-0.5 * z * z).exp();
        }
    }
    dens
}

/// One resolution attempt: rasterize, sort cells by density, and cut prefix
/// sets for every alpha. Returns a reason string when the resolution is not
/// fine enough, so the caller can double and retry.
fn rasterize_and_cut(
    pdf: &GaussianMixturePdf,
    alphas: &[f64],
    lo: f64,
    hi: f64,
    cells: usize,
    mass_tol: f64,
) -> std::result::Result<Vec<HpdSet>, String> {
    let h = (hi - lo) / cells as f64;
    let dens = rasterize(pdf, lo, h, cells);
    let total: f64 = dens.iter().sum::<f64>() * h;
    if !(total.is_finite() && (total - 1.0).abs() <= 5e-3) {
        return Err(format!("rasterized mass {total} at {cells} cells"));
    }

    let mut order: Vec<u32> = (0..cells as u32).collect();
    order.sort_unstable_by(|&i, &j| dens[j as usize].total_cmp(&dens[i as usize]));

    // Walk the density ordering once; alphas are cut in ascending order so
    // the included prefix only ever grows.
    let mut by_alpha: Vec<(usize, f64)> = alphas.iter().copied().enumerate().collect();
    by_alpha.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut included = vec![false; cells];
    let mut cum = 0.0;
    let mut rank = 0usize;
    let mut sets: Vec<Option<HpdSet>> = vec![None; alphas.len()];
    for (slot, alpha) in by_alpha {
        let target = alpha * total;
        while cum < target && rank < cells {
            let cell = order[rank] as usize;
            included[cell] = true;
            cum += dens[cell] * h;
            rank += 1;
        }
        let attained = cum / total;
        if (attained - alpha).abs() > mass_tol {
            return Err(format!(
                "attained mass {attained} vs requested {alpha} at {cells} cells"
            ));
        }
        let threshold = if rank < cells { dens[order[rank] as usize] } else { 0.0 };
        let intervals = intervals_from_mask(&included, &dens, lo, h, threshold);
        sets[slot] = Some(HpdSet { alpha, intervals, attained_mass: attained, threshold });
    }
    Ok(sets.into_iter().map(|s| s.expect("every alpha cut")).collect())
}

/// Maximal runs of included cells, with run endpoints moved from cell
/// boundaries to the linear interpolant of the threshold crossing between
/// the two straddling cell centers.
fn intervals_from_mask(
    included: &[bool],
    dens: &[f64],
    lo: f64,
    h: f64,
    threshold: f64,
) -> Vec<(f64, f64)> {
    let center = |j: usize| lo + (j as f64 + 0.5) * h;
    let cells = included.len();
    let mut out = Vec::new();
    let mut j = 0;
    while j < cells {
        if !included[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j + 1 < cells && included[j + 1] {
            j += 1;
        }
        let end = j;
        let left = if start == 0 {
            center(0) - 0.5 * h
        } else {
            cross(center(start - 1), dens[start - 1], center(start), dens[start], threshold)
        };
        let right = if end == cells - 1 {
            center(end) + 0.5 * h
        } else {
            cross(center(end + 1), dens[end + 1], center(end), dens[end], threshold)
        };
        out.push((left, right));
        j += 1;
    }
    out
}

/// Point between an excluded cell center (outside, density below the
/// threshold) and an included one where the density crosses the threshold,
/// by linear interpolation; falls back to the shared cell boundary when the
/// densities are degenerate.
fn cross(x_out: f64, d_out: f64, x_in: f64, d_in: f64, threshold: f64) -> f64 {
    let denom = d_in - d_out;
    if !(denom > 0.0 && denom.is_finite() && threshold.is_finite()) {
        return 0.5 * (x_out + x_in);
    }
    let t = ((threshold - d_out) / denom).clamp(0.0, 1.0);
    x_out + t * (x_in - x_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{Component, ComponentLabel};
    use approx::assert_abs_diff_eq;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn mixture(parts: &[(f64, f64, f64)]) -> GaussianMixturePdf {
        let comps = parts
            .iter()
            .map(|&(weight, mean, sd)| Component {
                weight,
                mean,
                sd,
                label: ComponentLabel { m: 0, sigma_a: 1.0 },
            })
            .collect();
        GaussianMixturePdf::new(comps).unwrap()
    }

    fn z_of(alpha: f64) -> f64 {
        Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 * (1.0 + alpha))
    }

    const PAPER_ALPHAS: [f64; 7] = [0.1974, 0.383, 0.5468, 0.6827, 0.866, 0.954, 0.987];

    #[test]
    fn gaussian_intervals_match_exact_quantiles() {
        let pdf = mixture(&[(1.0, 0.7, 0.3)]);
        let solver = HpdSolver::new(&pdf, &PAPER_ALPHAS, &HpdConfig::default()).unwrap();
        for set in solver.sets() {
            assert_eq!(set.intervals.len(), 1, "alpha {}", set.alpha);
            let w = 0.3 * z_of(set.alpha);
            let (lo, hi) = set.intervals[0];
            assert_abs_diff_eq!(lo, 0.7 - w, epsilon = solver.cell_width());
            assert_abs_diff_eq!(hi, 0.7 + w, epsilon = solver.cell_width());
            assert_abs_diff_eq!(set.attained_mass, set.alpha, epsilon = 1e-3);
        }
    }

    #[test]
    fn endpoint_density_sits_on_the_threshold() {
        let pdf = mixture(&[(0.6, -1.0, 0.4), (0.4, 1.5, 0.7)]);
        let solver = HpdSolver::new(&pdf, &[0.6827, 0.954], &HpdConfig::default()).unwrap();
        for set in solver.sets() {
            for &(lo, hi) in &set.intervals {
                for e in [lo, hi] {
                    // Interior endpoints only; a grid-edge endpoint sits at
                    // far-tail density instead.
                    if pdf.density(e) > 1e-6 {
                        assert!(
                            (pdf.density(e) - set.threshold).abs() <= 0.02 * set.threshold,
                            "density {} vs threshold {} at {e}",
                            pdf.density(e),
                            set.threshold
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sets_nest_exactly_as_alpha_grows() {
        let pdf = mixture(&[(0.5, -3.0, 0.5), (0.3, 3.0, 0.5), (0.2, 0.0, 2.0)]);
        let solver = HpdSolver::new(&pdf, &PAPER_ALPHAS, &HpdConfig::default()).unwrap();
        for pair in solver.sets().windows(2) {
            let (small, big) = (&pair[0], &pair[1]);
            for &(lo, hi) in &small.intervals {
                assert!(
                    big.intervals.iter().any(|&(blo, bhi)| blo <= lo && hi <= bhi),
                    "[{lo}, {hi}] of alpha {} not inside alpha {}",
                    small.alpha,
                    big.alpha
                );
            }
            assert!(small.total_width() <= big.total_width());
            assert!(small.threshold >= big.threshold);
        }
    }

    #[test]
    fn symmetric_bimodal_yields_two_exact_intervals() {
        let pdf = mixture(&[(0.5, -3.0, 0.5), (0.5, 3.0, 0.5)]);
        let solver = HpdSolver::new(&pdf, &[0.6827], &HpdConfig::default()).unwrap();
        let set = &solver.sets()[0];
        assert_eq!(set.intervals.len(), 2);
        // With negligible overlap each component contributes half the mass,
        // so each interval is its component's own central-alpha interval.
        let w = 0.5 * z_of(0.6827);
        let tol = solver.cell_width();
        assert_abs_diff_eq!(set.intervals[0].0, -3.0 - w, epsilon = tol);
        assert_abs_diff_eq!(set.intervals[0].1, -3.0 + w, epsilon = tol);
        assert_abs_diff_eq!(set.intervals[1].0, 3.0 - w, epsilon = tol);
        assert_abs_diff_eq!(set.intervals[1].1, 3.0 + w, epsilon = tol);
        assert!(set.intervals[0].1 < set.intervals[1].0);
        assert_abs_diff_eq!(set.attained_mass, 0.6827, epsilon = 1e-3);
        assert!(set.contains(-3.0) && set.contains(3.0) && !set.contains(0.0));
    }

    #[test]
    fn unresolvable_spikes_are_rejected() {
        let pdf = mixture(&[(0.5, -1e9, 1e-3), (0.5, 1e9, 1e-3)]);
        let err = HpdSolver::new(&pdf, &[0.5], &HpdConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err:?}");
    }

    #[test]
    fn levels_must_be_interior_and_present() {
        let pdf = mixture(&[(1.0, 0.0, 1.0)]);
        for bad in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(HpdSolver::new(&pdf, &[bad], &HpdConfig::default()).is_err());
        }
        assert!(HpdSolver::new(&pdf, &[], &HpdConfig::default()).is_err());
        assert!(
            HpdConfig { min_cells: 8, ..HpdConfig::default() }.validate().is_err()
        );
    }

    #[test]
    fn single_level_wrapper_matches_solver() {
        let pdf = mixture(&[(0.7, 0.0, 1.0), (0.3, 2.0, 0.5)]);
        let via_solver = HpdSolver::new(&pdf, &[0.866], &HpdConfig::default()).unwrap();
        let direct = hpd_set(&pdf, 0.866, &HpdConfig::default()).unwrap();
        assert_eq!(direct, via_solver.sets()[0]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn mixture_strategy() -> impl Strategy<Value = GaussianMixturePdf> {
            proptest::collection::vec((0.05f64..1.0, -5.0f64..5.0, 0.1f64..1.0), 1..=4).prop_map(
                |parts| {
                    let total: f64 = parts.iter().map(|p| p.0).sum();
                    mixture(
                        &parts
                            .iter()
                            .map(|&(w, m, s)| (w / total, m, s))
                            .collect::<Vec<_>>(),
                    )
                },
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn hpd_sets_are_sane_and_nested(pdf in mixture_strategy()) {
                let alphas = [0.3, 0.7, 0.95];
                let solver = HpdSolver::new(&pdf, &alphas, &HpdConfig::default()).unwrap();
                let (lo, hi) = super::super::domain(&pdf, 8.0);
                for set in solver.sets() {
                    prop_assert!((set.attained_mass - set.alpha).abs() <= 1e-3);
                    for &(a, b) in &set.intervals {
                        prop_assert!(a < b);
                        prop_assert!(a >= lo - 1e-9 && b <= hi + 1e-9);
                    }
                    for pair in set.intervals.windows(2) {
                        prop_assert!(pair[0].1 < pair[1].0);
                    }
                }
                for pair in solver.sets().windows(2) {
                    for &(a, b) in &pair[0].intervals {
                        prop_assert!(pair[1].intervals.iter().any(|&(c, d)| c <= a && b <= d));
                    }
                }
            }
        }
    }
}
