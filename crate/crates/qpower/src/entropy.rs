//! Entropy primitives. Everything is in nats; conversion to bits happens at
//! the presentation layer only.

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, ProbabilityVector, PSD_TOL};

pub const LN_2: f64 = std::f64::consts::LN_2;

/// `-Σ λ ln λ` over a spectrum, with `0 ln 0 := 0`. Eigenvalues in
/// `[-PSD_TOL, 0)` are numerical noise and are clamped to zero; anything more
/// negative must have been rejected upstream.
pub(crate) fn spectrum_entropy(eigenvalues: &[f64]) -> f64 {
    debug_assert!(eigenvalues.iter().all(|&l| l >= -PSD_TOL));
    -eigenvalues
        .iter()
        .map(|&l| l.max(0.0))
        .filter(|&l| l > 0.0)
        .map(|l| l * l.ln())
        .sum::<f64>()
}

/// Von Neumann entropy `S(ρ) = -Tr ρ ln ρ` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    spectrum_entropy(rho.spectrum())
}

/// Shannon entropy `-Σ p ln p` in nats, zero weights skipped.
pub fn shannon_entropy(p: &ProbabilityVector) -> f64 {
    -p.iter().filter(|&w| w > 0.0).map(|w| w * w.ln()).sum::<f64>()
}

/// Binary entropy `h(p) = -p ln p - (1-p) ln(1-p)` in nats.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("binary entropy argument {p} not in [0, 1]")));
    }
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    Ok(h)
}
