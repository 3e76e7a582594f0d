//! Entropy statistics of Haar-random pure states, with and without an
//! output-energy constraint, and the analytic noiseless capacity-power curve
//! they induce.
//!
//! A Haar-random state's outcome probabilities are uniform on the simplex;
//! their entropy concentrates at `T_N - 1` (harmonic number minus one),
//! asymptotically `ln N - (1 - γ)`. Under a minimum-energy constraint the
//! typical distribution becomes `P_n = 1/(ν + μ b_n)` with `(ν, μ)` fixed by
//! normalization and energy; sampling draws independent exponentials with
//! those rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::entropy::shannon_entropy;
use crate::error::{Error, Result};
use crate::linalg::ProbabilityVector;
use crate::par::map_maybe_parallel;

/// `1 - γ` to the six decimals used throughout the capacity expressions
/// (`γ` the Euler-Mascheroni constant). Kept at this literal precision so
/// curve values are reproducible against the published constant.
pub const ENTROPY_DEFICIT: f64 = 0.422784;

/// Chunk size for seed-split Monte Carlo batches: chunk `c` of a run with
/// base seed `s` draws from ChaCha stream `c` of seed `s`, so results are
/// independent of thread count.
const MC_CHUNK: usize = 512;

/// Output-energy levels `b_n = Tr[H π_n]` of the measurement basis,
/// ascending.
#[derive(Debug, Clone)]
pub struct EnergySpectrum {
    levels: Vec<f64>,
}

impl EnergySpectrum {
    /// Levels are sorted ascending on construction; at least two required.
    pub fn new(mut levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::OutOfRange("spectrum needs at least two levels".into()));
        }
        if levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::OutOfRange("non-finite energy level".into()));
        }
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn min_level(&self) -> f64 {
        self.levels[0]
    }

    pub fn max_level(&self) -> f64 {
        *self.levels.last().unwrap()
    }
}

/// The constrained typical distribution `P_n = 1/(ν + μ b_n)`.
#[derive(Debug, Clone)]
pub struct ConstrainedDist {
    pub nu: f64,
    pub mu: f64,
    pub probs: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Haar sampling and exact means
// ---------------------------------------------------------------------------

/// Outcome probabilities of a Haar-random pure state: squared magnitudes of
/// a normalized standard complex Gaussian vector (uniform on the simplex).
/// Deterministic per seed.
pub fn haar_probability_vector(n: usize, seed: u64) -> ProbabilityVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_weights(n, &mut rng)
}

fn haar_weights(n: usize, rng: &mut ChaCha8Rng) -> ProbabilityVector {
    let mut weights: Vec<f64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            re * re + im * im
        })
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    ProbabilityVector::new(weights).expect("normalized magnitudes form a distribution")
}

/// Harmonic number `T_N = 1 + 1/2 + … + 1/N`.
fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Exact mean entropy of a Haar-random pure state: `T_N - 1` nats, valid at
/// every dimension.
pub fn mean_entropy_exact(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::OutOfRange("dimension must be positive".into()));
    }
    Ok(harmonic(n) - 1.0)
}

/// Large-`N` typical entropy `ln N - 0.422784` nats.
pub fn typical_entropy_asymptotic(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::OutOfRange("asymptotic form needs N ≥ 2".into()));
    }
    Ok((n as f64).ln() - ENTROPY_DEFICIT)
}

/// Energy of the typical (unconstrained) random state: `Σ b_n / N`.
pub fn typical_energy(spectrum: &EnergySpectrum) -> f64 {
    spectrum.levels.iter().sum::<f64>() / spectrum.len() as f64
}

// ---------------------------------------------------------------------------
// Constrained typical distribution
// ---------------------------------------------------------------------------

/// Solve `Σ 1/(ν + μ b_n) = 1` and `Σ b_n/(ν + μ b_n) = B` for `(ν, μ)`.
///
/// `ν` is eliminated first: at fixed `μ` the normalization is strictly
/// decreasing in `ν` on the positivity domain, so plain bisection finds it;
/// an outer bisection on `μ` then matches the energy, which is monotone in
/// `μ`. Both loops run to floating-point exhaustion.
pub fn solve_nu_mu(spectrum: &EnergySpectrum, threshold: f64) -> Result<ConstrainedDist> {
    let b = spectrum.levels();
    if !(spectrum.min_level() < threshold && threshold < spectrum.max_level()) {
        return Err(Error::OutOfRange(format!(
            "threshold {threshold} outside the open level hull ({}, {})",
            spectrum.min_level(),
            spectrum.max_level()
        )));
    }

    let energy_at = |mu: f64| -> Option<(f64, f64)> {
        let nu = solve_nu(b, mu)?;
        let energy: f64 = b.iter().map(|&bn| bn / (nu + mu * bn)).sum();
        Some((nu, energy))
    };

    // E(0) = B_t; E is decreasing in μ, so bracket on the side B falls.
    let (_, e0) = energy_at(0.0).ok_or_else(|| Error::NoConvergence("ν root at μ = 0".into()))?;
    let (mut lo, mut hi) = if threshold > e0 {
        // need μ < 0
        let mut lo = -1.0;
        let mut expansions = 0;
        loop {
            match energy_at(lo) {
                Some((_, e)) if e >= threshold => break,
                _ => {
                    lo *= 2.0;
                    expansions += 1;
                    if expansions > 400 {
                        return Err(Error::NoConvergence("μ bracket expansion (negative side)".into()));
                    }
                }
            }
        }
        (lo, 0.0)
    } else {
        let mut hi = 1.0;
        let mut expansions = 0;
        loop {
            match energy_at(hi) {
                Some((_, e)) if e <= threshold => break,
                _ => {
                    hi *= 2.0;
                    expansions += 1;
                    if expansions > 400 {
                        return Err(Error::NoConvergence("μ bracket expansion (positive side)".into()));
                    }
                }
            }
        }
        (0.0, hi)
    };

    // bisect to floating-point exhaustion; E decreasing: E(lo) ≥ B ≥ E(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match energy_at(mid) {
            Some((_, e)) if e >= threshold => lo = mid,
            _ => hi = mid,
        }
    }
    let mu = 0.5 * (lo + hi);
    let (nu, energy) = energy_at(mu).ok_or_else(|| Error::NoConvergence("final ν solve".into()))?;

    let probs: Vec<f64> = b.iter().map(|&bn| 1.0 / (nu + mu * bn)).collect();
    let norm_residual = (probs.iter().sum::<f64>() - 1.0).abs();
    let energy_residual = (energy - threshold).abs();
    if norm_residual > 1e-10 || energy_residual > 1e-10 {
        return Err(Error::NoConvergence(format!(
            "residuals {norm_residual:.2e} / {energy_residual:.2e} above 1e-10"
        )));
    }
    if probs.iter().any(|&p| !p.is_finite() || p <= 0.0) {
        return Err(Error::NoConvergence("positivity lost at the solution".into()));
    }
    Ok(ConstrainedDist { nu, mu, probs })
}

/// Root of `Σ 1/(ν + μ b_n) = 1` in `ν`, if the bracket exists.
fn solve_nu(b: &[f64], mu: f64) -> Option<f64> {
    // positivity requires ν > -μ b_n for every n
    let nu_min = b
        .iter()
        .map(|&bn| -mu * bn)
        .fold(f64::NEG_INFINITY, f64::max);
    let g = |nu: f64| -> f64 { b.iter().map(|&bn| 1.0 / (nu + mu * bn)).sum() };

    // expand until g(hi) < 1 (g decreases from +∞ at nu_min to 0)
    let scale = 1.0 + nu_min.abs();
    let mut width = scale * 1e-12;
    let mut hi = nu_min + width;
    let mut expansions = 0;
    while g(hi) >= 1.0 {
        width *= 2.0;
        hi = nu_min + width;
        expansions += 1;
        if expansions > 400 {
            return None;
        }
    }
    let mut lo = nu_min + width / 2.0;
    if g(lo) < 1.0 {
        lo = nu_min;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Analytic noiseless capacity-power curve of a random state ensemble:
/// flat at `ln N - 0.422784` up to the typical energy `B_t`, then the
/// entropy of the constrained typical distribution minus the same constant.
/// Continuous at `B_t`; unclamped, so it goes negative as `B` approaches the
/// top level (callers may clamp for presentation).
pub fn noiseless_capacity_power(spectrum: &EnergySpectrum, threshold: f64) -> Result<f64> {
    if threshold >= spectrum.max_level() {
        return Err(Error::OutOfRange(format!(
            "threshold {threshold} at or above the top level {}",
            spectrum.max_level()
        )));
    }
    let bt = typical_energy(spectrum);
    if threshold <= bt {
        return Ok((spectrum.len() as f64).ln() - ENTROPY_DEFICIT);
    }
    let dist = solve_nu_mu(spectrum, threshold)?;
    let tilde: f64 = -dist.probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>();
    Ok(tilde - ENTROPY_DEFICIT)
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// Monte Carlo summary of constrained-ensemble entropies.
#[derive(Debug, Clone)]
pub struct McEntropy {
    pub mean: f64,
    pub stderr: f64,
    pub energy_mean: f64,
    pub energy_stderr: f64,
    /// First-order bias `Σ (B - b_n)/λ_n²` that renormalizing each draw to
    /// the simplex introduces into the mean energy; reported so consumers can
    /// budget for it instead of assuming it away.
    pub energy_bias_estimate: f64,
    pub samples: usize,
}

/// Sample the constrained ensemble: independent exponentials with rates
/// `ν + μ b_n`, each draw renormalized to the simplex, then mean/stderr of
/// the Shannon entropy and of the achieved energy. Seed-split across chunks;
/// deterministic for a given `(spectrum, threshold, samples, seed)`.
pub fn mc_constrained_entropy(
    spectrum: &EnergySpectrum,
    threshold: f64,
    samples: usize,
    seed: u64,
) -> Result<McEntropy> {
    if samples < 100 {
        return Err(Error::OutOfRange(format!("need at least 100 samples, got {samples}")));
    }
    let dist = solve_nu_mu(spectrum, threshold)?;
    let rates: Vec<f64> = spectrum.levels().iter().map(|&bn| dist.nu + dist.mu * bn).collect();
    let levels = spectrum.levels().to_vec();

    let chunks: Vec<(usize, usize)> = (0..samples)
        .step_by(MC_CHUNK)
        .enumerate()
        .map(|(c, start)| (c, samples.min(start + MC_CHUNK) - start))
        .collect();
    let per_chunk = map_maybe_parallel(chunks, true, |(chunk, count)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let mut draw: Vec<f64> = rates
                .iter()
                .map(|&rate| {
                    let u: f64 = rng.random::<f64>();
                    -(1.0 - u).ln() / rate
                })
                .collect();
            let total: f64 = draw.iter().sum();
            for w in &mut draw {
                *w /= total;
            }
            let entropy = -draw.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>();
            let energy: f64 = draw.iter().zip(&levels).map(|(p, b)| p * b).sum();
            rows.push((entropy, energy));
        }
        rows
    });

    let all: Vec<(f64, f64)> = per_chunk.into_iter().flatten().collect();
    let (entropy_mean, entropy_stderr) = mean_stderr(all.iter().map(|r| r.0));
    let (energy_mean, energy_stderr) = mean_stderr(all.iter().map(|r| r.1));
    let energy_bias_estimate: f64 = rates
        .iter()
        .zip(&levels)
        .map(|(&rate, &b)| (threshold - b) / (rate * rate))
        .sum();
    Ok(McEntropy {
        mean: entropy_mean,
        stderr: entropy_stderr,
        energy_mean,
        energy_stderr,
        energy_bias_estimate,
        samples,
    })
}

fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Standard deviation of the Haar entropy at each dimension in `dims`.
/// Needs at least two samples; decreasing in `N` by concentration of
/// measure.
pub fn entropy_std_curve(dims: &[usize], samples: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
    if samples < 2 {
        return Err(Error::OutOfRange("standard deviation needs at least 2 samples".into()));
    }
    let mut curve = Vec::with_capacity(dims.len());
    for (i, &n) in dims.iter().enumerate() {
        if n == 0 {
            return Err(Error::OutOfRange("dimension must be positive".into()));
        }
        let chunks: Vec<(usize, usize)> = (0..samples)
            .step_by(MC_CHUNK)
            .enumerate()
            .map(|(c, start)| (c, samples.min(start + MC_CHUNK) - start))
            .collect();
        let per_chunk = map_maybe_parallel(chunks, true, |(chunk, count)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // chunk streams are disjoint across dimensions
            rng.set_stream(((i as u64) << 32) | chunk as u64);
            (0..count)
                .map(|_| shannon_entropy(&haar_weights(n, &mut rng)))
                .collect::<Vec<f64>>()
        });
        let entropies: Vec<f64> = per_chunk.into_iter().flatten().collect();
        let mean = entropies.iter().sum::<f64>() / entropies.len() as f64;
        let var = entropies.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / (entropies.len() as f64 - 1.0);
        curve.push((n, var.sqrt()));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::LN_2;

    #[test]
    fn haar_vector_basics() {
        let p = haar_probability_vector(1, 3);
        assert_eq!(p.weights(), vec![1.0]);
        for seed in 0..20 {
            let p = haar_probability_vector(8, seed);
            let total: f64 = p.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        // determinism
        assert_eq!(haar_probability_vector(5, 9).weights(), haar_probability_vector(5, 9).weights());
    }

    #[test]
    fn haar_first_weight_mean_is_one_over_n() {
        let n = 8;
        let draws = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let values: Vec<f64> = (0..draws).map(|_| haar_weights(n, &mut rng).weight(0)).collect();
        let (mean, stderr) = mean_stderr(values.iter().copied());
        assert!(
            (mean - 1.0 / n as f64).abs() < 3.0 * stderr,
            "mean {mean} vs 1/{n} (stderr {stderr})"
        );
    }

    #[test]
    fn haar_entropy_mean_matches_harmonic_formula() {
        for n in [2usize, 8, 64] {
            let mut rng = ChaCha8Rng::seed_from_u64(64 + n as u64);
            let entropies: Vec<f64> = (0..10_000)
                .map(|_| shannon_entropy(&haar_weights(n, &mut rng)))
                .collect();
            let (mean, stderr) = mean_stderr(entropies.iter().copied());
            let exact = mean_entropy_exact(n).unwrap();
            assert!(
                (mean - exact).abs() < 3.0 * stderr,
                "N={n}: mean {mean} vs {exact} (stderr {stderr})"
            );
        }
    }

    #[test]
    fn exact_mean_entropy_examples() {
        assert_eq!(mean_entropy_exact(1).unwrap(), 0.0);
        assert!((mean_entropy_exact(2).unwrap() - 0.5).abs() < 1e-15);
        assert!((mean_entropy_exact(10).unwrap() - 1.928968).abs() < 1e-6);
        assert!(mean_entropy_exact(0).is_err());
    }

    #[test]
    fn asymptotic_entropy_examples() {
        assert!((typical_entropy_asymptotic(2).unwrap() - 0.270363).abs() < 1e-6);
        assert!(typical_entropy_asymptotic(1).is_err());
        // approaches the exact mean as N grows
        let gap = (mean_entropy_exact(100).unwrap() - typical_entropy_asymptotic(100).unwrap()).abs();
        assert!(gap < 0.006, "gap {gap}");
        // strictly increasing in N
        for n in 2..50 {
            assert!(typical_entropy_asymptotic(n + 1).unwrap() > typical_entropy_asymptotic(n).unwrap());
        }
    }

    #[test]
    fn typical_energy_examples() {
        let s = EnergySpectrum::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(typical_energy(&s), 0.5);
        let s = EnergySpectrum::new(vec![0.7; 3]).unwrap();
        assert!((typical_energy(&s) - 0.7).abs() < 1e-15);
        let s = EnergySpectrum::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert!((typical_energy(&s) - 1.0).abs() < 1e-15);
        assert!(EnergySpectrum::new(vec![1.0]).is_err());
    }

    #[test]
    fn solve_nu_mu_two_levels_closed_form() {
        // b = (0, 1), B = 3/4: normalization gives 1/ν = 1/4, energy gives
        // 1/(ν+μ) = 3/4, so (ν, μ) = (4, -8/3)
        let s = EnergySpectrum::new(vec![0.0, 1.0]).unwrap();
        let d = solve_nu_mu(&s, 0.75).unwrap();
        assert!((d.nu - 4.0).abs() < 1e-9);
        assert!((d.mu + 8.0 / 3.0).abs() < 1e-9);
        assert!((d.probs[0] - 0.25).abs() < 1e-10);
        assert!((d.probs[1] - 0.75).abs() < 1e-10);

        // B at the typical point: μ = 0, ν = N
        let d = solve_nu_mu(&s, 0.5).unwrap();
        assert!(d.mu.abs() < 1e-10);
        assert!((d.nu - 2.0).abs() < 1e-9);

        let s3 = EnergySpectrum::new(vec![0.0, 1.0, 2.0]).unwrap();
        let d = solve_nu_mu(&s3, 1.0).unwrap();
        assert!(d.mu.abs() < 1e-10);
        assert!((d.nu - 3.0).abs() < 1e-9);
    }

    #[test]
    fn solve_nu_mu_rejects_hull_boundary() {
        let s = EnergySpectrum::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(solve_nu_mu(&s, 0.0), Err(Error::OutOfRange(_))));
        assert!(matches!(solve_nu_mu(&s, 1.0), Err(Error::OutOfRange(_))));
        assert!(matches!(solve_nu_mu(&s, 1.3), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn solve_nu_mu_residuals_on_random_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for n in [2usize, 3, 8, 16, 64] {
            let levels: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let s = match EnergySpectrum::new(levels) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let lo = s.min_level();
            let hi = s.max_level();
            for frac in [0.15, 0.5, 0.9] {
                let b = lo + (hi - lo) * frac;
                if b <= lo || b >= hi {
                    continue;
                }
                let d = solve_nu_mu(&s, b).unwrap();
                let norm: f64 = d.probs.iter().sum();
                let energy: f64 = d.probs.iter().zip(s.levels()).map(|(p, l)| p * l).sum();
                assert!((norm - 1.0).abs() <= 1e-10, "N={n} frac={frac}");
                assert!((energy - b).abs() <= 1e-10, "N={n} frac={frac}");
                assert!(d.probs.iter().all(|&p| p > 0.0));
            }
        }
    }

    #[test]
    fn capacity_power_branches() {
        let s = EnergySpectrum::new(vec![0.0, 1.0]).unwrap();
        // flat branch
        let flat = noiseless_capacity_power(&s, 0.3).unwrap();
        assert!((flat - (LN_2 - ENTROPY_DEFICIT)).abs() < 1e-15);
        assert!((flat - 0.270363).abs() < 1e-6);
        // declining branch: H̃ of (1/4, 3/4) minus the deficit
        let v = noiseless_capacity_power(&s, 0.75).unwrap();
        let h34 = crate::entropy::binary_entropy(0.75).unwrap();
        assert!((v - (h34 - ENTROPY_DEFICIT)).abs() < 1e-10);
        assert!((v - 0.139551).abs() < 1e-6);
        // continuous at B_t
        let just_above = noiseless_capacity_power(&s, 0.5 + 1e-12).unwrap();
        assert!((just_above - flat).abs() < 1e-9);
        // tail: H̃ shrinks toward 0, the value toward -deficit
        let tail = noiseless_capacity_power(&s, 0.9999).unwrap();
        assert!(tail < -0.42);
        assert!(tail > -ENTROPY_DEFICIT - 1e-6);
        // out of range at the top level
        assert!(noiseless_capacity_power(&s, 1.0).is_err());
    }

    #[test]
    fn capacity_power_monotone_and_concave_above_bt() {
        let s = EnergySpectrum::new(vec![0.1, 0.4, 0.7, 1.0]).unwrap();
        let bt = typical_energy(&s);
        let top = s.max_level();
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let b = bt + (top - bt) * (i as f64 + 0.5) / 41.0;
                (b, noiseless_capacity_power(&s, b).unwrap())
            })
            .collect();
        for w in pts.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-9, "non-increasing above B_t");
        }
        let report = crate::capacity::check_concavity(&pts, 1e-6).unwrap();
        assert!(report.is_concave, "violation {}", report.max_violation);
        // constant below B_t
        let a = noiseless_capacity_power(&s, 0.0).unwrap();
        let b = noiseless_capacity_power(&s, bt * 0.9).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn mc_unconstrained_matches_exact_mean() {
        for n in [2usize, 8, 64] {
            let levels: Vec<f64> = (0..n).map(|k| k as f64).collect();
            let s = EnergySpectrum::new(levels).unwrap();
            let bt = typical_energy(&s);
            let mc = mc_constrained_entropy(&s, bt, 10_000, 77).unwrap();
            let exact = mean_entropy_exact(n).unwrap();
            assert!(
                (mc.mean - exact).abs() < 3.0 * mc.stderr,
                "N={n}: {} vs {exact} (stderr {})",
                mc.mean,
                mc.stderr
            );
        }
    }

    #[test]
    fn mc_constrained_energy_consistency() {
        let n = 64usize;
        let levels: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
        let s = EnergySpectrum::new(levels).unwrap();
        let b = 0.6 * s.max_level();
        let mc = mc_constrained_entropy(&s, b, 10_000, 99).unwrap();
        let allowance = 3.0 * mc.energy_stderr + mc.energy_bias_estimate.abs();
        assert!(
            (mc.energy_mean - b).abs() <= allowance,
            "energy {} vs B={b}, stderr {}, bias {}",
            mc.energy_mean,
            mc.energy_stderr,
            mc.energy_bias_estimate
        );
    }

    #[test]
    fn mc_stderr_scales_with_samples() {
        let s = EnergySpectrum::new(vec![0.0, 0.5, 1.0, 1.5]).unwrap();
        let bt = typical_energy(&s);
        let small = mc_constrained_entropy(&s, bt, 400, 5).unwrap();
        let large = mc_constrained_entropy(&s, bt, 40_000, 5).unwrap();
        let ratio = small.stderr / large.stderr;
        // CLT: 10x the samples shrinks stderr by √100/√1 = 10
        assert!((ratio - 10.0).abs() < 3.0, "ratio {ratio}");
    }

    #[test]
    fn mc_rejects_tiny_sample_counts() {
        let s = EnergySpectrum::new(vec![0.0, 1.0]).unwrap();
        assert!(mc_constrained_entropy(&s, 0.5, 99, 1).is_err());
    }

    #[test]
    fn mc_is_deterministic_per_seed() {
        let s = EnergySpectrum::new(vec![0.0, 1.0, 2.0]).unwrap();
        let a = mc_constrained_entropy(&s, 1.2, 2_000, 31).unwrap();
        let b = mc_constrained_entropy(&s, 1.2, 2_000, 31).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.stderr, b.stderr);
    }

    #[test]
    fn entropy_std_decreases_with_dimension() {
        let curve = entropy_std_curve(&[8, 64], 4_000, 11).unwrap();
        assert!(curve[1].1 < curve[0].1, "std(64) = {} vs std(8) = {}", curve[1].1, curve[0].1);
        assert!(curve.iter().all(|&(_, s)| s > 0.0));
        assert!(entropy_std_curve(&[4], 1, 11).is_err());
    }

    #[test]
    fn pre_normalization_energy_variance_matches_formula() {
        // var(Σ p_n b_n) = Σ b_n²/N² for independent Exp(N) weights
        let n = 64usize;
        let mut rng = ChaCha8Rng::seed_from_u64(321);
        let levels: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let predicted: f64 = levels.iter().map(|b| b * b).sum::<f64>() / (n * n) as f64;
        let draws = 20_000;
        let energies: Vec<f64> = (0..draws)
            .map(|_| {
                levels
                    .iter()
                    .map(|&b| {
                        let u: f64 = rng.random::<f64>();
                        b * (-(1.0 - u).ln() / n as f64)
                    })
                    .sum::<f64>()
            })
            .collect();
        let mean = energies.iter().sum::<f64>() / draws as f64;
        let var = energies.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (draws as f64 - 1.0);
        let ratio = var / predicted;
        assert!(
            (1.0 / 1.5..=1.5).contains(&ratio),
            "sample variance {var} vs predicted {predicted} (ratio {ratio})"
        );
    }
}
