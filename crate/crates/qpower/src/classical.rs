//! Classical capacity-power baselines: the three binary closed forms and a
//! power-constrained Blahut-Arimoto solver for arbitrary discrete memoryless
//! channels.
//!
//! The energy constraint `E[b(Y)] ≥ B` is linear in the input distribution
//! through the per-input expected energies `e(x) = Σ_y Q(y|x) b(y)`, so the
//! solver runs the standard Blahut-Arimoto update tilted by a Lagrange
//! multiplier on the energy and bisects the multiplier until the constraint
//! is met.

use crate::capacity::{CapacityResult, SolveStatus};
use crate::entropy::{binary_entropy, LN_2};
use crate::error::{Error, Result};
use crate::linalg::ProbabilityVector;

/// Discrete memoryless channel: a row-stochastic transition matrix plus an
/// energy value for every output letter.
#[derive(Debug, Clone)]
pub struct DiscreteChannel {
    transition: Vec<Vec<f64>>,
    output_energies: Vec<f64>,
}

impl DiscreteChannel {
    pub fn new(transition: Vec<Vec<f64>>, output_energies: Vec<f64>) -> Result<Self> {
        if transition.is_empty() {
            return Err(Error::InvalidChannel("empty transition matrix".into()));
        }
        let outputs = transition[0].len();
        if outputs == 0 || output_energies.len() != outputs {
            return Err(Error::DimMismatch { expected: outputs, got: output_energies.len() });
        }
        for row in &transition {
            if row.len() != outputs {
                return Err(Error::InvalidChannel("ragged transition matrix".into()));
            }
            if row.iter().any(|&q| !q.is_finite() || q < 0.0) {
                return Err(Error::InvalidChannel("negative or non-finite entry".into()));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidChannel(format!("row sums to {sum}")));
            }
        }
        Ok(Self { transition, output_energies })
    }

    /// Binary noiseless channel with output energies `b = (0, 1)`.
    pub fn binary_noiseless() -> Self {
        Self {
            transition: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            output_energies: vec![0.0, 1.0],
        }
    }

    /// Binary symmetric channel with flip probability `p`, `b = (0, 1)`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("flip probability {p} outside [0, 1]")));
        }
        Ok(Self {
            transition: vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
            output_energies: vec![0.0, 1.0],
        })
    }

    /// Binary erasure channel with erasure probability `pe`, outputs ordered
    /// `(0, erasure, 1)`.
    ///
    /// The erasure letter carries no energy and the surviving "1" output is
    /// rescaled to `1/(1-pe)`, so the expected received energy equals the
    /// transmitted symbol energy: `e(0) = 0`, `e(1) = 1`. This is the energy
    /// assignment under which the textbook closed form
    /// `(1-pe)·h(B)` for `B ≥ 1/2` holds.
    pub fn bec(pe: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pe) {
            return Err(Error::OutOfRange(format!("erasure probability {pe} outside [0, 1]")));
        }
        if pe >= 1.0 {
            return Err(Error::OutOfRange("erasure probability 1 leaves no signal".into()));
        }
        Ok(Self {
            transition: vec![vec![1.0 - pe, pe, 0.0], vec![0.0, pe, 1.0 - pe]],
            output_energies: vec![0.0, 0.0, 1.0 / (1.0 - pe)],
        })
    }

    pub fn inputs(&self) -> usize {
        self.transition.len()
    }

    pub fn outputs(&self) -> usize {
        self.output_energies.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn output_energies(&self) -> &[f64] {
        &self.output_energies
    }

    /// Expected output energy of each input letter, `e(x) = Σ_y Q(y|x) b(y)`.
    pub fn input_energies(&self) -> Vec<f64> {
        self.transition
            .iter()
            .map(|row| row.iter().zip(&self.output_energies).map(|(q, b)| q * b).sum())
            .collect()
    }
}

/// `I(X; Y)` in nats for input distribution `p`.
pub fn mutual_information(p: &ProbabilityVector, ch: &DiscreteChannel) -> Result<f64> {
    if p.len() != ch.inputs() {
        return Err(Error::DimMismatch { expected: ch.inputs(), got: p.len() });
    }
    let outputs = ch.outputs();
    let mut marginal = vec![0.0; outputs];
    for (x, row) in ch.transition.iter().enumerate() {
        for (y, &q) in row.iter().enumerate() {
            marginal[y] += p.weight(x) * q;
        }
    }
    let mut info = 0.0;
    for (x, row) in ch.transition.iter().enumerate() {
        let px = p.weight(x);
        if px == 0.0 {
            continue;
        }
        for (y, &q) in row.iter().enumerate() {
            if q > 0.0 && marginal[y] > 0.0 {
                info += px * q * (q / marginal[y]).ln();
            }
        }
    }
    Ok(info)
}

/// One tilted Blahut-Arimoto fixed point: maximize `I(p) + λ E(p)`.
/// Returns `(p, I, E, sup_gap)`.
fn ba_fixed_point(ch: &DiscreteChannel, lambda: f64, max_iter: usize) -> (Vec<f64>, f64, f64, f64) {
    let n = ch.inputs();
    let energies = ch.input_energies();
    let mut p = vec![1.0 / n as f64; n];
    let mut gap = f64::INFINITY;
    for _ in 0..max_iter {
        let mut marginal = vec![0.0; ch.outputs()];
        for (x, row) in ch.transition.iter().enumerate() {
            for (y, &q) in row.iter().enumerate() {
                marginal[y] += p[x] * q;
            }
        }
        // per-letter exponent D_x + λ e_x
        let mut exponents = vec![0.0; n];
        for (x, row) in ch.transition.iter().enumerate() {
            let mut d = 0.0;
            for (y, &q) in row.iter().enumerate() {
                if q > 0.0 && marginal[y] > 0.0 {
                    d += q * (q / marginal[y]).ln();
                }
            }
            exponents[x] = d + lambda * energies[x];
        }
        let avg: f64 = p.iter().zip(&exponents).map(|(pi, ei)| pi * ei).sum();
        let sup = exponents
            .iter()
            .zip(&p)
            .filter(|(_, &pi)| pi >= 0.0)
            .map(|(&e, _)| e)
            .fold(f64::NEG_INFINITY, f64::max);
        gap = sup - avg;
        if gap.abs() < 1e-13 {
            break;
        }
        let peak = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut next: Vec<f64> = p
            .iter()
            .zip(&exponents)
            .map(|(pi, ei)| pi * (ei - peak).exp())
            .collect();
        let total: f64 = next.iter().sum();
        for w in &mut next {
            *w /= total;
        }
        p = next;
    }
    let prob = ProbabilityVector::new(normalize(&p)).expect("BA iterate stays on the simplex");
    let info = mutual_information(&prob, ch).unwrap();
    let energy: f64 = p.iter().zip(ch.input_energies()).map(|(pi, ei)| pi * ei).sum();
    (p, info, energy, gap)
}

fn normalize(p: &[f64]) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    p.iter().map(|x| (x / total).max(0.0)).collect()
}

const BA_MAX_ITER: usize = 50_000;

/// Capacity-power point of a discrete channel: maximize `I(X;Y)` subject to
/// `E[b(Y)] ≥ B`. The multiplier bracket grows geometrically from `[0, 1]`
/// until the energy crosses `B`, then bisection tightens it to 1e-9 on the
/// energy.
pub fn capacity_power_ba(ch: &DiscreteChannel, threshold: f64) -> Result<CapacityResult> {
    let energies = ch.input_energies();
    let max_e = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if threshold > max_e + 1e-9 {
        return Err(Error::Infeasible { threshold, max_feasible: max_e });
    }

    // unconstrained solution first: if it is already B-admissible, done
    let (p0, info0, energy0, _) = ba_fixed_point(ch, 0.0, BA_MAX_ITER);
    if energy0 >= threshold - 1e-12 {
        return Ok(classical_result(p0, info0, energy0, threshold, false));
    }

    // grow the bracket until the energy crosses the threshold
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut hi_state = None;
    for _ in 0..200 {
        let state = ba_fixed_point(ch, hi, BA_MAX_ITER);
        if state.2 >= threshold {
            hi_state = Some(state);
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    let Some(mut upper) = hi_state else {
        // threshold within slack of the best letter: concentrate there
        let argmax: Vec<f64> = energies
            .iter()
            .map(|&e| if e >= max_e - 1e-12 { 1.0 } else { 0.0 })
            .collect();
        let p = normalize(&argmax);
        let prob = ProbabilityVector::new(p.clone()).unwrap();
        let info = mutual_information(&prob, ch)?;
        let energy: f64 = p.iter().zip(&energies).map(|(pi, ei)| pi * ei).sum();
        return Ok(classical_result(p, info, energy, threshold, true));
    };

    for _ in 0..200 {
        if (upper.2 - threshold).abs() <= 1e-9 || (hi - lo) < 1e-15 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let state = ba_fixed_point(ch, mid, BA_MAX_ITER);
        if state.2 >= threshold {
            hi = mid;
            upper = state;
        } else {
            lo = mid;
        }
    }

    let (p, info, energy, _) = upper;
    Ok(classical_result(normalize(&p), info, energy, threshold, true))
}

fn classical_result(p: Vec<f64>, info: f64, energy: f64, threshold: f64, active: bool) -> CapacityResult {
    CapacityResult {
        value: info,
        status: SolveStatus::Converged,
        argmax_probs: ProbabilityVector::new(p).ok(),
        argmax_states: Vec::new(),
        achieved_energy: vec![energy],
        active_constraints: if active && (energy - threshold).abs() <= 1e-6 { vec![0] } else { vec![] },
        kkt_residual: f64::NAN,
        iterations: 0,
    }
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

fn check_unit(b: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::OutOfRange(format!("{name} = {b} outside [0, 1]")));
    }
    Ok(())
}

/// Binary noiseless channel with `b = (0, 1)`:
/// `ln 2` for `B ≤ 1/2`, `h(B)` beyond.
pub fn binary_noiseless_cb(threshold: f64) -> Result<f64> {
    check_unit(threshold, "threshold")?;
    if threshold <= 0.5 {
        Ok(LN_2)
    } else {
        binary_entropy(threshold)
    }
}

/// Binary symmetric channel: `ln 2 - h(p)` for `B ≤ 1/2`, `h(B) - h(p)` on
/// the constrained branch, valid only while `p ≤ 1 - B`.
pub fn bsc_cb(p: f64, threshold: f64) -> Result<f64> {
    check_unit(p, "flip probability")?;
    check_unit(threshold, "threshold")?;
    if threshold <= 0.5 {
        Ok(LN_2 - binary_entropy(p)?)
    } else {
        if p > 1.0 - threshold + 1e-12 {
            return Err(Error::OutsideValidity(format!(
                "bsc closed form needs p ≤ 1 - B (p = {p}, B = {threshold})"
            )));
        }
        Ok(binary_entropy(threshold)? - binary_entropy(p)?)
    }
}

/// Binary erasure channel: `(1-pe) ln 2` for `B ≤ 1/2`, `(1-pe) h(B)` beyond.
pub fn bec_cb(pe: f64, threshold: f64) -> Result<f64> {
    check_unit(pe, "erasure probability")?;
    check_unit(threshold, "threshold")?;
    if threshold <= 0.5 {
        Ok((1.0 - pe) * LN_2)
    } else {
        Ok((1.0 - pe) * binary_entropy(threshold)?)
    }
}
