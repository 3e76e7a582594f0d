//! Channel models: generic Kraus maps and their complementary channels, the
//! named qubit channels, and coherent-state ensembles for the beam-splitter
//! channel handled exactly through Gram matrices.

use num_complex::Complex64;

use crate::entropy::spectrum_entropy;
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian_raw, pauli_x, pauli_y, pauli_z, ComplexMatrix, DensityMatrix, ProbabilityVector};

/// Deviation allowed in the trace-preservation check `Σ K†K = I`.
pub const TRACE_PRESERVING_TOL: f64 = 1e-9;

/// A completely positive trace-preserving map as a list of Kraus operators,
/// each of shape `dim_out x dim_in`. The number of operators is the
/// environment dimension of the isometric extension.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != dim_out || k.cols() != dim_in) {
            return Err(Error::InvalidChannel("Kraus operators differ in shape".into()));
        }
        if kraus.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidChannel("non-finite Kraus entries".into()));
        }
        let mut sum = ComplexMatrix::zeros(dim_in, dim_in);
        for k in &kraus {
            sum.add_scaled(&(&k.adjoint() * k), 1.0);
        }
        let defect = sum.max_abs_diff(&ComplexMatrix::identity(dim_in));
        if defect > TRACE_PRESERVING_TOL {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving: max |ΣK†K - I| = {defect:.3e}"
            )));
        }
        Ok(Self { dim_in, dim_out, kraus })
    }

    /// Identity channel on a `d`-dimensional system (single Kraus operator).
    pub fn identity(d: usize) -> Self {
        Self { dim_in: d, dim_out: d, kraus: vec![ComplexMatrix::identity(d)] }
    }

    /// Depolarizing channel `ρ ↦ (1-λ)ρ + (λ/d) 1`, valid for
    /// `0 ≤ λ ≤ 1 + 1/(d²-1)`. Kraus operators are the d² weighted
    /// shift/clock unitaries.
    pub fn depolarizing(lambda: f64, d: usize) -> Result<Self> {
        let upper = 1.0 + 1.0 / ((d * d - 1) as f64);
        if d < 2 || !(0.0..=upper).contains(&lambda) {
            return Err(Error::OutOfRange(format!(
                "depolarizing λ = {lambda} outside [0, {upper}] for d = {d}"
            )));
        }
        let dd = (d * d) as f64;
        let c_rest = lambda / dd;
        let c_id = 1.0 - lambda + c_rest;
        let shift = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == (j + 1) % d {
                Complex64::ONE
            } else {
                Complex64::ZERO
            }
        });
        let omega = std::f64::consts::TAU / d as f64;
        let clock = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, omega * i as f64)
            } else {
                Complex64::ZERO
            }
        });
        let mut kraus = Vec::with_capacity(d * d);
        let mut xa = ComplexMatrix::identity(d);
        for a in 0..d {
            let mut u = xa.clone();
            for b in 0..d {
                let coeff = if a == 0 && b == 0 { c_id } else { c_rest };
                if coeff > 0.0 {
                    kraus.push(u.scale(Complex64::new(coeff.sqrt(), 0.0)));
                }
                u = u.matmul(&clock);
            }
            xa = shift.matmul(&xa);
        }
        Self::new(kraus)
    }

    /// Qubit depolarizing channel written through its four-Kraus isometric
    /// extension `{√(1-λ) 1, √(λ/3) σ₁, √(λ/3) σ₂, √(λ/3) σ₃}`, acting as
    /// `(1-λ)ρ + (λ/3) Σᵢ σᵢρσᵢ`. This is the convention used for private
    /// capacity; it coincides with [`KrausChannel::depolarizing`] only under
    /// reparameterization of λ.
    pub fn depolarizing_isometry(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange(format!("isometry λ = {lambda} outside [0, 1]")));
        }
        let w0 = Complex64::new((1.0 - lambda).sqrt(), 0.0);
        let w = Complex64::new((lambda / 3.0).sqrt(), 0.0);
        Self::new(vec![
            ComplexMatrix::identity(2).scale(w0),
            pauli_x().scale(w),
            pauli_y().scale(w),
            pauli_z().scale(w),
        ])
    }

    /// Amplitude damping channel with decay probability `λ`:
    /// `K₀ = [[1, 0], [0, √(1-λ)]]`, `K₁ = [[0, √λ], [0, 0]]`.
    /// Degradable for `λ ≤ 0.5`.
    pub fn amplitude_damping(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange(format!("damping λ = {lambda} outside [0, 1]")));
        }
        let k0 = ComplexMatrix::from_rows(vec![
            vec![Complex64::ONE, Complex64::ZERO],
            vec![Complex64::ZERO, Complex64::new((1.0 - lambda).sqrt(), 0.0)],
        ])
        .unwrap();
        let k1 = ComplexMatrix::from_rows(vec![
            vec![Complex64::ZERO, Complex64::new(lambda.sqrt(), 0.0)],
            vec![Complex64::ZERO, Complex64::ZERO],
        ])
        .unwrap();
        Self::new(vec![k0, k1])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// Environment dimension of the isometric extension.
    pub fn env_dim(&self) -> usize {
        self.kraus.len()
    }

    pub fn kraus_operators(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `ρ ↦ Σᵢ Kᵢ ρ Kᵢ†` on a raw matrix, without revalidation.
    pub(crate) fn apply_raw(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out.add_scaled(&(&(k * rho) * &k.adjoint()), 1.0);
        }
        out
    }

    /// Apply the channel to a state.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimMismatch { expected: self.dim_in, got: rho.dim() });
        }
        DensityMatrix::new(self.apply_raw(rho.matrix()))
    }

    /// Complementary channel: the map from the input to the environment of
    /// the isometric extension `V = Σᵢ Kᵢ ⊗ |i⟩_E`, obtained by tracing out
    /// the channel output. Its Kraus operators are `(E_j)_{i,k} = (K_i)_{j,k}`
    /// with one `E_j` per output basis index, so `env_dim` of the result
    /// equals `dim_out` of `self`.
    pub fn complementary(&self) -> KrausChannel {
        let env = self.env_dim();
        let kraus = (0..self.dim_out)
            .map(|j| ComplexMatrix::from_fn(env, self.dim_in, |i, k| self.kraus[i][(j, k)]))
            .collect();
        KrausChannel::new(kraus).expect("complementary map of a CPTP map is CPTP")
    }

    /// Two-copy channel `N ⊗ N` with Kraus set `{Kᵢ ⊗ Kⱼ}`.
    pub fn tensor_square(&self) -> KrausChannel {
        let mut kraus = Vec::with_capacity(self.kraus.len() * self.kraus.len());
        for a in &self.kraus {
            for b in &self.kraus {
                kraus.push(a.kron(b));
            }
        }
        KrausChannel { dim_in: self.dim_in * self.dim_in, dim_out: self.dim_out * self.dim_out, kraus }
    }
}

/// Classical-quantum ensemble: fixed signal states with a probability vector.
#[derive(Debug, Clone)]
pub struct CQEnsemble {
    states: Vec<DensityMatrix>,
    probs: ProbabilityVector,
}

impl CQEnsemble {
    pub fn new(states: Vec<DensityMatrix>, probs: ProbabilityVector) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::OutOfRange("ensemble needs at least one state".into()));
        }
        if states.len() != probs.len() {
            return Err(Error::DimMismatch { expected: states.len(), got: probs.len() });
        }
        let dim = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimMismatch { expected: dim, got: s.dim() });
        }
        Ok(Self { states, probs })
    }

    /// Uniform ensemble over the given states.
    pub fn uniform(states: Vec<DensityMatrix>) -> Result<Self> {
        let n = states.len().max(1);
        Self::new(states, ProbabilityVector::uniform(n))
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn probs(&self) -> &ProbabilityVector {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Averaged input state `ρ = Σ p_x ρ_x`.
    pub fn average_state(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut avg = ComplexMatrix::zeros(dim, dim);
        for (x, state) in self.states.iter().enumerate() {
            avg.add_scaled(state.matrix(), self.probs.weight(x));
        }
        DensityMatrix::new(avg).expect("convex mixture of states is a state")
    }
}

// ---------------------------------------------------------------------------
// Coherent-state machinery for the 50-50 beam-splitter channel
// ---------------------------------------------------------------------------

/// Coherent-state letter ensemble sent into the beam splitter, which acts
/// with probability `splitter_prob` (environment port fixed to vacuum,
/// θ = π/4).
#[derive(Debug, Clone)]
pub struct CoherentEnsemble {
    amplitudes: Vec<Complex64>,
    probs: ProbabilityVector,
    splitter_prob: f64,
}

impl CoherentEnsemble {
    pub fn new(amplitudes: Vec<Complex64>, probs: ProbabilityVector, splitter_prob: f64) -> Result<Self> {
        if amplitudes.len() != probs.len() {
            return Err(Error::DimMismatch { expected: amplitudes.len(), got: probs.len() });
        }
        if !(0.0..=1.0).contains(&splitter_prob) {
            return Err(Error::OutOfRange(format!("splitter probability {splitter_prob} outside [0, 1]")));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::OutOfRange("non-finite amplitude".into()));
        }
        Ok(Self { amplitudes, probs, splitter_prob })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn probs(&self) -> &ProbabilityVector {
        &self.probs
    }

    pub fn splitter_prob(&self) -> f64 {
        self.splitter_prob
    }
}

/// Coherent-state inner product `⟨α|β⟩ = exp(-|α|²/2 - |β|²/2 + ᾱβ)`.
pub fn coherent_overlap(alpha: Complex64, beta: Complex64) -> Complex64 {
    let exponent = Complex64::new(-0.5 * (alpha.norm_sqr() + beta.norm_sqr()), 0.0) + alpha.conj() * beta;
    exponent.exp()
}

/// Gram matrix `M_ij = √(w_i w_j) ⟨α_i|α_j⟩` of a weighted coherent mixture.
/// PSD with unit trace; its nonzero spectrum equals the mixture's.
pub fn gram_matrix(amplitudes: &[Complex64], weights: &ProbabilityVector) -> Result<ComplexMatrix> {
    if amplitudes.len() != weights.len() {
        return Err(Error::DimMismatch { expected: amplitudes.len(), got: weights.len() });
    }
    let n = amplitudes.len();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        let w = (weights.weight(i) * weights.weight(j)).sqrt();
        coherent_overlap(amplitudes[i], amplitudes[j]) * w
    }))
}

/// Entropy of `Σ w_i |α_i⟩⟨α_i|` in nats, computed from the Gram-matrix
/// spectrum — exact for any amplitudes, no Fock truncation.
pub fn mixture_entropy_gram(amplitudes: &[Complex64], weights: &ProbabilityVector) -> Result<f64> {
    let gram = gram_matrix(amplitudes, weights)?;
    let eig = eig_hermitian_raw(&gram);
    Ok(spectrum_entropy(&eig.eigenvalues))
}

/// Output of the beam-splitter channel on a coherent letter ensemble: each
/// letter becomes a weighted list of coherent components, and each letter's
/// mean photon number (`H = a†a`) has the closed form
/// `p_b |α|²/2 + (1-p_b) |α|²`.
#[derive(Debug, Clone)]
pub struct BeamSplitterOutput {
    /// Per letter: `[(p_b, α/√2), (1-p_b, α)]` with zero-weight components dropped.
    pub letter_states: Vec<Vec<(f64, Complex64)>>,
    /// Per letter mean photon number at the output.
    pub letter_energies: Vec<f64>,
}

pub fn beam_splitter_output(ens: &CoherentEnsemble) -> BeamSplitterOutput {
    let pb = ens.splitter_prob();
    let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut letter_states = Vec::with_capacity(ens.amplitudes().len());
    let mut letter_energies = Vec::with_capacity(ens.amplitudes().len());
    for &alpha in ens.amplitudes() {
        let mut comps = Vec::new();
        if pb > 0.0 {
            comps.push((pb, alpha * half));
        }
        if pb < 1.0 {
            comps.push((1.0 - pb, alpha));
        }
        letter_states.push(comps);
        letter_energies.push(pb * alpha.norm_sqr() / 2.0 + (1.0 - pb) * alpha.norm_sqr());
    }
    BeamSplitterOutput { letter_states, letter_energies }
}

/// Normalized Fock-basis amplitudes of `|α⟩` truncated at `cutoff` levels.
/// Fails unless the truncated tail mass is below 1e-12; serves as the
/// validation oracle for the Gram method.
pub fn coherent_fock_vector(alpha: Complex64, cutoff: usize) -> Result<Vec<Complex64>> {
    if cutoff == 0 {
        return Err(Error::CutoffTooSmall { cutoff, tail: 1.0 });
    }
    let mut v = Vec::with_capacity(cutoff);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    v.push(c);
    for n in 1..cutoff {
        c = c * alpha / Complex64::new((n as f64).sqrt(), 0.0);
        v.push(c);
    }
    let mass: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let tail = 1.0 - mass;
    if tail >= 1e-12 {
        return Err(Error::CutoffTooSmall { cutoff, tail });
    }
    let inv = Complex64::new(1.0 / mass.sqrt(), 0.0);
    for z in &mut v {
        *z *= inv;
    }
    Ok(v)
}
