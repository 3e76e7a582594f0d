//! Solver-facing view of a classical-quantum channel: fixed output letter
//! states with cached spectra plus the linear energy data of the constraints.
//!
//! Two constructions feed it: finite-dimensional states pushed through a
//! Kraus channel, and coherent-state mixtures embedded exactly into the
//! finite subspace they span (Gram-matrix route, no Fock truncation).

use num_complex::Complex64;

use crate::channels::{beam_splitter_output, coherent_overlap, CoherentEnsemble, KrausChannel};
use crate::entropy::spectrum_entropy;
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian_raw, ComplexMatrix, DensityMatrix};

use super::solver::{solve_polytope, SolveOutcome};
use super::{CapacityResult, PowerConstraint, SolveOptions};

/// Floor applied to eigenvalues before `ln` in gradient computations, so
/// relative-entropy gradients stay finite at the simplex boundary.
pub(crate) const LOG_FLOOR: f64 = 1e-18;

/// Objective over the probability simplex with linear energy constraints.
/// `value` must be the smooth extension used by finite differences as well.
pub(crate) trait SimplexObjective: Sync {
    fn letters(&self) -> usize;
    fn value(&self, probs: &[f64]) -> f64;
    fn value_grad(&self, probs: &[f64]) -> (f64, Vec<f64>);
    /// Per-constraint, per-letter output energies.
    fn energies(&self) -> &[Vec<f64>];
    fn thresholds(&self) -> &[f64];
    fn input_states(&self) -> &[DensityMatrix];
}

/// One output letter: the channel image of a signal state with its spectrum
/// baked in.
#[derive(Debug, Clone)]
struct LetterOutput {
    mat: ComplexMatrix,
    entropy: f64,
}

impl LetterOutput {
    fn new(mat: ComplexMatrix) -> Self {
        let eig = eig_hermitian_raw(&mat);
        let entropy = spectrum_entropy(&eig.eigenvalues);
        Self { mat, entropy }
    }
}

/// A classical-quantum instance: fixed letters, free probabilities.
#[derive(Debug, Clone)]
pub struct CqInstance {
    outputs: Vec<LetterOutput>,
    energies: Vec<Vec<f64>>,
    thresholds: Vec<f64>,
    input_states: Vec<DensityMatrix>,
    dim: usize,
}

impl CqInstance {
    /// Push `states` through `channel` and attach the energy constraints
    /// (each Hamiltonian acts on the channel output).
    pub fn from_states(
        states: &[DensityMatrix],
        channel: &KrausChannel,
        constraints: &[PowerConstraint],
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::OutOfRange("need at least one signal state".into()));
        }
        for s in states {
            if s.dim() != channel.dim_in() {
                return Err(Error::DimMismatch { expected: channel.dim_in(), got: s.dim() });
            }
        }
        for c in constraints {
            if c.hamiltonian.dim() != channel.dim_out() {
                return Err(Error::DimMismatch { expected: channel.dim_out(), got: c.hamiltonian.dim() });
            }
        }
        let outputs: Vec<LetterOutput> = states
            .iter()
            .map(|s| LetterOutput::new(channel.apply_raw(s.matrix())))
            .collect();
        let energies = constraints
            .iter()
            .map(|c| {
                outputs
                    .iter()
                    .map(|o| c.hamiltonian.matrix().trace_product(&o.mat).re)
                    .collect()
            })
            .collect();
        Ok(Self {
            outputs,
            energies,
            thresholds: constraints.iter().map(|c| c.threshold).collect(),
            input_states: states.to_vec(),
            dim: channel.dim_out(),
        })
    }

    /// Letters given as weighted coherent components, embedded into the
    /// finite subspace spanned by all components. `letter_energies` are the
    /// per-letter output energies of the single constraint `threshold`.
    pub fn from_coherent_letters(
        letter_components: &[Vec<(f64, Complex64)>],
        letter_energies: &[f64],
        threshold: f64,
    ) -> Result<Self> {
        if letter_components.is_empty() {
            return Err(Error::OutOfRange("need at least one letter".into()));
        }
        if letter_components.len() != letter_energies.len() {
            return Err(Error::DimMismatch {
                expected: letter_components.len(),
                got: letter_energies.len(),
            });
        }
        let amps: Vec<Complex64> = letter_components
            .iter()
            .flat_map(|comps| comps.iter().map(|&(_, a)| a))
            .collect();
        let k = amps.len();
        if k == 0 {
            return Err(Error::OutOfRange("letters carry no components".into()));
        }

        // Orthonormal basis of span{|α_c⟩} from the unweighted Gram matrix:
        // with G = U Λ U†, the coordinates of |α_j⟩ are √λ_m · conj(U_jm).
        let gram = ComplexMatrix::from_fn(k, k, |i, j| coherent_overlap(amps[i], amps[j]));
        let eig = eig_hermitian_raw(&gram);
        let lambda_max = eig.eigenvalues.last().copied().unwrap_or(0.0);
        let kept: Vec<usize> = (0..k)
            .filter(|&m| eig.eigenvalues[m] > 1e-12 * lambda_max.max(1.0))
            .collect();
        let rank = kept.len();
        let coords: Vec<Vec<Complex64>> = (0..k)
            .map(|j| {
                kept.iter()
                    .map(|&m| eig.eigenvalues[m].sqrt() * eig.eigenvectors[(j, m)].conj())
                    .collect()
            })
            .collect();

        let mut outputs = Vec::with_capacity(letter_components.len());
        let mut input_states = Vec::with_capacity(letter_components.len());
        let mut offset = 0usize;
        for comps in letter_components {
            let mut mat = ComplexMatrix::zeros(rank, rank);
            let mut total = 0.0;
            for (c, &(w, _)) in comps.iter().enumerate() {
                if !(0.0..=1.0 + 1e-12).contains(&w) {
                    return Err(Error::OutOfRange(format!("component weight {w} outside [0, 1]")));
                }
                mat.add_scaled(&ComplexMatrix::outer(&coords[offset + c]), w);
                total += w;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::NotSimplex { reason: format!("letter weights sum to {total}") });
            }
            offset += comps.len();
            input_states.push(DensityMatrix::new(mat.clone())?);
            outputs.push(LetterOutput::new(mat));
        }

        Ok(Self {
            outputs,
            energies: vec![letter_energies.to_vec()],
            thresholds: vec![threshold],
            input_states,
            dim: rank,
        })
    }

    /// The 50-50 beam-splitter channel on a coherent ensemble, with the mean
    /// photon number `H = a†a` as the constraint observable.
    pub fn from_beam_splitter(ens: &CoherentEnsemble, threshold: f64) -> Result<Self> {
        let out = beam_splitter_output(ens);
        Self::from_coherent_letters(&out.letter_states, &out.letter_energies, threshold)
    }

    pub fn letters(&self) -> usize {
        self.outputs.len()
    }

    /// Output-space dimension the solver works in.
    pub fn output_dim(&self) -> usize {
        self.dim
    }

    /// Holevo quantity `χ(p) = S(Σ p σ) - Σ p S(σ)` of the output ensemble.
    pub fn chi(&self, probs: &[f64]) -> f64 {
        SimplexObjective::value(self, probs)
    }

    /// Analytic gradient of `χ` in ambient coordinates: component `x` is
    /// `D(σ_x ‖ σ̄) - 1`, the relative entropy to the average output up to a
    /// common additive constant (which drops on simplex directions).
    pub fn chi_gradient(&self, probs: &[f64]) -> Vec<f64> {
        SimplexObjective::value_grad(self, probs).1
    }

    /// Per-letter output energies of constraint `r`.
    pub fn letter_energies(&self, r: usize) -> &[f64] {
        &self.energies[r]
    }

    pub fn thresholds_slice(&self) -> &[f64] {
        &self.thresholds
    }

    /// Maximize `χ` over the feasible polytope.
    pub fn solve(&self, opts: &SolveOptions) -> Result<CapacityResult> {
        self.solve_warm(opts, None)
    }

    pub fn solve_warm(&self, opts: &SolveOptions, warm: Option<&[f64]>) -> Result<CapacityResult> {
        let outcome: SolveOutcome = solve_polytope(self, opts, warm)?;
        Ok(super::assemble_result(self, outcome))
    }

    fn average_output(&self, probs: &[f64]) -> ComplexMatrix {
        let mut avg = ComplexMatrix::zeros(self.dim, self.dim);
        for (x, o) in self.outputs.iter().enumerate() {
            avg.add_scaled(&o.mat, probs[x]);
        }
        avg
    }
}

impl SimplexObjective for CqInstance {
    fn letters(&self) -> usize {
        self.outputs.len()
    }

    fn value(&self, probs: &[f64]) -> f64 {
        let avg = self.average_output(probs);
        let eig = eig_hermitian_raw(&avg);
        let mixed: f64 = spectrum_entropy(&eig.eigenvalues);
        let conditional: f64 = self
            .outputs
            .iter()
            .zip(probs)
            .map(|(o, &p)| p * o.entropy)
            .sum();
        mixed - conditional
    }

    fn value_grad(&self, probs: &[f64]) -> (f64, Vec<f64>) {
        let avg = self.average_output(probs);
        let eig = eig_hermitian_raw(&avg);
        let mixed = spectrum_entropy(&eig.eigenvalues);
        let value = mixed
            - self
                .outputs
                .iter()
                .zip(probs)
                .map(|(o, &p)| p * o.entropy)
                .sum::<f64>();

        // ln σ̄ = V diag(ln λ) V† with floored eigenvalues; then
        // ∂χ/∂p_x = -Tr[σ_x ln σ̄] - 1 - S(σ_x).
        let n = self.dim;
        let log_diag: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(LOG_FLOOR).ln()).collect();
        let v = &eig.eigenvectors;
        let mut log_avg = ComplexMatrix::zeros(n, n);
        for m in 0..n {
            let lm = log_diag[m];
            for i in 0..n {
                let vim = v[(i, m)] * lm;
                for j in 0..n {
                    log_avg[(i, j)] += vim * v[(j, m)].conj();
                }
            }
        }
        let grad = self
            .outputs
            .iter()
            .map(|o| -o.mat.trace_product(&log_avg).re - 1.0 - o.entropy)
            .collect();
        (value, grad)
    }

    fn energies(&self) -> &[Vec<f64>] {
        &self.energies
    }

    fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    fn input_states(&self) -> &[DensityMatrix] {
        &self.input_states
    }
}

/// Private-communication instance: the unassisted objective through the
/// channel minus the Holevo quantity leaking to the environment. Energy
/// constraints act on the channel output, not the environment.
#[derive(Debug, Clone)]
pub struct PrivateCqInstance {
    direct: CqInstance,
    env: CqInstance,
}

impl PrivateCqInstance {
    pub fn from_states(
        states: &[DensityMatrix],
        channel: &KrausChannel,
        constraints: &[PowerConstraint],
    ) -> Result<Self> {
        let complementary = channel.complementary();
        Self::from_states_with_complement(states, channel, &complementary, constraints)
    }

    /// Same, but with a precomputed complementary channel (saves rebuilding
    /// it once per restart in multi-start searches).
    pub fn from_states_with_complement(
        states: &[DensityMatrix],
        channel: &KrausChannel,
        complementary: &KrausChannel,
        constraints: &[PowerConstraint],
    ) -> Result<Self> {
        let direct = CqInstance::from_states(states, channel, constraints)?;
        let env = CqInstance::from_states(states, complementary, &[])?;
        Ok(Self { direct, env })
    }

    pub fn letters(&self) -> usize {
        self.direct.letters()
    }

    /// `χ_AB(p) - χ_AE(p)`.
    pub fn objective(&self, probs: &[f64]) -> f64 {
        SimplexObjective::value(self, probs)
    }

    pub fn solve(&self, opts: &SolveOptions) -> Result<CapacityResult> {
        self.solve_warm(opts, None)
    }

    pub fn solve_warm(&self, opts: &SolveOptions, warm: Option<&[f64]>) -> Result<CapacityResult> {
        let outcome: SolveOutcome = solve_polytope(self, opts, warm)?;
        Ok(super::assemble_result(self, outcome))
    }
}

impl SimplexObjective for PrivateCqInstance {
    fn letters(&self) -> usize {
        self.direct.letters()
    }

    fn value(&self, probs: &[f64]) -> f64 {
        SimplexObjective::value(&self.direct, probs) - SimplexObjective::value(&self.env, probs)
    }

    fn value_grad(&self, probs: &[f64]) -> (f64, Vec<f64>) {
        let (vb, gb) = self.direct.value_grad(probs);
        let (ve, ge) = self.env.value_grad(probs);
        let grad = gb.iter().zip(ge.iter()).map(|(b, e)| b - e).collect();
        (vb - ve, grad)
    }

    fn energies(&self) -> &[Vec<f64>] {
        SimplexObjective::energies(&self.direct)
    }

    fn thresholds(&self) -> &[f64] {
        SimplexObjective::thresholds(&self.direct)
    }

    fn input_states(&self) -> &[DensityMatrix] {
        SimplexObjective::input_states(&self.direct)
    }
}
