//! Holevo quantities, energy constraints, and the constrained solvers for
//! the capacity-power function `C₁(B)`, its two-copy additivity oracle, and
//! the private analogue `P₁(B)`.

mod instance;
mod search;
mod solver;

pub use instance::{CqInstance, PrivateCqInstance};
pub use search::SearchOptions;

use crate::channels::{CQEnsemble, KrausChannel};
use crate::entropy::{spectrum_entropy, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian_raw, ComplexMatrix, DensityMatrix, HermitianOperator, ProbabilityVector,
};
use crate::par::map_maybe_parallel;

use instance::SimplexObjective;
use solver::FEASIBILITY_TOL;

/// A minimum-received-energy constraint `Tr[H N(ρ)] ≥ B`.
#[derive(Debug, Clone)]
pub struct PowerConstraint {
    pub hamiltonian: HermitianOperator,
    pub threshold: f64,
}

impl PowerConstraint {
    pub fn new(hamiltonian: HermitianOperator, threshold: f64) -> Self {
        Self { hamiltonian, threshold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// Inner-solver knobs. Defaults: stop when the objective moves by less than
/// `1e-10` (relative) with the projected-gradient residual under `1e-7`, or
/// at 10,000 iterations.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub kkt_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: 10_000, kkt_tol: 1e-7 }
    }
}

/// Outcome of one constrained maximization.
#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Capacity value in nats (0 for infeasible points).
    pub value: f64,
    pub status: SolveStatus,
    /// Maximizing probabilities; `None` when infeasible.
    pub argmax_probs: Option<ProbabilityVector>,
    /// Signal states of the maximizer (empty when infeasible). For
    /// Gram-embedded coherent ensembles these live in the span basis.
    pub argmax_states: Vec<DensityMatrix>,
    /// Achieved output energy per constraint.
    pub achieved_energy: Vec<f64>,
    /// Indices of constraints tight at the optimum (within 1e-6).
    pub active_constraints: Vec<usize>,
    /// Projected-gradient fixed-point residual (NaN when infeasible).
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl CapacityResult {
    pub fn infeasible() -> Self {
        Self {
            value: 0.0,
            status: SolveStatus::Infeasible,
            argmax_probs: None,
            argmax_states: Vec::new(),
            achieved_energy: Vec::new(),
            active_constraints: Vec::new(),
            kkt_residual: f64::NAN,
            iterations: 0,
        }
    }
}

pub(crate) fn assemble_result(obj: &dyn SimplexObjective, outcome: solver::SolveOutcome) -> CapacityResult {
    // strip projection roundoff (coordinates can carry ~1e-11 of noise)
    let probs: Vec<f64> = {
        let clamped: Vec<f64> = outcome.probs.iter().map(|&p| p.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        clamped.iter().map(|p| p / total).collect()
    };
    let achieved: Vec<f64> = obj
        .energies()
        .iter()
        .map(|e| e.iter().zip(&probs).map(|(ei, pi)| ei * pi).sum())
        .collect();
    let active = achieved
        .iter()
        .zip(obj.thresholds())
        .enumerate()
        .filter(|(_, (a, b))| (*a - **b).abs() <= 1e-6)
        .map(|(r, _)| r)
        .collect();
    CapacityResult {
        value: outcome.value,
        status: outcome.status,
        argmax_probs: ProbabilityVector::new(probs).ok(),
        argmax_states: obj.input_states().to_vec(),
        achieved_energy: achieved,
        active_constraints: active,
        kkt_residual: outcome.kkt_residual,
        iterations: outcome.iterations,
    }
}

// ---------------------------------------------------------------------------
// Information quantities
// ---------------------------------------------------------------------------

/// Holevo quantity of the output ensemble,
/// `χ = S(N(ρ̄)) - Σ p_x S(N(ρ_x))` in nats.
pub fn holevo(ens: &CQEnsemble, channel: &KrausChannel) -> Result<f64> {
    if ens.dim() != channel.dim_in() {
        return Err(Error::DimMismatch { expected: channel.dim_in(), got: ens.dim() });
    }
    let outputs: Vec<DensityMatrix> = ens
        .states()
        .iter()
        .map(|s| channel.apply(s))
        .collect::<Result<_>>()?;
    let mut avg = ComplexMatrix::zeros(channel.dim_out(), channel.dim_out());
    let mut conditional = 0.0;
    for (x, out) in outputs.iter().enumerate() {
        let p = ens.probs().weight(x);
        avg.add_scaled(out.matrix(), p);
        conditional += p * von_neumann_entropy(out);
    }
    let mixed = spectrum_entropy(&eig_hermitian_raw(&avg).eigenvalues);
    Ok(mixed - conditional)
}

/// Average output energy `Tr[H N(ρ̄)]` of an ensemble.
pub fn output_energy(ens: &CQEnsemble, channel: &KrausChannel, h: &HermitianOperator) -> Result<f64> {
    if ens.dim() != channel.dim_in() {
        return Err(Error::DimMismatch { expected: channel.dim_in(), got: ens.dim() });
    }
    if h.dim() != channel.dim_out() {
        return Err(Error::DimMismatch { expected: channel.dim_out(), got: h.dim() });
    }
    let avg = ens.average_state();
    Ok(h.matrix().trace_product(&channel.apply_raw(avg.matrix())).re)
}

/// Largest per-letter output energy; any threshold above it (plus slack) is
/// infeasible for the CQ problem.
pub fn max_feasible_energy(
    states: &[DensityMatrix],
    channel: &KrausChannel,
    h: &HermitianOperator,
) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::OutOfRange("need at least one state".into()));
    }
    if h.dim() != channel.dim_out() {
        return Err(Error::DimMismatch { expected: channel.dim_out(), got: h.dim() });
    }
    let mut best = f64::NEG_INFINITY;
    for s in states {
        if s.dim() != channel.dim_in() {
            return Err(Error::DimMismatch { expected: channel.dim_in(), got: s.dim() });
        }
        best = best.max(h.matrix().trace_product(&channel.apply_raw(s.matrix())).re);
    }
    Ok(best)
}

/// Single-use private information `χ_AB - χ_AE`, the Holevo quantity through
/// the channel minus the one leaking to the environment. May be negative for
/// non-degradable configurations; not clamped.
pub fn private_chi(ens: &CQEnsemble, channel: &KrausChannel) -> Result<f64> {
    let direct = holevo(ens, channel)?;
    let leaked = holevo(ens, &channel.complementary())?;
    Ok(direct - leaked)
}

/// Transition matrix `p(a|b) = Tr[E_a N(ρ_b)]` induced by measuring the
/// channel output of each letter with the POVM.
pub fn induced_transition_matrix(
    states: &[DensityMatrix],
    povm: &[ComplexMatrix],
    channel: &KrausChannel,
) -> Result<Vec<Vec<f64>>> {
    validate_povm(povm, channel.dim_out())?;
    let mut rows = Vec::with_capacity(states.len());
    for s in states {
        if s.dim() != channel.dim_in() {
            return Err(Error::DimMismatch { expected: channel.dim_in(), got: s.dim() });
        }
        let out = channel.apply_raw(s.matrix());
        rows.push(povm.iter().map(|e| e.trace_product(&out).re.max(0.0)).collect());
    }
    Ok(rows)
}

fn validate_povm(povm: &[ComplexMatrix], dim: usize) -> Result<()> {
    if povm.is_empty() {
        return Err(Error::NotPovm("empty element list".into()));
    }
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for e in povm {
        if !e.is_square() || e.dim() != dim {
            return Err(Error::NotPovm(format!("element is {}x{}, expected {dim}x{dim}", e.rows(), e.cols())));
        }
        let defect = e.hermiticity_defect();
        if defect > 1e-9 {
            return Err(Error::NotPovm(format!("element not Hermitian (defect {defect:.3e})")));
        }
        let min = eig_hermitian_raw(e).eigenvalues.first().copied().unwrap_or(0.0);
        if min < -1e-9 {
            return Err(Error::NotPovm(format!("element has negative eigenvalue {min:.3e}")));
        }
        sum.add_scaled(e, 1.0);
    }
    let defect = sum.max_abs_diff(&ComplexMatrix::identity(dim));
    if defect > 1e-9 {
        return Err(Error::NotPovm(format!("elements sum to I only within {defect:.3e}")));
    }
    Ok(())
}

/// Classical mutual information of the joint distribution
/// `p(x, y) = p_x Tr[E_y N(ρ_x)]` in nats. Bounded by the Holevo quantity.
pub fn accessible_information(
    ens: &CQEnsemble,
    povm: &[ComplexMatrix],
    channel: &KrausChannel,
) -> Result<f64> {
    let transition = induced_transition_matrix(ens.states(), povm, channel)?;
    let probs = ens.probs();
    let outcomes = povm.len();
    let mut marginal = vec![0.0; outcomes];
    for (x, row) in transition.iter().enumerate() {
        for (y, &q) in row.iter().enumerate() {
            marginal[y] += probs.weight(x) * q;
        }
    }
    let mut info = 0.0;
    for (x, row) in transition.iter().enumerate() {
        let px = probs.weight(x);
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

// ---------------------------------------------------------------------------
// Solver entry points
// ---------------------------------------------------------------------------

/// Capacity-power at fixed signal states (CQ channel): maximize the Holevo
/// quantity over probabilities subject to every energy constraint.
pub fn c1_cq(
    states: &[DensityMatrix],
    channel: &KrausChannel,
    constraints: &[PowerConstraint],
    opts: &SolveOptions,
) -> Result<CapacityResult> {
    CqInstance::from_states(states, channel, constraints)?.solve(opts)
}

/// Private capacity-power at fixed signal states.
pub fn p1_cq(
    states: &[DensityMatrix],
    channel: &KrausChannel,
    constraints: &[PowerConstraint],
    opts: &SolveOptions,
) -> Result<CapacityResult> {
    PrivateCqInstance::from_states(states, channel, constraints)?.solve(opts)
}

/// Capacity-power of a qubit channel maximized over `letters` pure signal
/// states as well as probabilities: best-of-restarts with golden-section
/// coordinate refinement, deterministic per seed.
pub fn c1_general(
    channel: &KrausChannel,
    letters: usize,
    constraints: &[PowerConstraint],
    opts: &SearchOptions,
) -> Result<CapacityResult> {
    search::general_search(channel, letters, constraints, opts, search::Objective::Unassisted)
}

/// Private analogue of [`c1_general`].
pub fn p1_general(
    channel: &KrausChannel,
    letters: usize,
    constraints: &[PowerConstraint],
    opts: &SearchOptions,
) -> Result<CapacityResult> {
    search::general_search(channel, letters, constraints, opts, search::Objective::Private)
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

/// A capacity-power curve sampled on an ascending grid of thresholds.
#[derive(Debug, Clone)]
pub struct PowerCurve {
    pub grid: Vec<f64>,
    pub points: Vec<CapacityResult>,
}

impl PowerCurve {
    /// `(B, value)` pairs of the points that produced a value.
    pub fn solved_points(&self) -> Vec<(f64, f64)> {
        self.grid
            .iter()
            .zip(&self.points)
            .filter(|(_, p)| p.status != SolveStatus::Infeasible)
            .map(|(&b, p)| (b, p.value))
            .collect()
    }

    /// Largest increase along the curve; ≤ slack for a non-increasing curve.
    pub fn max_increase(&self) -> f64 {
        let pts = self.solved_points();
        pts.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn concavity_report(&self, tol: f64) -> Result<ConcavityReport> {
        check_concavity(&self.solved_points(), tol)
    }
}

/// Sweep a solver over an ascending threshold grid. Sequential sweeps
/// warm-start each point from the previous maximizer; with `parallel` true
/// the points run independently (no warm starts) and in parallel when the
/// `parallel` feature is enabled. Infeasible points become per-point status,
/// other errors abort the sweep.
pub fn sweep_curve<F>(grid: &[f64], parallel: bool, solve: F) -> Result<PowerCurve>
where
    F: Fn(f64, Option<&[f64]>) -> Result<CapacityResult> + Sync + Send,
{
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("threshold grid must be strictly ascending".into()));
    }
    let points: Vec<CapacityResult> = if parallel {
        let results = map_maybe_parallel(grid.to_vec(), true, |b| solve(b, None));
        let mut points = Vec::with_capacity(results.len());
        for r in results {
            points.push(flatten_infeasible(r)?);
        }
        points
    } else {
        let mut points: Vec<CapacityResult> = Vec::with_capacity(grid.len());
        let mut warm: Option<Vec<f64>> = None;
        for &b in grid {
            let point = flatten_infeasible(solve(b, warm.as_deref()))?;
            if let Some(p) = &point.argmax_probs {
                warm = Some(p.weights());
            }
            points.push(point);
        }
        points
    };
    Ok(PowerCurve { grid: grid.to_vec(), points })
}

fn flatten_infeasible(r: Result<CapacityResult>) -> Result<CapacityResult> {
    match r {
        Ok(p) => Ok(p),
        Err(Error::Infeasible { .. }) => Ok(CapacityResult::infeasible()),
        Err(e) => Err(e),
    }
}

/// Concavity audit of a sampled curve.
#[derive(Debug, Clone)]
pub struct ConcavityReport {
    pub is_concave: bool,
    pub max_violation: f64,
    pub violating_triples: Vec<ViolatingTriple>,
}

/// An adjacent triple where the middle point dips below the chord.
#[derive(Debug, Clone)]
pub struct ViolatingTriple {
    pub indices: (usize, usize, usize),
    pub thresholds: (f64, f64, f64),
    pub violation: f64,
}

/// Check midpoint concavity on every adjacent triple of `(B, value)` points.
/// A violation is how far the middle value falls below the chord through its
/// neighbors; the curve passes when the worst violation is ≤ `tol`.
pub fn check_concavity(points: &[(f64, f64)], tol: f64) -> Result<ConcavityReport> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: points.len() });
    }
    let mut max_violation = 0.0f64;
    let mut violating = Vec::new();
    for i in 1..points.len() - 1 {
        let (b0, v0) = points[i - 1];
        let (b1, v1) = points[i];
        let (b2, v2) = points[i + 1];
        let chord = v0 + (v2 - v0) * (b1 - b0) / (b2 - b0);
        let violation = chord - v1;
        max_violation = max_violation.max(violation);
        if violation > tol {
            violating.push(ViolatingTriple {
                indices: (i - 1, i, i + 1),
                thresholds: (b0, b1, b2),
                violation,
            });
        }
    }
    Ok(ConcavityReport { is_concave: violating.is_empty(), max_violation, violating_triples: violating })
}

// ---------------------------------------------------------------------------
// Two-copy additivity oracle
// ---------------------------------------------------------------------------

/// Brute-force two-copy capacity over product ensembles: maximize
/// `χ(ξ₁) + χ(ξ₂)` on probability grids of spacing `grid_density` under the
/// joint constraint `Tr[H N(ρ̄₁)] + Tr[H N(ρ̄₂)] ≥ 2B`. Exhaustive by design —
/// it is the independent check of `C₂ = 2 C₁`, so it must not share the
/// gradient solver.
pub fn c2_product_bruteforce(
    states: &[DensityMatrix],
    channel: &KrausChannel,
    h: &HermitianOperator,
    threshold: f64,
    grid_density: f64,
) -> Result<f64> {
    let m = states.len();
    if m == 0 {
        return Err(Error::OutOfRange("need at least one state".into()));
    }
    if m > 4 {
        return Err(Error::UnsupportedDim { got: m, context: "product brute force caps at 4 letters" });
    }
    if !(grid_density > 0.0 && grid_density <= 0.5) {
        return Err(Error::OutOfRange(format!("grid density {grid_density} outside (0, 0.5]")));
    }
    let constraint = PowerConstraint::new(h.clone(), threshold);
    let inst = CqInstance::from_states(states, channel, std::slice::from_ref(&constraint))?;
    let letter_energy = inst.letter_energies(0).to_vec();
    let max_e = letter_energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if threshold > max_e + FEASIBILITY_TOL {
        return Err(Error::Infeasible { threshold, max_feasible: max_e });
    }

    let steps = (1.0 / grid_density).round() as usize;
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (energy, chi)
    let mut composition = vec![0usize; m];
    enumerate_compositions(&mut composition, 0, steps, &mut |parts| {
        let p: Vec<f64> = parts.iter().map(|&k| k as f64 / steps as f64).collect();
        let energy: f64 = p.iter().zip(&letter_energy).map(|(a, b)| a * b).sum();
        cells.push((energy, inst.chi(&p)));
    });

    // Sort by energy; pair each cell with the best chi among partners that
    // push the sum over 2B.
    cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let energies: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let mut suffix_best = vec![f64::NEG_INFINITY; cells.len() + 1];
    for i in (0..cells.len()).rev() {
        suffix_best[i] = suffix_best[i + 1].max(cells[i].1);
    }
    let mut best = f64::NEG_INFINITY;
    for &(e1, chi1) in &cells {
        let need = 2.0 * threshold - e1 - FEASIBILITY_TOL;
        let j = energies.partition_point(|&e| e < need);
        if j < cells.len() {
            best = best.max(chi1 + suffix_best[j]);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Infeasible { threshold, max_feasible: max_e })
    }
}

fn enumerate_compositions(
    parts: &mut Vec<usize>,
    index: usize,
    remaining: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if index == parts.len() - 1 {
        parts[index] = remaining;
        visit(parts);
        return;
    }
    for k in 0..=remaining {
        parts[index] = k;
        enumerate_compositions(parts, index + 1, remaining - k, visit);
    }
}

#[cfg(test)]
mod tests;
