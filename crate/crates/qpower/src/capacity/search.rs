//! Multi-start search over qubit signal states for the general (non-CQ)
//! capacity-power problem.
//!
//! The objective is concave in the probabilities but not in the states, so
//! each restart samples a fresh set of pure letters uniformly on the Bloch
//! sphere, solves the inner CQ problem, and polishes the Bloch angles with
//! golden-section line searches. Restart `j` draws from ChaCha stream `j`
//! of the caller's seed: results depend only on `(seed, j)`, which makes
//! best-of-k monotone in `k` and the whole search reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{pauli_x, pauli_y, pauli_z, ComplexMatrix, DensityMatrix};
use crate::par::map_maybe_parallel;

use super::instance::{CqInstance, PrivateCqInstance};
use super::solver::{solve_polytope, FEASIBILITY_TOL};
use super::{assemble_result, CapacityResult, PowerConstraint, SolveOptions};

const GOLDEN_RATIO_CONJ: f64 = 0.618_033_988_749_894_9;

/// Knobs for the multi-start state search. `SolveOptions` here governs the
/// final accurate solve; refinement line searches run a cheaper inner solve.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Sweeps of coordinate refinement over all (θ, φ) coordinates.
    pub refine_passes: usize,
    /// Golden-section evaluations per coordinate.
    pub golden_iters: usize,
    /// Fan restarts out across threads (no effect without the `parallel` feature).
    pub parallel: bool,
    pub solve: SolveOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            seed: 0,
            refine_passes: 1,
            golden_iters: 18,
            parallel: true,
            solve: SolveOptions::default(),
        }
    }
}

impl SearchOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn refine_solve(&self) -> SolveOptions {
        SolveOptions { rel_tol: 1e-8, max_iter: 2_500, ..self.solve }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Objective {
    Unassisted,
    Private,
}

/// Bloch angles of one letter.
#[derive(Debug, Clone, Copy)]
struct Angles {
    theta: f64,
    phi: f64,
}

fn states_from_angles(angles: &[Angles]) -> Vec<DensityMatrix> {
    angles.iter().map(|a| DensityMatrix::bloch(a.theta, a.phi)).collect()
}

/// `Tr[H N(ρ)]` is affine on the Bloch ball: `c₀ + w·n̂`. Returns `(c₀, w)`.
fn energy_affine_map(channel: &KrausChannel, constraint: &PowerConstraint) -> (f64, [f64; 3]) {
    let h = constraint.hamiltonian.matrix();
    let half = |m: &ComplexMatrix| h.trace_product(&channel.apply_raw(m)).re / 2.0;
    let c0 = half(&ComplexMatrix::identity(2));
    let w = [half(&pauli_x()), half(&pauli_y()), half(&pauli_z())];
    (c0, w)
}

/// Largest output energy any pure qubit state can deliver.
fn max_pure_energy(c0: f64, w: &[f64; 3]) -> f64 {
    c0 + (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
}

fn angles_of_direction(w: &[f64; 3]) -> Angles {
    let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if norm < 1e-14 {
        return Angles { theta: 0.0, phi: 0.0 };
    }
    let theta = (w[2] / norm).clamp(-1.0, 1.0).acos();
    let phi = w[1].atan2(w[0]).rem_euclid(std::f64::consts::TAU);
    Angles { theta, phi }
}

/// Deterministic letters for restart 0: the energy-maximizing state, its
/// antipode, then equatorial fill. Guarantees a feasible restart whenever the
/// problem is feasible at all.
fn anchor_angles(letters: usize, energy_dir: Angles) -> Vec<Angles> {
    let mut angles = Vec::with_capacity(letters);
    angles.push(energy_dir);
    if letters > 1 {
        angles.push(Angles {
            theta: std::f64::consts::PI - energy_dir.theta,
            phi: (energy_dir.phi + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU),
        });
    }
    for k in 2..letters {
        angles.push(Angles {
            theta: std::f64::consts::FRAC_PI_2,
            phi: (k as f64 - 2.0) * std::f64::consts::TAU / (letters.max(3) as f64 - 2.0),
        });
    }
    angles
}

/// Uniform Bloch-sphere samples (area measure) from the restart's own stream.
fn sampled_angles(letters: usize, seed: u64, restart: u64) -> Vec<Angles> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart);
    (0..letters)
        .map(|_| {
            let z: f64 = 1.0 - 2.0 * rng.random::<f64>();
            let phi: f64 = std::f64::consts::TAU * rng.random::<f64>();
            Angles { theta: z.clamp(-1.0, 1.0).acos(), phi }
        })
        .collect()
}

fn build_and_solve(
    angles: &[Angles],
    channel: &KrausChannel,
    complementary: Option<&KrausChannel>,
    constraints: &[PowerConstraint],
    opts: &SolveOptions,
) -> Option<f64> {
    let states = states_from_angles(angles);
    let outcome = match complementary {
        None => {
            let inst = CqInstance::from_states(&states, channel, constraints).ok()?;
            solve_polytope(&inst, opts, None).ok()?
        }
        Some(comp) => {
            let inst =
                PrivateCqInstance::from_states_with_complement(&states, channel, comp, constraints).ok()?;
            solve_polytope(&inst, opts, None).ok()?
        }
    };
    Some(outcome.value)
}

/// Golden-section maximization of a scalar slice, keeping the best point seen
/// (including the starting value, so refinement never loses ground).
fn golden_refine(
    mut best_x: f64,
    mut best_f: f64,
    lo: f64,
    hi: f64,
    iters: usize,
    mut eval: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - GOLDEN_RATIO_CONJ * (b - a);
    let mut x2 = a + GOLDEN_RATIO_CONJ * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..iters {
        if f1 > best_f {
            best_f = f1;
            best_x = x1;
        }
        if f2 > best_f {
            best_f = f2;
            best_x = x2;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN_RATIO_CONJ * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN_RATIO_CONJ * (b - a);
            f2 = eval(x2);
        }
    }
    (best_x, best_f)
}

struct RestartResult {
    value: f64,
    angles: Vec<Angles>,
}

fn run_restart(
    restart: u64,
    letters: usize,
    energy_dir: Angles,
    channel: &KrausChannel,
    complementary: Option<&KrausChannel>,
    constraints: &[PowerConstraint],
    opts: &SearchOptions,
) -> Option<RestartResult> {
    let mut angles = if restart == 0 {
        anchor_angles(letters, energy_dir)
    } else {
        sampled_angles(letters, opts.seed, restart)
    };
    let fast = opts.refine_solve();
    let mut value = build_and_solve(&angles, channel, complementary, constraints, &fast)?;

    let window = 0.7;
    for _pass in 0..opts.refine_passes {
        for i in 0..letters {
            for coord in 0..2 {
                let current = if coord == 0 { angles[i].theta } else { angles[i].phi };
                let (lo, hi) = if coord == 0 {
                    ((current - window).max(0.0), (current + window).min(std::f64::consts::PI))
                } else {
                    (current - window, current + window)
                };
                let mut trial_angles = angles.clone();
                let (best_x, best_f) = golden_refine(current, value, lo, hi, opts.golden_iters, |x| {
                    if coord == 0 {
                        trial_angles[i].theta = x;
                    } else {
                        trial_angles[i].phi = x;
                    }
                    build_and_solve(&trial_angles, channel, complementary, constraints, &fast)
                        .unwrap_or(f64::NEG_INFINITY)
                });
                if best_f > value {
                    value = best_f;
                    if coord == 0 {
                        angles[i].theta = best_x;
                    } else {
                        angles[i].phi = best_x;
                    }
                }
            }
        }
    }
    Some(RestartResult { value, angles })
}

pub(crate) fn general_search(
    channel: &KrausChannel,
    letters: usize,
    constraints: &[PowerConstraint],
    opts: &SearchOptions,
    objective: Objective,
) -> Result<CapacityResult> {
    if channel.dim_in() != 2 {
        return Err(Error::UnsupportedDim { got: channel.dim_in(), context: "state search is qubit-only" });
    }
    if letters == 0 {
        return Err(Error::OutOfRange("need at least one letter".into()));
    }
    if opts.restarts == 0 {
        return Err(Error::Config("restarts must be positive".into()));
    }

    // Feasibility against the best any pure state can do, per constraint.
    let affine: Vec<(f64, [f64; 3])> =
        constraints.iter().map(|c| energy_affine_map(channel, c)).collect();
    for (c, (c0, w)) in constraints.iter().zip(&affine) {
        let best = max_pure_energy(*c0, w);
        if c.threshold > best + FEASIBILITY_TOL {
            return Err(Error::Infeasible { threshold: c.threshold, max_feasible: best });
        }
    }
    // Anchor letter 0 points along the steepest-energy direction of the
    // first constraint (or +z when unconstrained).
    let energy_dir = affine
        .first()
        .map(|(_, w)| angles_of_direction(w))
        .unwrap_or(Angles { theta: 0.0, phi: 0.0 });

    let complementary = match objective {
        Objective::Unassisted => None,
        Objective::Private => Some(channel.complementary()),
    };

    let restarts: Vec<u64> = (0..opts.restarts as u64).collect();
    let outcomes = map_maybe_parallel(restarts, opts.parallel, |j| {
        run_restart(j, letters, energy_dir, channel, complementary.as_ref(), constraints, opts)
    });

    let mut best: Option<RestartResult> = None;
    for outcome in outcomes.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => outcome.value > b.value,
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.ok_or_else(|| {
        let c = constraints.first();
        Error::Infeasible {
            threshold: c.map(|c| c.threshold).unwrap_or(0.0),
            max_feasible: f64::NAN,
        }
    })?;

    // Final accurate solve at the winning state set.
    let states = states_from_angles(&best.angles);
    match objective {
        Objective::Unassisted => {
            let inst = CqInstance::from_states(&states, channel, constraints)?;
            let outcome = solve_polytope(&inst, &opts.solve, None)?;
            Ok(assemble_result(&inst, outcome))
        }
        Objective::Private => {
            let comp = complementary.expect("built above");
            let inst = PrivateCqInstance::from_states_with_complement(&states, channel, &comp, constraints)?;
            let outcome = solve_polytope(&inst, &opts.solve, None)?;
            Ok(assemble_result(&inst, outcome))
        }
    }
}
