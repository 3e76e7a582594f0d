//! Projected gradient ascent over the simplex intersected with energy
//! halfspaces.
//!
//! The feasible set is `Δ ∩ {p : ⟨e_r, p⟩ ≥ B_r}`. With a handful of letters
//! the projection is a tiny QP, solved exactly by enumerating KKT active
//! sets: which coordinates sit at zero and which halfspaces are tight. (An
//! alternating-projection scheme stalls badly here whenever an energy
//! constraint runs nearly parallel to the simplex, which happens for any
//! channel whose letter energies are close together.) The objective is
//! concave for fixed letters, so ascent with Armijo backtracking plus a
//! projected-gradient fixed-point test is enough.

use crate::error::{Error, Result};

use super::instance::SimplexObjective;
use super::{SolveOptions, SolveStatus};

/// Feasibility slack: a constraint counts as satisfied when its energy is
/// within this of the threshold, matching the `B > max + 1e-9` infeasibility
/// contract.
pub(crate) const FEASIBILITY_TOL: f64 = 1e-9;

/// Euclidean projection onto the probability simplex (sort-based).
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    let mut found = false;
    for (i, &ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
            found = true;
        }
    }
    if !found {
        // all mass collapses onto the largest coordinate
        let argmax = v
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut out = vec![0.0; v.len()];
        out[argmax] = 1.0;
        return out;
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

const KKT_SLACK: f64 = 1e-11;

/// Exact Euclidean projection onto `Δ ∩ {⟨e_r, p⟩ ≥ B_r}` by active-set
/// enumeration. The minimizer satisfies the KKT system for exactly one
/// activity pattern (up to degeneracy, where every passing pattern yields the
/// same point), so scanning all `2^m · 2^R` patterns and checking primal and
/// dual feasibility recovers it; `m ≤ 12` keeps that cheap.
pub(crate) fn project_feasible(v: &[f64], energies: &[Vec<f64>], thresholds: &[f64]) -> Vec<f64> {
    let m = v.len();
    let r = thresholds.len();
    debug_assert!(m <= 12, "active-set enumeration is sized for few letters");

    // Fast path: if the plain simplex projection already satisfies every
    // halfspace, it is the answer.
    let simple = project_simplex(v);
    if energies
        .iter()
        .zip(thresholds)
        .all(|(e, &b)| dot(&simple, e) >= b - KKT_SLACK)
    {
        return simple;
    }

    let mut fallback: Option<(f64, Vec<f64>)> = None;
    for active_mask in 1..(1u32 << r) {
        for zero_mask in 0..(1u32 << m) {
            if zero_mask.count_ones() as usize == m {
                continue;
            }
            if let Some(p) = try_pattern(v, energies, thresholds, zero_mask, active_mask) {
                return p;
            }
            // Track the best primal-feasible candidate in case roundoff makes
            // every dual check fail marginally.
            if let Some(p) = try_pattern_primal(v, energies, thresholds, zero_mask, active_mask) {
                let d = p.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                if fallback.as_ref().map(|(best, _)| d < *best).unwrap_or(true) {
                    fallback = Some((d, p));
                }
            }
        }
    }
    if let Some((_, p)) = fallback {
        return p;
    }
    simple
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve the equality-constrained projection for one activity pattern and
/// check the full KKT conditions.
fn try_pattern(
    v: &[f64],
    energies: &[Vec<f64>],
    thresholds: &[f64],
    zero_mask: u32,
    active_mask: u32,
) -> Option<Vec<f64>> {
    let (p, multipliers) = solve_pattern(v, energies, thresholds, zero_mask, active_mask)?;
    // dual feasibility: inequality multipliers nonnegative
    for (r, &mu) in multipliers.iter().enumerate().skip(1) {
        if (active_mask >> (r - 1)) & 1 == 1 && mu < -KKT_SLACK {
            return None;
        }
    }
    // bound multipliers: λ_i = -(v_i + ν + Σ μ_r e_ri) ≥ 0 on zeroed coords
    for i in 0..v.len() {
        if (zero_mask >> i) & 1 == 1 {
            let mut lambda = -(v[i] + multipliers[0]);
            for (r, e) in energies.iter().enumerate() {
                if (active_mask >> r) & 1 == 1 {
                    lambda -= multipliers[r + 1] * e[i];
                }
            }
            if lambda < -KKT_SLACK {
                return None;
            }
        }
    }
    check_primal(&p, energies, thresholds).then_some(p)
}

/// Same pattern solve, primal checks only (used as a roundoff fallback).
fn try_pattern_primal(
    v: &[f64],
    energies: &[Vec<f64>],
    thresholds: &[f64],
    zero_mask: u32,
    active_mask: u32,
) -> Option<Vec<f64>> {
    let (p, _) = solve_pattern(v, energies, thresholds, zero_mask, active_mask)?;
    check_primal(&p, energies, thresholds).then_some(p)
}

fn check_primal(p: &[f64], energies: &[Vec<f64>], thresholds: &[f64]) -> bool {
    if p.iter().any(|&x| x < -KKT_SLACK) {
        return false;
    }
    energies
        .iter()
        .zip(thresholds)
        .all(|(e, &b)| dot(p, e) >= b - KKT_SLACK)
}

/// Projection onto the affine set of one activity pattern. Stationarity gives
/// `p_i = v_i + ν + Σ_r μ_r e_ri` on free coordinates; the active equalities
/// fix `(ν, μ)` through a small SPD system. Returns the point and the
/// multipliers `[ν, μ_1, …]`, or `None` when the system is singular.
fn solve_pattern(
    v: &[f64],
    energies: &[Vec<f64>],
    thresholds: &[f64],
    zero_mask: u32,
    active_mask: u32,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = v.len();
    let free: Vec<usize> = (0..m).filter(|i| (zero_mask >> i) & 1 == 0).collect();
    if free.is_empty() {
        return None;
    }
    let active: Vec<usize> = (0..thresholds.len())
        .filter(|r| (active_mask >> r) & 1 == 1)
        .collect();
    let k = 1 + active.len();

    // rows of the constraint matrix on free coordinates
    let row = |c: usize, i: usize| -> f64 {
        if c == 0 {
            1.0
        } else {
            energies[active[c - 1]][i]
        }
    };
    let rhs_of = |c: usize| -> f64 {
        if c == 0 {
            1.0
        } else {
            thresholds[active[c - 1]]
        }
    };

    // normal equations: (A A^T) y = c - A v_F
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for a in 0..k {
        for b in 0..k {
            gram[a * k + b] = free.iter().map(|&i| row(a, i) * row(b, i)).sum();
        }
        rhs[a] = rhs_of(a) - free.iter().map(|&i| row(a, i) * v[i]).sum::<f64>();
    }
    let y = solve_small(&mut gram, &mut rhs, k)?;

    let mut p = vec![0.0; m];
    for &i in &free {
        let mut pi = v[i];
        for (c, yc) in y.iter().enumerate() {
            pi += yc * row(c, i);
        }
        p[i] = pi;
    }
    // multipliers in fixed order [ν, μ_r for every r (0 when inactive)]
    let mut multipliers = vec![0.0; 1 + thresholds.len()];
    multipliers[0] = y[0];
    for (slot, &r) in active.iter().enumerate() {
        multipliers[r + 1] = y[slot + 1];
    }
    Some((p, multipliers))
}

/// Gaussian elimination with partial pivoting on a k×k system, k ≤ 3 in
/// practice.
fn solve_small(a: &mut [f64], b: &mut [f64], k: usize) -> Option<Vec<f64>> {
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i * k + col].abs().partial_cmp(&a[j * k + col].abs()).unwrap())?;
        if a[pivot * k + col].abs() < 1e-12 {
            return None;
        }
        if pivot != col {
            for j in 0..k {
                a.swap(col * k + j, pivot * k + j);
            }
            b.swap(col, pivot);
        }
        for i in (col + 1)..k {
            let f = a[i * k + col] / a[col * k + col];
            for j in col..k {
                a[i * k + j] -= f * a[col * k + j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = b[i];
        for j in (i + 1)..k {
            acc -= a[i * k + j] * x[j];
        }
        x[i] = acc / a[i * k + i];
    }
    Some(x)
}

fn violates(p: &[f64], energies: &[Vec<f64>], thresholds: &[f64]) -> bool {
    energies.iter().zip(thresholds).any(|(e, &b)| {
        let achieved: f64 = p.iter().zip(e).map(|(x, y)| x * y).sum();
        achieved < b - FEASIBILITY_TOL
    })
}

/// Raw optimizer output before it is dressed up as a `CapacityResult`.
pub(crate) struct SolveOutcome {
    pub probs: Vec<f64>,
    pub value: f64,
    pub status: SolveStatus,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Maximize a concave simplex objective over the feasible polytope.
///
/// Infeasibility is reported as an error exactly when some threshold exceeds
/// the best single-letter energy by more than `1e-9` (or, with several
/// constraints, when the alternating projection cannot reach the
/// intersection).
pub(crate) fn solve_polytope(
    obj: &dyn SimplexObjective,
    opts: &SolveOptions,
    warm: Option<&[f64]>,
) -> Result<SolveOutcome> {
    let m = obj.letters();
    let energies = obj.energies();

    // A threshold within the slack above the best letter is served at the
    // vertex; clamping keeps the projection's feasible set nonempty there.
    let mut thresholds = Vec::with_capacity(obj.thresholds().len());
    for (e, &b) in energies.iter().zip(obj.thresholds()) {
        let max_letter = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if b > max_letter + FEASIBILITY_TOL {
            return Err(Error::Infeasible { threshold: b, max_feasible: max_letter });
        }
        thresholds.push(b.min(max_letter));
    }
    let thresholds = &thresholds[..];

    let start: Vec<f64> = match warm {
        Some(w) if w.len() == m => w.to_vec(),
        _ => vec![1.0 / m as f64; m],
    };
    let mut p = project_feasible(&start, energies, thresholds);
    if violates(&p, energies, thresholds) {
        // individually satisfiable but jointly empty (multi-constraint case)
        let worst = thresholds.first().copied().unwrap_or(0.0);
        return Err(Error::Infeasible { threshold: worst, max_feasible: f64::NAN });
    }

    let (mut f, mut g) = obj.value_grad(&p);
    let mut step = 1.0f64;
    let mut status = SolveStatus::MaxIter;
    let mut iterations = opts.max_iter;
    let mut flat_streak = 0usize;
    const ARMIJO: f64 = 1e-4;

    for iter in 0..opts.max_iter {
        // backtracking line search on the projected step
        let mut accepted = false;
        let mut trial = p.clone();
        let mut f_trial = f;
        while step >= 1e-18 {
            let moved: Vec<f64> = p.iter().zip(&g).map(|(x, gi)| x + step * gi).collect();
            trial = project_feasible(&moved, energies, thresholds);
            let dir_dot: f64 = g.iter().zip(trial.iter().zip(&p)).map(|(gi, (t, x))| gi * (t - x)).sum();
            let displacement = trial
                .iter()
                .zip(&p)
                .map(|(t, x)| (t - x).abs())
                .fold(0.0, f64::max);
            if displacement < 1e-16 {
                // projected fixed point at this step size
                break;
            }
            f_trial = obj.value(&trial);
            if f_trial >= f + ARMIJO * dir_dot.max(0.0) && f_trial > f - 1e-15 {
                accepted = true;
                break;
            }
            step *= 0.5;
        }

        if accepted {
            let gain = f_trial - f;
            p = trial;
            let (fv, gv) = obj.value_grad(&p);
            f = fv;
            g = gv;
            step = (step * 1.3).min(1e4);
            if gain.abs() < opts.rel_tol * f.abs().max(1.0) {
                flat_streak += 1;
            } else {
                flat_streak = 0;
            }
        } else {
            // no admissible step: either optimal or the step collapsed
            flat_streak += 2;
            step = 1.0;
        }

        if flat_streak >= 2 {
            let fixed: Vec<f64> = p.iter().zip(&g).map(|(x, gi)| x + gi).collect();
            let projected = project_feasible(&fixed, energies, thresholds);
            let kkt = p
                .iter()
                .zip(&projected)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if kkt <= opts.kkt_tol {
                status = SolveStatus::Converged;
                iterations = iter + 1;
                break;
            }
            flat_streak = 0;
        }
    }

    // Vertex safeguard: feasible point masses are cheap to score and protect
    // the non-concave (private, non-degradable) path from poor local maxima.
    let mut best_p = p.clone();
    let mut best_f = obj.value(&p);
    for x in 0..m {
        if energies.iter().zip(thresholds).all(|(e, &b)| e[x] >= b - FEASIBILITY_TOL) {
            let mut vertex = vec![0.0; m];
            vertex[x] = 1.0;
            let fv = obj.value(&vertex);
            if fv > best_f + 1e-12 {
                best_f = fv;
                best_p = vertex;
            }
        }
    }

    let fixed: Vec<f64> = {
        let (_, gbest) = obj.value_grad(&best_p);
        best_p.iter().zip(&gbest).map(|(x, gi)| x + gi).collect()
    };
    let projected = project_feasible(&fixed, energies, thresholds);
    let kkt_residual = best_p
        .iter()
        .zip(&projected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    Ok(SolveOutcome { probs: best_p, value: best_f, status, kkt_residual, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_basics() {
        let p = project_simplex(&[0.5, 0.5]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_simplex(&[0.4, 0.4, 0.4]);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-12));
        // heavily negative coordinates drop out
        let p = project_simplex(&[1.0, -5.0, 0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn simplex_projection_is_idempotent_and_closest() {
        // projection of a feasible point is itself
        let q = vec![0.2, 0.3, 0.5];
        let p = project_simplex(&q);
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn feasible_projection_meets_halfspace() {
        // energies (0, 1), threshold 0.75: projection of uniform must reach it
        let energies = vec![vec![0.0, 1.0]];
        let thresholds = vec![0.75];
        let p = project_feasible(&[0.5, 0.5], &energies, &thresholds);
        let sum: f64 = p.iter().sum();
        let energy: f64 = p[1];
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(energy >= 0.75 - 1e-12);
        // and it is the closest such point: (0.25, 0.75)
        assert!((p[0] - 0.25).abs() < 1e-10);
        assert!((p[1] - 0.75).abs() < 1e-10);
    }

    #[test]
    fn projection_handles_nearly_parallel_constraints() {
        // letter energies inside a 2% band run almost parallel to the
        // simplex; this geometry used to stall alternating projections
        let energies = vec![vec![1.4446839497275603, 1.4642095346887254]];
        let thresholds = vec![1.458351859200376];
        let p = project_feasible(&[0.5, 0.5], &energies, &thresholds);
        let sum: f64 = p.iter().sum();
        let energy = dot(&p, &energies[0]);
        assert!((sum - 1.0).abs() < 1e-10);
        assert!(energy >= thresholds[0] - 1e-10);
        assert!(p.iter().all(|&x| x >= -1e-11));
    }

    mod variational {
        use super::*;
        use proptest::prelude::*;

        fn normalize(v: &[f64]) -> Vec<f64> {
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]

            /// `p* = Π(v)` iff `(v - p*)·(q - p*) ≤ 0` for every feasible q:
            /// the variational characterization of a Euclidean projection onto
            /// a convex set, plus idempotence.
            #[test]
            fn projection_satisfies_variational_inequality(
                v in proptest::collection::vec(-2.0..2.0f64, 4),
                e in proptest::collection::vec(0.0..2.0f64, 4),
                q_raw in proptest::collection::vec(0.01..1.0f64, 4),
                frac in 0.0..0.95f64,
            ) {
                let max_e = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min_e = e.iter().copied().fold(f64::INFINITY, f64::min);
                let b = min_e + frac * (max_e - min_e);
                let energies = vec![e.clone()];
                let thresholds = vec![b];

                let p = project_feasible(&v, &energies, &thresholds);
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(p.iter().all(|&x| x >= -1e-10));
                prop_assert!(dot(&p, &e) >= b - 1e-9);

                // idempotence
                let pp = project_feasible(&p, &energies, &thresholds);
                let moved = p.iter().zip(&pp).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
                prop_assert!(moved < 1e-9);

                // any feasible q lies on the far side of the supporting plane
                let q0 = normalize(&q_raw);
                // blend toward the best vertex until feasible
                let best = e
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                let mut q = q0;
                for _ in 0..60 {
                    if dot(&q, &e) >= b {
                        break;
                    }
                    for (i, qi) in q.iter_mut().enumerate() {
                        *qi = 0.5 * *qi + if i == best { 0.5 } else { 0.0 };
                    }
                }
                prop_assume!(dot(&q, &e) >= b);
                let inner: f64 = v
                    .iter()
                    .zip(&p)
                    .zip(q.iter().zip(&p))
                    .map(|((vi, pi), (qi, pj))| (vi - pi) * (qi - pj))
                    .sum();
                prop_assert!(inner <= 1e-8, "variational inequality violated: {inner}");
            }
        }
    }
}
