use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::channels::CQEnsemble;
use crate::entropy::{binary_entropy, LN_2};
use crate::linalg::sigma_z_observable;

fn ket0() -> DensityMatrix {
    DensityMatrix::pure(&[Complex64::ONE, Complex64::ZERO]).unwrap()
}

fn ket1() -> DensityMatrix {
    DensityMatrix::pure(&[Complex64::ZERO, Complex64::ONE]).unwrap()
}

/// The three symmetric trine states in the x-z plane of the Bloch sphere.
fn trine_states() -> Vec<DensityMatrix> {
    let r3 = 3.0f64.sqrt() / 2.0;
    vec![
        DensityMatrix::pure(&[Complex64::ONE, Complex64::ZERO]).unwrap(),
        DensityMatrix::pure(&[Complex64::new(-0.5, 0.0), Complex64::new(r3, 0.0)]).unwrap(),
        DensityMatrix::pure(&[Complex64::new(-0.5, 0.0), Complex64::new(-r3, 0.0)]).unwrap(),
    ]
}

fn trine_povm() -> Vec<ComplexMatrix> {
    trine_states()
        .iter()
        .map(|s| {
            let mut m = ComplexMatrix::identity(2);
            m.add_scaled(s.matrix(), -1.0);
            m.scale(Complex64::new(2.0 / 3.0, 0.0))
        })
        .collect()
}

fn random_pure_qubit(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let z: f64 = 1.0 - 2.0 * rng.random::<f64>();
    let phi: f64 = std::f64::consts::TAU * rng.random::<f64>();
    DensityMatrix::bloch(z.clamp(-1.0, 1.0).acos(), phi)
}

#[test]
fn holevo_examples() {
    let trine = CQEnsemble::uniform(trine_states()).unwrap();
    let id = KrausChannel::identity(2);
    let chi = holevo(&trine, &id).unwrap();
    assert!((chi - LN_2).abs() < 1e-12, "trine Holevo bound is one bit");

    let single = CQEnsemble::uniform(vec![ket0()]).unwrap();
    assert!(holevo(&single, &id).unwrap().abs() < 1e-12);

    let pair = CQEnsemble::uniform(vec![ket0(), ket1()]).unwrap();
    let constant = KrausChannel::depolarizing(1.0, 2).unwrap();
    assert!(holevo(&pair, &constant).unwrap().abs() < 1e-12);
}

#[test]
fn output_energy_examples() {
    let id = KrausChannel::identity(2);
    let trine = CQEnsemble::uniform(trine_states()).unwrap();
    // H = Σ_a b(a) E_a with measurement energies b = (1/3, 2/3, 0)
    let povm = trine_povm();
    let b = [1.0 / 3.0, 2.0 / 3.0, 0.0];
    let mut h = ComplexMatrix::zeros(2, 2);
    for (e, &ba) in povm.iter().zip(&b) {
        h.add_scaled(e, ba);
    }
    let h = HermitianOperator::new(h).unwrap();
    let energy = output_energy(&trine, &id, &h).unwrap();
    assert!((energy - 1.0 / 3.0).abs() < 1e-12);

    let pair = CQEnsemble::uniform(vec![ket0(), ket1()]).unwrap();
    assert!(output_energy(&pair, &id, &sigma_z_observable()).unwrap().abs() < 1e-12);

    let point = CQEnsemble::new(
        vec![ket0(), ket1()],
        ProbabilityVector::new(vec![0.0, 1.0]).unwrap(),
    )
    .unwrap();
    let h01 = HermitianOperator::from_diagonal(&[0.0, 1.0]);
    assert!((output_energy(&point, &id, &h01).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn max_feasible_energy_examples() {
    let id = KrausChannel::identity(2);
    let h01 = HermitianOperator::from_diagonal(&[0.0, 1.0]);
    let states = vec![ket0(), ket1()];
    assert!((max_feasible_energy(&states, &id, &h01).unwrap() - 1.0).abs() < 1e-12);

    let constant = KrausChannel::depolarizing(1.0, 2).unwrap();
    let e = max_feasible_energy(&states, &constant, &sigma_z_observable()).unwrap();
    assert!(e.abs() < 1e-12, "all outputs are maximally mixed");
}

#[test]
fn c1_cq_binary_noiseless_flat_then_falling() {
    let id = KrausChannel::identity(2);
    let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
    let states = vec![ket0(), ket1()];
    let opts = SolveOptions::default();

    // below the unconstrained optimum's energy the constraint is slack
    let r = c1_cq(&states, &id, &[PowerConstraint::new(h.clone(), 0.25)], &opts).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert!((r.value - LN_2).abs() < 1e-9);
    assert!(r.achieved_energy[0] >= 0.25 - 1e-7);
    assert!(r.active_constraints.is_empty());

    // active constraint: closed form h(B) with the mass pushed to the
    // energetic letter
    let r = c1_cq(&states, &id, &[PowerConstraint::new(h.clone(), 0.75)], &opts).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert!((r.value - binary_entropy(0.75).unwrap()).abs() < 1e-6);
    let p = r.argmax_probs.as_ref().unwrap();
    assert!((p.weight(0) - 0.25).abs() < 1e-6);
    assert!((p.weight(1) - 0.75).abs() < 1e-6);
    assert_eq!(r.active_constraints, vec![0]);

    // beyond the best letter: infeasible
    let err = c1_cq(&states, &id, &[PowerConstraint::new(h, 1.2)], &opts).unwrap_err();
    assert!(matches!(err, Error::Infeasible { .. }));
}

#[test]
fn c1_cq_matches_fine_grid_on_two_letters() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let opts = SolveOptions::default();
    for trial in 0..4 {
        let states = vec![random_pure_qubit(&mut rng), random_pure_qubit(&mut rng)];
        let channel = KrausChannel::depolarizing(0.2, 2).unwrap();
        let h = HermitianOperator::from_diagonal(&[rng.random::<f64>(), rng.random::<f64>() + 1.0]);
        let constraint = PowerConstraint::new(h.clone(), 0.0);
        let inst = CqInstance::from_states(&states, &channel, std::slice::from_ref(&constraint)).unwrap();
        let energies = inst.letter_energies(0);
        let (lo, hi) = (energies[0].min(energies[1]), energies[0].max(energies[1]));
        let b = lo + 0.7 * (hi - lo);
        let constraint = PowerConstraint::new(h, b);
        let inst = CqInstance::from_states(&states, &channel, std::slice::from_ref(&constraint)).unwrap();

        // exhaustive scan over the feasible edge of the 2-simplex
        let steps = 200_000usize;
        let mut brute = f64::NEG_INFINITY;
        for k in 0..=steps {
            let p1 = k as f64 / steps as f64;
            let p = [1.0 - p1, p1];
            let e = p[0] * energies[0] + p[1] * energies[1];
            if e >= b - 1e-9 {
                brute = brute.max(inst.chi(&p));
            }
        }
        let r = inst.solve(&opts).unwrap();
        assert!(
            (r.value - brute).abs() < 1e-6,
            "trial {trial}: solver {} vs fine grid {brute}",
            r.value
        );
    }
}

#[test]
fn c1_cq_never_below_grid_on_three_letters() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let opts = SolveOptions::default();
    for _ in 0..3 {
        let states: Vec<DensityMatrix> = (0..3).map(|_| random_pure_qubit(&mut rng)).collect();
        let channel = KrausChannel::depolarizing(0.3, 2).unwrap();
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        let c = PowerConstraint::new(h, 0.4);
        let inst = CqInstance::from_states(&states, &channel, std::slice::from_ref(&c)).unwrap();
        let energies = inst.letter_energies(0).to_vec();
        if energies.iter().copied().fold(f64::NEG_INFINITY, f64::max) < 0.4 {
            continue;
        }
        let r = inst.solve(&opts).unwrap();

        let steps = 500usize;
        let mut brute = f64::NEG_INFINITY;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let p = [
                    i as f64 / steps as f64,
                    j as f64 / steps as f64,
                    (steps - i - j) as f64 / steps as f64,
                ];
                let e: f64 = p.iter().zip(&energies).map(|(a, b)| a * b).sum();
                if e >= 0.4 - 1e-9 {
                    brute = brute.max(inst.chi(&p));
                }
            }
        }
        assert!(r.value >= brute - 1e-9, "solver must dominate every grid point");
        assert!(r.value <= brute + 1e-4, "solver should not exceed the grid optimum by much");
    }
}

#[test]
fn c1_general_noiseless_examples() {
    let opts = SearchOptions { restarts: 8, seed: 7, ..SearchOptions::default() };
    let id = KrausChannel::depolarizing(0.0, 2).unwrap();
    let sz = sigma_z_observable();

    let r = c1_general(&id, 2, &[PowerConstraint::new(sz.clone(), 0.0)], &opts).unwrap();
    assert!((r.value - LN_2).abs() < 1e-7, "noiseless qubit optimum is an orthogonal pair");

    let constant = KrausChannel::depolarizing(1.0, 2).unwrap();
    let r = c1_general(&constant, 3, &[PowerConstraint::new(sz.clone(), -0.5)], &opts).unwrap();
    assert!(r.value.abs() < 1e-9);

    // only the +1 eigenstate of σ_z meets B = 1
    let r = c1_general(&id, 2, &[PowerConstraint::new(sz.clone(), 1.0)], &opts).unwrap();
    assert!(r.value.abs() < 1e-9);
    let p = r.argmax_probs.as_ref().unwrap();
    assert!((p.weight(0) - 1.0).abs() < 1e-6);
    let zz = crate::linalg::expectation(&sz, &r.argmax_states[0]).unwrap();
    assert!((zz - 1.0).abs() < 1e-9, "argmax collapses onto |0⟩");

    // infeasible beyond the Bloch-sphere maximum
    let err = c1_general(&id, 2, &[PowerConstraint::new(sz, 1.0 + 1e-6)], &opts).unwrap_err();
    assert!(matches!(err, Error::Infeasible { .. }));
}

#[test]
fn c1_general_dominates_fixed_ensembles() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let channel = KrausChannel::depolarizing(0.25, 2).unwrap();
    let sz = sigma_z_observable();
    let constraints = [PowerConstraint::new(sz, 0.2)];
    let opts = SearchOptions { restarts: 24, seed: 9, ..SearchOptions::default() };
    let general = c1_general(&channel, 3, &constraints, &opts).unwrap();
    for _ in 0..5 {
        let states: Vec<DensityMatrix> = (0..3).map(|_| random_pure_qubit(&mut rng)).collect();
        match c1_cq(&states, &channel, &constraints, &SolveOptions::default()) {
            Ok(fixed) => assert!(
                general.value >= fixed.value - 1e-7,
                "general {} under fixed {}",
                general.value,
                fixed.value
            ),
            Err(Error::Infeasible { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}

#[test]
fn c1_general_rejects_non_qubit_channels() {
    let id3 = KrausChannel::identity(3);
    let h = HermitianOperator::from_diagonal(&[0.0, 1.0, 2.0]);
    let err = c1_general(&id3, 2, &[PowerConstraint::new(h, 0.0)], &SearchOptions::default()).unwrap_err();
    assert!(matches!(err, Error::UnsupportedDim { .. }));
}

#[test]
fn private_chi_examples() {
    let pair = CQEnsemble::uniform(vec![ket0(), ket1()]).unwrap();

    let id = KrausChannel::amplitude_damping(0.0).unwrap();
    assert!((private_chi(&pair, &id).unwrap() - LN_2).abs() < 1e-12);

    let half = KrausChannel::amplitude_damping(0.5).unwrap();
    assert!(private_chi(&pair, &half).unwrap().abs() < 1e-9);

    // outputs are diagonal, so both Holevo terms are binary entropies:
    // χ_AB - χ_AE = h(0.375) - h(0.125)
    let quarter = KrausChannel::amplitude_damping(0.25).unwrap();
    let want = binary_entropy(0.375).unwrap() - binary_entropy(0.125).unwrap();
    assert!((want - 0.284793).abs() < 1e-6);
    assert!((private_chi(&pair, &quarter).unwrap() - want).abs() < 1e-12);
}

#[test]
fn private_reduces_to_holevo_for_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let id = KrausChannel::identity(2);
    for _ in 0..5 {
        let states: Vec<DensityMatrix> = (0..3).map(|_| random_pure_qubit(&mut rng)).collect();
        let raw: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 0.1).collect();
        let total: f64 = raw.iter().sum();
        let probs = ProbabilityVector::new(raw.iter().map(|x| x / total).collect()).unwrap();
        let ens = CQEnsemble::new(states, probs).unwrap();
        let a = private_chi(&ens, &id).unwrap();
        let b = holevo(&ens, &id).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn p1_cq_amplitude_damping_examples() {
    let states = vec![ket0(), ket1()];
    let sz = sigma_z_observable();
    let opts = SolveOptions::default();

    let id = KrausChannel::amplitude_damping(0.0).unwrap();
    let r = p1_cq(&states, &id, &[PowerConstraint::new(sz.clone(), 0.0)], &opts).unwrap();
    assert!((r.value - LN_2).abs() < 1e-7);

    let half = KrausChannel::amplitude_damping(0.5).unwrap();
    for b in [-0.5, 0.0, 0.5] {
        let r = p1_cq(&states, &half, &[PowerConstraint::new(sz.clone(), b)], &opts).unwrap();
        assert!(r.value.abs() < 1e-6, "self-complementary point has zero objective");
    }

    // Independent 1-D oracle at λ = 0.25, B = 0: with p = P(|1⟩) the diagonal
    // outputs make the objective h(0.75 p) - h(0.25 p); scan it exhaustively.
    let quarter = KrausChannel::amplitude_damping(0.25).unwrap();
    let steps = 400_000usize;
    let mut best = f64::NEG_INFINITY;
    let mut best_p = 0.0;
    for k in 0..=steps {
        let p = k as f64 / steps as f64;
        let v = binary_entropy(0.75 * p).unwrap() - binary_entropy(0.25 * p).unwrap();
        if v > best {
            best = v;
            best_p = p;
        }
    }
    let r = p1_cq(&states, &quarter, &[PowerConstraint::new(sz, 0.0)], &opts).unwrap();
    assert!(
        (r.value - best).abs() < 1e-6,
        "solver {} vs 1-D scan {best} at p = {best_p}",
        r.value
    );
    let p = r.argmax_probs.as_ref().unwrap();
    assert!((p.weight(1) - best_p).abs() < 1e-3);
}

#[test]
fn sweep_binary_noiseless_closed_form() {
    let id = KrausChannel::identity(2);
    let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
    let states = vec![ket0(), ket1()];
    let grid = [0.0, 0.5, 0.75, 1.0];
    let curve = sweep_curve(&grid, false, |b, warm| {
        let inst = CqInstance::from_states(&states, &id, &[PowerConstraint::new(h.clone(), b)])?;
        inst.solve_warm(&SolveOptions::default(), warm)
    })
    .unwrap();
    let want = [LN_2, LN_2, binary_entropy(0.75).unwrap(), 0.0];
    for (point, want) in curve.points.iter().zip(want) {
        assert!((point.value - want).abs() < 1e-6, "value {} vs {}", point.value, want);
    }
    assert!(curve.max_increase() <= 1e-6);
}

#[test]
fn sweep_propagates_infeasible_points_as_status() {
    let id = KrausChannel::identity(2);
    let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
    let states = vec![ket0(), ket1()];
    let grid = [0.5, 1.0, 1.5];
    let curve = sweep_curve(&grid, false, |b, warm| {
        let inst = CqInstance::from_states(&states, &id, &[PowerConstraint::new(h.clone(), b)])?;
        inst.solve_warm(&SolveOptions::default(), warm)
    })
    .unwrap();
    assert_eq!(curve.points[2].status, SolveStatus::Infeasible);
    assert_eq!(curve.solved_points().len(), 2);
}

#[test]
fn single_point_sweep_equals_direct_call() {
    let id = KrausChannel::identity(2);
    let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
    let states = vec![ket0(), ket1()];
    let direct = c1_cq(&states, &id, &[PowerConstraint::new(h.clone(), 0.6)], &SolveOptions::default()).unwrap();
    let curve = sweep_curve(&[0.6], false, |b, warm| {
        let inst = CqInstance::from_states(&states, &id, &[PowerConstraint::new(h.clone(), b)])?;
        inst.solve_warm(&SolveOptions::default(), warm)
    })
    .unwrap();
    assert_eq!(curve.points.len(), 1);
    assert!((curve.points[0].value - direct.value).abs() < 1e-12);
}

#[test]
fn concavity_check_examples() {
    // samples of the concave binary entropy
    let pts: Vec<(f64, f64)> = (0..21)
        .map(|i| {
            let b = 0.5 + 0.5 * i as f64 / 20.0;
            (b, binary_entropy(b.min(1.0)).unwrap())
        })
        .collect();
    let report = check_concavity(&pts, 1e-6).unwrap();
    assert!(report.is_concave);
    assert!(report.max_violation <= 1e-6);

    // pointwise max of two crossing concave parabolas: the kink is convex,
    // so violations localize at the crossing
    let f1 = |x: f64| 1.0 - (x - 0.2) * (x - 0.2);
    let f2 = |x: f64| 1.3 - 2.0 * (x - 0.9) * (x - 0.9);
    let pts: Vec<(f64, f64)> = (0..41)
        .map(|i| {
            let x = i as f64 / 40.0;
            (x, f1(x).max(f2(x)))
        })
        .collect();
    let crossing = pts
        .windows(2)
        .position(|w| (f1(w[0].0) >= f2(w[0].0)) != (f1(w[1].0) >= f2(w[1].0)))
        .unwrap();
    let report = check_concavity(&pts, 1e-6).unwrap();
    assert!(!report.is_concave);
    assert!(!report.violating_triples.is_empty());
    for t in &report.violating_triples {
        assert!(
            t.indices.1.abs_diff(crossing) <= 1,
            "violation at {:?} should sit at the crossing near index {crossing}",
            t.indices
        );
    }

    let err = check_concavity(&pts[..2], 1e-6).unwrap_err();
    assert!(matches!(err, Error::TooFewPoints { .. }));
}

#[test]
fn additivity_brute_force_binary_noiseless() {
    let id = KrausChannel::identity(2);
    let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
    let states = vec![ket0(), ket1()];

    let c2 = c2_product_bruteforce(&states, &id, &h, 0.75, 1e-2).unwrap();
    let c1 = c1_cq(&states, &id, &[PowerConstraint::new(h.clone(), 0.75)], &SolveOptions::default())
        .unwrap()
        .value;
    assert!((c2 - 2.0 * c1).abs() <= 2e-3, "c2 = {c2}, 2 c1 = {}", 2.0 * c1);
    assert!((c2 - 2.0 * binary_entropy(0.75).unwrap()).abs() <= 2e-3);

    let c2 = c2_product_bruteforce(&states, &id, &h, 0.25, 1e-2).unwrap();
    assert!((c2 - 2.0 * LN_2).abs() <= 1e-9, "unconstrained region is exactly two bits");

    let constant = KrausChannel::depolarizing(1.0, 2).unwrap();
    let sz = sigma_z_observable();
    let c2 = c2_product_bruteforce(&states, &constant, &sz, -0.1, 1e-2).unwrap();
    assert!(c2.abs() < 1e-12);

    assert!(matches!(
        c2_product_bruteforce(&states, &id, &h, 1.2, 1e-2),
        Err(Error::Infeasible { .. })
    ));
}

#[test]
fn accessible_information_trine() {
    let trine = CQEnsemble::uniform(trine_states()).unwrap();
    let povm = trine_povm();
    let id = KrausChannel::identity(2);

    let t = induced_transition_matrix(trine.states(), &povm, &id).unwrap();
    for (b, row) in t.iter().enumerate() {
        for (a, &p) in row.iter().enumerate() {
            let want = if a == b { 0.0 } else { 0.5 };
            assert!((p - want).abs() < 1e-12, "p({a}|{b})");
        }
    }

    let info = accessible_information(&trine, &povm, &id).unwrap();
    let exact = 3.0f64.ln() - LN_2;
    assert!((info - exact).abs() < 1e-12);
    assert!((info / LN_2 - 0.5849625).abs() < 5e-4);

    // Holevo bound
    assert!(info <= holevo(&trine, &id).unwrap() + 1e-9);
}

#[test]
fn accessible_information_projective_orthogonal() {
    let pair = CQEnsemble::uniform(vec![ket0(), ket1()]).unwrap();
    let povm = vec![ket0().matrix().clone(), ket1().matrix().clone()];
    let id = KrausChannel::identity(2);
    let info = accessible_information(&pair, &povm, &id).unwrap();
    assert!((info - LN_2).abs() < 1e-12);
}

#[test]
fn povm_validation_rejects_incomplete_sets() {
    let pair = CQEnsemble::uniform(vec![ket0(), ket1()]).unwrap();
    let id = KrausChannel::identity(2);
    let bad = vec![ket0().matrix().clone()];
    assert!(matches!(
        accessible_information(&pair, &bad, &id),
        Err(Error::NotPovm(_))
    ));
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..6 {
        let m = 3;
        let states: Vec<DensityMatrix> = (0..m).map(|_| random_pure_qubit(&mut rng)).collect();
        let channel = KrausChannel::depolarizing(0.2, 2).unwrap();
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        let inst =
            CqInstance::from_states(&states, &channel, &[PowerConstraint::new(h, 0.0)]).unwrap();

        let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.2).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();

        let (_, grad) = instance::SimplexObjective::value_grad(&inst, &p);
        let step = 1e-5;
        let mut worst_rel: f64 = 0.0;
        for x in 0..m {
            let mut plus = p.clone();
            plus[x] += step;
            let mut minus = p.clone();
            minus[x] -= step;
            let fd = (inst.chi(&plus) - inst.chi(&minus)) / (2.0 * step);
            worst_rel = worst_rel.max((grad[x] - fd).abs() / fd.abs().max(1.0));
        }
        assert!(worst_rel < 1e-5, "gradient relative error {worst_rel}");
    }
}

#[test]
fn monotone_in_threshold_on_random_cq_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for lambda in [0.0, 0.2, 0.5] {
        let channel = KrausChannel::depolarizing(lambda, 2).unwrap();
        let states: Vec<DensityMatrix> = (0..3).map(|_| random_pure_qubit(&mut rng)).collect();
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        let c = PowerConstraint::new(h.clone(), 0.0);
        let inst = CqInstance::from_states(&states, &channel, std::slice::from_ref(&c)).unwrap();
        let max_e = inst
            .letter_energies(0)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let min_e = inst.letter_energies(0).iter().copied().fold(f64::INFINITY, f64::min);
        let grid: Vec<f64> = (0..15)
            .map(|i| min_e + (max_e - min_e) * i as f64 / 14.0 * 0.999)
            .collect();
        let curve = sweep_curve(&grid, false, |b, warm| {
            let inst = CqInstance::from_states(&states, &channel, &[PowerConstraint::new(h.clone(), b)])?;
            inst.solve_warm(&SolveOptions::default(), warm)
        })
        .unwrap();
        assert!(curve.max_increase() <= 1e-6, "λ = {lambda}");
        let report = curve.concavity_report(1e-6).unwrap();
        assert!(report.is_concave, "λ = {lambda}: max violation {}", report.max_violation);
    }
}

#[test]
fn beam_splitter_instance_reduces_to_input_at_zero_noise() {
    use crate::channels::CoherentEnsemble;
    let amps = vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(2.0f64.sqrt(), 0.0),
        Complex64::new(3.0f64.sqrt(), 0.0),
    ];
    let ens = CoherentEnsemble::new(amps.clone(), ProbabilityVector::uniform(3), 0.0).unwrap();
    let from_channel = CqInstance::from_beam_splitter(&ens, 1.0).unwrap();
    let letters: Vec<Vec<(f64, Complex64)>> = amps.iter().map(|&a| vec![(1.0, a)]).collect();
    let energies: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let direct = CqInstance::from_coherent_letters(&letters, &energies, 1.0).unwrap();

    let r1 = from_channel.solve(&SolveOptions::default()).unwrap();
    let r2 = direct.solve(&SolveOptions::default()).unwrap();
    assert!((r1.value - r2.value).abs() < 1e-9);
}

#[test]
fn multiple_constraints_are_jointly_enforced() {
    let id = KrausChannel::identity(2);
    let plus = DensityMatrix::bloch(std::f64::consts::FRAC_PI_2, 0.0);
    let states = vec![ket0(), ket1(), plus];
    let h1 = HermitianOperator::from_diagonal(&[0.0, 1.0]);
    let h2 = sigma_z_observable();
    // letter energies: e1 = (0, 1, 1/2), e2 = (1, -1, 0)
    let constraints = vec![
        PowerConstraint::new(h1.clone(), 0.5),
        PowerConstraint::new(h2.clone(), -0.1),
    ];
    let inst = CqInstance::from_states(&states, &id, &constraints).unwrap();
    let r = inst.solve(&SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert!(r.achieved_energy[0] >= 0.5 - 1e-7);
    assert!(r.achieved_energy[1] >= -0.1 - 1e-7);

    // brute force over the 2-simplex under both halfspaces
    let steps = 600usize;
    let e1 = inst.letter_energies(0).to_vec();
    let e2 = inst.letter_energies(1).to_vec();
    let mut brute = f64::NEG_INFINITY;
    for i in 0..=steps {
        for j in 0..=(steps - i) {
            let p = [
                i as f64 / steps as f64,
                j as f64 / steps as f64,
                (steps - i - j) as f64 / steps as f64,
            ];
            let en1: f64 = p.iter().zip(&e1).map(|(a, b)| a * b).sum();
            let en2: f64 = p.iter().zip(&e2).map(|(a, b)| a * b).sum();
            if en1 >= 0.5 - 1e-9 && en2 >= -0.1 - 1e-9 {
                brute = brute.max(inst.chi(&p));
            }
        }
    }
    assert!(r.value >= brute - 1e-9);
    assert!(r.value <= brute + 1e-4);

    // individually satisfiable but jointly empty: p·e1 ≥ 1 forces the |1⟩
    // vertex, whose σ_z energy is -1
    let empty = vec![
        PowerConstraint::new(h1, 1.0),
        PowerConstraint::new(h2, 0.5),
    ];
    let inst = CqInstance::from_states(&states, &id, &empty).unwrap();
    assert!(matches!(inst.solve(&SolveOptions::default()), Err(Error::Infeasible { .. })));
}

#[test]
fn infeasibility_is_exact_at_the_boundary() {
    let id = KrausChannel::identity(2);
    let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
    let states = vec![ket0(), ket1()];
    let opts = SolveOptions::default();
    // at max + 1e-9 still feasible, just above it infeasible
    assert!(c1_cq(&states, &id, &[PowerConstraint::new(h.clone(), 1.0 + 0.9e-9)], &opts).is_ok());
    assert!(matches!(
        c1_cq(&states, &id, &[PowerConstraint::new(h, 1.0 + 2e-9)], &opts),
        Err(Error::Infeasible { .. })
    ));
}
