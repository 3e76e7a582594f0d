//! Capacity-power functions for quantum and classical channels.
//!
//! A channel's capacity-power function `C(B)` is the largest classical
//! information rate achievable while the received signal carries average
//! energy at least `B`. This crate computes it for:
//!
//! - classical discrete memoryless channels (closed forms and a
//!   power-constrained Blahut-Arimoto solver),
//! - classical-quantum channels with fixed signal states (`c1_cq`),
//! - qubit channels optimized over signal states as well (`c1_general`),
//! - the private-communication analogue built on complementary channels
//!   (`p1_cq` / `p1_general`),
//! - coherent-state ensembles through a 50-50 beam splitter, handled exactly
//!   via Gram matrices,
//! - Haar-random pure states, where the noiseless capacity-power curve has an
//!   analytic form backed here by Monte Carlo sampling.
//!
//! All capacities and entropies are in nats internally; bits appear only in
//! presentation-layer output. Solvers are deterministic given their seeds.
//! The `parallel` feature (default on) fans independent work out through
//! rayon; disable it for a fully sequential build.

pub mod capacity;
pub mod channels;
pub mod classical;
pub mod entropy;
pub mod error;
pub mod json;
pub mod linalg;
pub mod par;
pub mod randstates;

pub use capacity::{
    accessible_information, c1_cq, c1_general, c2_product_bruteforce, check_concavity, holevo,
    max_feasible_energy, output_energy, p1_cq, p1_general, private_chi, sweep_curve, CapacityResult,
    ConcavityReport, PowerConstraint, PowerCurve, SolveOptions, SolveStatus,
};
pub use channels::{
    beam_splitter_output, coherent_fock_vector, coherent_overlap, mixture_entropy_gram, CQEnsemble,
    CoherentEnsemble, KrausChannel,
};
pub use entropy::{binary_entropy, shannon_entropy, von_neumann_entropy, LN_2};
pub use error::{Error, Result};
pub use linalg::{
    eig_hermitian, expectation, kron, partial_trace, ComplexMatrix, DensityMatrix, HermitianOperator,
    ProbabilityVector, Subsystem,
};
