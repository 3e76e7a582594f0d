//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Storage is row-major `Vec<Complex64>` and the Hermitian eigensolver is a
//! cyclic Jacobi iteration, chosen so that repeated runs on the same platform
//! produce bit-identical spectra (regression tests depend on this). Intended
//! for operators up to a few hundred dimensions; there is no sparse path.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for `max |M - M†|` when validating Hermitian operators.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance for `|Tr ρ - 1|` when validating density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue a density matrix may carry before rejection.
pub const PSD_TOL: f64 = 1e-9;
/// Tolerance for `|Σ p - 1|` when validating probability vectors.
pub const SIMPLEX_SUM_TOL: f64 = 1e-10;
/// Most negative weight a probability vector may carry; clamped to 0 on read.
pub const WEIGHT_FLOOR: f64 = -1e-12;

/// Dense complex matrix, row-major. Square for states and observables,
/// rectangular for Kraus operators of dimension-changing channels.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(Error::OutOfRange("matrix must have at least one row".into()));
        }
        let ncols = rows[0].len();
        if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::OutOfRange("ragged or empty matrix rows".into()));
        }
        let data = rows.into_iter().flatten().collect();
        Ok(Self { rows: nrows, cols: ncols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Outer product `v v†` of a complex vector.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix. Panics on rectangular input.
    pub fn dim(&self) -> usize {
        assert!(self.is_square(), "dim() on a {}x{} matrix", self.rows, self.cols);
        self.rows
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, factor: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += factor * b;
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for a in &mut out.data {
            *a *= factor;
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// `Tr[A B]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = Complex64::ZERO;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self[(i, j)] * other[(j, i)];
            }
        }
        acc
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M†|` over entries; 0 for exactly Hermitian matrices.
    pub fn hermiticity_defect(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Kronecker product; `(A ⊗ B)(x ⊗ y) = Ax ⊗ By`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == Complex64::ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out.add_scaled(rhs, 1.0);
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out.add_scaled(rhs, -1.0);
        out
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product as a free function, mirroring the operator notation.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition of a Hermitian matrix: `M = V diag(λ) V†` with the
/// eigenvalues ascending and `V` unitary (eigenvectors in columns).
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

/// Cyclic Jacobi on a Hermitian matrix. Deterministic sweep order, no
/// threading, no pivot heuristics: the same input always produces the same
/// bits. Quadratic convergence makes ~10 sweeps enough at our sizes.
pub(crate) fn eig_hermitian_raw(m: &ComplexMatrix) -> EigDecomposition {
    assert!(m.is_square());
    let n = m.dim();
    // Work on the exactly-Hermitian average so roundoff in the caller's
    // arithmetic cannot leak into the rotations.
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| {
        let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        if i == j {
            Complex64::new(z.re, 0.0)
        } else {
            z
        }
    });
    let mut v = ComplexMatrix::identity(n);

    let scale: f64 = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tol = 1e-15 * scale.max(f64::MIN_POSITIVE);

    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    EigDecomposition { eigenvalues, eigenvectors }
}

/// One Jacobi rotation annihilating `a[(p, q)]`. The complex phase of the
/// pivot entry is absorbed into the rotation so the 2x2 subproblem is real.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let b = apq.norm();
    if b <= 1e-300 {
        a[(p, q)] = Complex64::ZERO;
        a[(q, p)] = Complex64::ZERO;
        return;
    }
    let u = apq / b; // e^{iφ}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * b);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = a.dim();
    // A <- R† A R with R_pp = c, R_pq = s·u, R_qp = -s·ū, R_qq = c.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * u.conj() * akq;
        a[(k, q)] = s * u * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * u * aqk;
        a[(q, k)] = s * u.conj() * apk + c * aqk;
    }
    a[(p, q)] = Complex64::ZERO;
    a[(q, p)] = Complex64::ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * u.conj() * vkq;
        v[(k, q)] = s * u * vkp + c * vkq;
    }
}

// ---------------------------------------------------------------------------
// Validated operator types
// ---------------------------------------------------------------------------

/// A square matrix validated to be Hermitian within [`HERMITIAN_TOL`].
/// Plays the role of an observable; its spectrum supplies output-letter
/// energies.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimMismatch { expected: mat.rows(), got: mat.cols() });
        }
        // NaN would sail through the defect comparison below
        if !mat.is_finite() {
            return Err(Error::NonHermitian { deviation: f64::NAN });
        }
        let defect = mat.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NonHermitian { deviation: defect });
        }
        Ok(Self { mat })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self { mat: ComplexMatrix::from_diagonal(diag) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Eigendecomposition with ascending eigenvalues and unitary eigenvectors.
    pub fn eig(&self) -> EigDecomposition {
        eig_hermitian_raw(&self.mat)
    }
}

/// Eigendecomposition of a validated Hermitian operator.
pub fn eig_hermitian(m: &HermitianOperator) -> EigDecomposition {
    m.eig()
}

/// A positive, unit-trace, Hermitian operator: a quantum state.
///
/// Validation runs a full eigendecomposition, so the spectrum is cached here
/// and entropy queries cost nothing extra.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    eigenvalues: Vec<f64>,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotDensity { reason: format!("{}x{} is not square", mat.rows(), mat.cols()) });
        }
        if !mat.is_finite() {
            return Err(Error::NotDensity { reason: "non-finite entries".into() });
        }
        let defect = mat.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotDensity { reason: format!("Hermiticity defect {defect:.3e}") });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotDensity { reason: format!("trace {tr} is not 1") });
        }
        let eig = eig_hermitian_raw(&mat);
        let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotDensity { reason: format!("negative eigenvalue {min:.3e}") });
        }
        Ok(Self { mat, eigenvalues: eig.eigenvalues })
    }

    /// Pure state `|ψ⟩⟨ψ|` from a (not necessarily normalized) vector.
    pub fn pure(state: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
            return Err(Error::NotDensity { reason: "zero or non-finite state vector".into() });
        }
        let inv = 1.0 / norm_sqr;
        let mat = ComplexMatrix::from_fn(state.len(), state.len(), |i, j| {
            state[i] * state[j].conj() * inv
        });
        Self::new(mat)
    }

    /// Qubit pure state `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn bloch(theta: f64, phi: f64) -> Self {
        let v = [
            Complex64::new((theta / 2.0).cos(), 0.0),
            Complex64::from_polar((theta / 2.0).sin(), phi),
        ];
        Self::pure(&v).expect("Bloch vector is always a valid state")
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mat = ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0));
        Self { mat, eigenvalues: vec![1.0 / dim as f64; dim] }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_diagonal(probs))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Ascending spectrum, computed once at validation time.
    pub fn spectrum(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// Discrete probability distribution on letters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::NotSimplex { reason: "empty weight vector".into() });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < WEIGHT_FLOOR) {
            return Err(Error::NotSimplex { reason: format!("weight {w} below floor") });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::NotSimplex { reason: format!("weights sum to {sum}") });
        }
        Ok(Self { weights })
    }

    pub fn uniform(len: usize) -> Self {
        Self { weights: vec![1.0 / len as f64; len] }
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weight at `i`, clamped to 0 if it carries negative rounding noise.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i].max(0.0)
    }

    /// All weights, clamped on read.
    pub fn weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.max(0.0)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().map(|w| w.max(0.0))
    }
}

// ---------------------------------------------------------------------------
// Operator algebra on states
// ---------------------------------------------------------------------------

/// `Re Tr[H ρ]`; the imaginary residue (bounded by roundoff for valid
/// arguments) is discarded.
pub fn expectation(h: &HermitianOperator, rho: &DensityMatrix) -> Result<f64> {
    if h.dim() != rho.dim() {
        return Err(Error::DimMismatch { expected: h.dim(), got: rho.dim() });
    }
    Ok(h.matrix().trace_product(rho.matrix()).re)
}

/// Which tensor factor [`partial_trace`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of a bipartite state with factor dimensions `(d_a, d_b)`.
pub fn partial_trace(rho: &DensityMatrix, dims: (usize, usize), keep: Subsystem) -> Result<DensityMatrix> {
    let (da, db) = dims;
    if da * db != rho.dim() {
        return Err(Error::DimMismatch { expected: rho.dim(), got: da * db });
    }
    let m = rho.matrix();
    let reduced = match keep {
        Subsystem::A => ComplexMatrix::from_fn(da, da, |a, a2| {
            (0..db).map(|b| m[(a * db + b, a2 * db + b)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(db, db, |b, b2| {
            (0..da).map(|a| m[(a * db + b, a * db + b2)]).sum()
        }),
    };
    DensityMatrix::new(reduced)
}

// ---------------------------------------------------------------------------
// Qubit helpers
// ---------------------------------------------------------------------------

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(vec![
        vec![Complex64::ZERO, Complex64::ONE],
        vec![Complex64::ONE, Complex64::ZERO],
    ])
    .unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(vec![
        vec![Complex64::ZERO, -Complex64::I],
        vec![Complex64::I, Complex64::ZERO],
    ])
    .unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&[1.0, -1.0])
}

/// `σ_z` as a validated observable; the workhorse Hamiltonian for qubit
/// examples (spin in a z-directed field).
pub fn sigma_z_observable() -> HermitianOperator {
    HermitianOperator::new(pauli_z()).unwrap()
}
