//! Dense complex linear algebra for small qubit registers.
//!
//! Everything here works on explicit `2^n x 2^n` matrices, which is exact and
//! fast for the handful of qubits an NMR molecule provides. Qubit 0 is the most
//! significant bit of a computational-basis index, so the bit string
//! `s = s1 s2 s3` reads left to right as qubits 0, 1, 2.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum tolerated `|A - A^dag|` entry for Hermitian operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum tolerated `|U^dag U - I|` entry for unitary operators.
pub const UNITARY_TOL: f64 = 1e-10;
/// Looser unitarity check used when an operator is applied to a state.
pub const APPLY_UNITARY_TOL: f64 = 1e-8;
/// Norm / trace tolerance for states.
pub const STATE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a proper density matrix.
pub const POSITIVITY_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Single-qubit Pauli selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> DMatrix<Complex64> {
        let i = Complex64::i();
        match self {
            Pauli::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Dense square operator on a register of `n >= 1` qubits.
#[derive(Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<Complex64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator(dim={}) {}", self.dim(), self.mat)
    }
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                actual: mat.ncols(),
            });
        }
        qubits_for_dim(mat.nrows())?;
        Ok(Self { mat })
    }

    /// Real-valued row-major constructor, mostly for tests and fixtures.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: rows.len(),
            });
        }
        let data: Vec<Complex64> = rows.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, &data))
    }

    pub fn identity(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits.max(1);
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits.max(1);
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        qubits_for_dim(diag.len())?;
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Ok(Self {
            mat: DMatrix::from_diagonal(&v),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.mat[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    /// Real parts of the diagonal.
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|r| (0..d).all(|c| r == c || self.mat[(r, c)] == ZERO))
    }

    /// Largest entry of `|A - A^dag|`.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.mat - self.mat.adjoint()))
    }

    /// Largest entry of `|U^dag U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        max_abs(&(self.mat.adjoint() * &self.mat - DMatrix::<Complex64>::identity(d, d)))
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOL
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= UNITARY_TOL
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs(&(&self.mat - &other.mat))
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.mat
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            mat: &self.mat * Complex64::new(factor, 0.0),
        }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        Self {
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
        }
    }

    /// Ascending eigenvalues and matching column eigenvectors of a Hermitian
    /// operator.
    pub fn eigh(&self) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
        let err = self.hermiticity_error();
        if err > HERMITIAN_TOL {
            return Err(Error::NotHermitian(err));
        }
        let eig = SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        Ok((values, vectors))
    }

    /// Ascending eigenvalues of a Hermitian operator.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let err = self.hermiticity_error();
        if err > HERMITIAN_TOL {
            return Err(Error::NotHermitian(err));
        }
        let mut values: Vec<f64> = self.mat.clone().symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// Kronecker product of the factors, left to right.
pub fn tensor(factors: &[Operator]) -> Result<Operator> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidInput("tensor of an empty factor list".into()))?;
    let mat = rest
        .iter()
        .fold(first.mat.clone(), |acc, f| acc.kronecker(&f.mat));
    Operator::from_matrix(mat)
}

/// `I ⊗ … ⊗ σ ⊗ … ⊗ I` with the Pauli at position `qubit` (0 = leftmost).
pub fn pauli_on(n_qubits: usize, which: Pauli, qubit: usize) -> Result<Operator> {
    single_qubit_on(n_qubits, &which.matrix(), qubit)
}

/// Embed a 2x2 matrix acting on `qubit` into an `n_qubits` register.
pub fn single_qubit_on(n_qubits: usize, gate: &DMatrix<Complex64>, qubit: usize) -> Result<Operator> {
    if n_qubits == 0 {
        return Err(Error::InvalidInput("register needs at least one qubit".into()));
    }
    if qubit >= n_qubits {
        return Err(Error::out_of_range("qubit index", qubit, format!("0..{n_qubits}")));
    }
    let id = DMatrix::<Complex64>::identity(2, 2);
    let mut mat = DMatrix::<Complex64>::identity(1, 1);
    for k in 0..n_qubits {
        mat = mat.kronecker(if k == qubit { gate } else { &id });
    }
    Operator::from_matrix(mat)
}

/// `exp(-i H t)` for Hermitian `H`, computed from its eigendecomposition.
pub fn hermitian_exp(h: &Operator, t: f64) -> Result<Operator> {
    let err = h.hermiticity_error();
    if err > HERMITIAN_TOL {
        return Err(Error::NotHermitian(err));
    }
    let dim = h.dim();
    if t == 0.0 {
        return Ok(Operator {
            mat: DMatrix::identity(dim, dim),
        });
    }
    let phase = |lambda: f64| Complex64::from_polar(1.0, -lambda * t);
    if h.is_diagonal() {
        let diag = DVector::from_iterator(dim, (0..dim).map(|i| phase(h.mat[(i, i)].re)));
        return Ok(Operator {
            mat: DMatrix::from_diagonal(&diag),
        });
    }
    let eig = SymmetricEigen::new(h.mat.clone());
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(dim, eig.eigenvalues.iter().map(|&l| phase(l)));
    let mut scaled = v.clone();
    for (c, p) in phases.iter().enumerate() {
        scaled.column_mut(c).apply(|z| *z *= *p);
    }
    Ok(Operator {
        mat: scaled * v.adjoint(),
    })
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: DVector<Complex64>,
}

impl PureState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        qubits_for_dim(amps.len())?;
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidInput(format!(
                "state norm^2 is {norm2}, expected 1"
            )));
        }
        Ok(Self {
            amps: DVector::from_vec(amps),
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if n_qubits == 0 || index >= dim {
            return Err(Error::out_of_range("basis index", index, format!("0..{dim}")));
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = ONE;
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            mat: &self.amps * self.amps.adjoint(),
            deviation: false,
        }
    }

    pub(crate) fn apply_unchecked(&self, u: &Operator) -> Self {
        Self {
            amps: &u.mat * &self.amps,
        }
    }
}

/// Density matrix, either a proper state (unit trace, positive) or a traceless
/// deviation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<Complex64>,
    deviation: bool,
}

impl DensityMatrix {
    /// Validating constructor for a proper state.
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        let op = Operator::from_matrix(mat)?;
        let herm = op.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidInput(format!("density trace is {tr}, expected 1")));
        }
        let min_eig = op.eigenvalues()?.first().copied().unwrap_or(0.0);
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidInput(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self {
            mat: op.mat,
            deviation: false,
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Operator::from_diagonal(diag)?.mat)
    }

    /// Wrap a Hermitian matrix without trace or positivity checks. Used for
    /// deviation matrices and intermediate sums.
    pub fn from_hermitian(mat: DMatrix<Complex64>) -> Result<Self> {
        let op = Operator::from_matrix(mat)?;
        let herm = op.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let deviation = op.trace().norm() <= STATE_TOL;
        Ok(Self {
            mat: op.mat,
            deviation,
        })
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<Complex64>) -> Self {
        Self {
            mat,
            deviation: false,
        }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            mat: DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
            deviation: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn is_deviation(&self) -> bool {
        self.deviation
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.mat[(index, index)].re
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.mat - self.mat.adjoint()))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        // Numerical propagation leaves round-off asymmetry; symmetrize first.
        let sym = (&self.mat + self.mat.adjoint()) * Complex64::new(0.5, 0.0);
        Operator::from_matrix(sym)?.eigenvalues()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mat: &self.mat * Complex64::new(factor, 0.0),
            deviation: self.deviation,
        }
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs(&(&self.mat - &other.mat))
    }

    pub(crate) fn apply_unchecked(&self, u: &Operator) -> Self {
        Self {
            mat: &u.mat * &self.mat * u.mat.adjoint(),
            deviation: self.deviation,
        }
    }
}

/// `ρ - (Tr ρ / d) I`.
pub fn deviation(rho: &DensityMatrix) -> DensityMatrix {
    let d = rho.dim();
    let shift = rho.trace() / d as f64;
    let mut mat = rho.mat.clone();
    for i in 0..d {
        mat[(i, i)] -= shift;
    }
    DensityMatrix {
        mat,
        deviation: true,
    }
}

/// `D(ρ, σ) = ||ρ - σ||_1 / 2`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let diff = &rho.mat - &sigma.mat;
    let sym = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
    let values = sym.symmetric_eigenvalues();
    Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
}

/// States that can be evolved by a unitary.
pub trait Evolve: Sized {
    fn dim(&self) -> usize;
    fn evolve_unchecked(&self, u: &Operator) -> Self;
}

impl Evolve for PureState {
    fn dim(&self) -> usize {
        PureState::dim(self)
    }
    fn evolve_unchecked(&self, u: &Operator) -> Self {
        self.apply_unchecked(u)
    }
}

impl Evolve for DensityMatrix {
    fn dim(&self) -> usize {
        DensityMatrix::dim(self)
    }
    fn evolve_unchecked(&self, u: &Operator) -> Self {
        self.apply_unchecked(u)
    }
}

/// `U|ψ>` or `UρU^dag`, rejecting operators that are not unitary to 1e-8.
pub fn apply_unitary<S: Evolve>(state: &S, u: &Operator) -> Result<S> {
    if state.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            actual: u.dim(),
        });
    }
    let err = u.unitarity_error();
    if err > APPLY_UNITARY_TOL {
        return Err(Error::NotUnitary(err));
    }
    Ok(state.evolve_unchecked(u))
}

/// Hadamard on every qubit.
pub fn hadamard_all(n_qubits: usize) -> Result<Operator> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = Operator::from_real_rows(2, &[s, s, s, -s])?;
    tensor(&vec![h; n_qubits])
}

/// Spectral distance `min_φ ||A - e^{iφ} B||` estimated with the phase that
/// aligns the traces. Exact (zero) when `A` and `B` agree up to a global phase.
pub fn distance_up_to_phase(a: &Operator, b: &Operator) -> Result<f64> {
    a.check_same_dim(b)?;
    let overlap = (b.mat.adjoint() * &a.mat).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    let diff = &a.mat - &b.mat * phase;
    Ok(Operator { mat: diff }.spectral_norm())
}
