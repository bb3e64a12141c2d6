//! Dense complex linear algebra: matrices, Hermitian and unitary wrappers,
//! state vectors, and the Hermitian eigendecomposition everything else
//! depends on.
//!
//! Storage is a dense contiguous `nalgebra::DMatrix`; callers only see
//! `(row, col)` accessors so nothing outside this module depends on the
//! storage orientation.

use std::ops::Index;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64 as C64;

use crate::error::{mismatch, Error, Result};
use crate::thermo::DensityMatrix;

/// Tolerance used when checking Hermiticity at construction, relative to
/// `1 + max|M_ij|`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Max-norm tolerance on `U^H U - I`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on `| ||psi|| - 1 |`.
pub const NORM_TOL: f64 = 1e-12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Dense complex matrix with at least one row and one column and only
/// finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        check_shape(rows, cols)?;
        Self::from_nalgebra(DMatrix::from_fn(rows, cols, &mut f))
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        check_shape(rows, cols)?;
        let expected = rows
            .checked_mul(cols)
            .ok_or(Error::SizeOverflow { op: "from_row_major" })?;
        if data.len() != expected {
            return Err(mismatch("from_row_major", expected, data.len()));
        }
        Self::from_nalgebra(DMatrix::from_row_slice(rows, cols, &data))
    }

    /// Convenience for real matrices given as nested rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArgument("ragged row lengths".into()));
        }
        let data = rows.iter().flatten().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_row_major(r, c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_shape(rows, cols)?;
        Ok(Self { inner: DMatrix::zeros(rows, cols) })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_shape(dim, dim)?;
        Ok(Self { inner: DMatrix::identity(dim, dim) })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO })
    }

    pub(crate) fn from_nalgebra(inner: DMatrix<C64>) -> Result<Self> {
        check_shape(inner.nrows(), inner.ncols())?;
        for j in 0..inner.ncols() {
            for i in 0..inner.nrows() {
                let z = inner[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { inner })
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.inner[(row, col)]
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        self.inner.column(col).iter().copied().collect()
    }

    pub fn row(&self, row: usize) -> Vec<C64> {
        self.inner.row(row).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { inner: self.inner.transpose() }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(mismatch(
                "matmul",
                format!("{} rows", self.cols()),
                format!("{} rows", rhs.rows()),
            ));
        }
        Ok(Self { inner: &self.inner * &rhs.inner })
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols() != v.len() {
            return Err(mismatch("mul_vec", self.cols(), v.len()));
        }
        let out = &self.inner * DVector::from_column_slice(v);
        Ok(out.iter().copied().collect())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.same_shape("add", rhs)?;
        Ok(Self { inner: &self.inner + &rhs.inner })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.same_shape("sub", rhs)?;
        Ok(Self { inner: &self.inner - &rhs.inner })
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { inner: &self.inner * factor }
    }

    pub fn trace(&self) -> C64 {
        let n = self.rows().min(self.cols());
        (0..n).map(|i| self.inner[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Largest entry modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        self.same_shape("max_abs_diff", rhs)?;
        Ok(self
            .inner
            .iter()
            .zip(rhs.inner.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm())))
    }

    fn same_shape(&self, op: &'static str, rhs: &Self) -> Result<()> {
        if self.rows() != rhs.rows() || self.cols() != rhs.cols() {
            return Err(mismatch(
                op,
                format!("{}x{}", self.rows(), self.cols()),
                format!("{}x{}", rhs.rows(), rhs.cols()),
            ));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.inner[idx]
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyDimension { rows, cols });
    }
    Ok(())
}

/// Square matrix equal to its own adjoint. Stored exactly symmetrized.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    /// Accepts `m` when `max|M - M^H| <= 1e-12 (1 + max|M|)` and stores
    /// `(M + M^H) / 2`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(mismatch("HermitianOperator", "square matrix", format!("{}x{}", m.rows(), m.cols())));
        }
        let adj = m.inner.adjoint();
        let deviation = m
            .inner
            .iter()
            .zip(adj.iter())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()));
        if !(deviation <= HERMITIAN_TOL * (1.0 + m.max_abs())) {
            return Err(Error::NotHermitian { deviation });
        }
        let inner = (&m.inner + adj) * C64::new(0.5, 0.0);
        Ok(Self { matrix: ComplexMatrix { inner } })
    }

    /// Symmetrizes without the deviation check, for products that are
    /// Hermitian in exact arithmetic.
    fn symmetrized(inner: DMatrix<C64>) -> Self {
        let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
        Self { matrix: ComplexMatrix { inner } }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Ok(Self { matrix: ComplexMatrix::identity(dim)? })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Ok(Self { matrix: ComplexMatrix::zeros(dim, dim)? })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        Ok(Self { matrix: ComplexMatrix::from_real_diagonal(diag)? })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix.get(row, col)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix.get(i, i).re).collect()
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        Ok(Self { matrix: self.matrix.add(&rhs.matrix)? })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        Ok(Self { matrix: self.matrix.sub(&rhs.matrix)? })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { matrix: self.matrix.scale(C64::new(factor, 0.0)) }
    }

    /// `A^k` by repeated multiplication, `k >= 1`.
    pub fn power(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Self::identity(self.dim());
        }
        let mut acc = self.matrix.inner.clone();
        for _ in 1..k {
            acc = &acc * &self.matrix.inner;
        }
        Ok(Self::symmetrized(acc))
    }

    /// Representation `V^H A V` in the orthonormal basis given by the columns of `V`.
    pub fn in_basis(&self, basis: &UnitaryMatrix) -> Result<Self> {
        if basis.dim() != self.dim() {
            return Err(mismatch("in_basis", self.dim(), basis.dim()));
        }
        Ok(Self::symmetrized(basis.matrix.inner.adjoint() * &self.matrix.inner * &basis.matrix.inner))
    }

    /// `<v|A|w>` without normalization checks.
    pub(crate) fn sandwich(&self, v: &[C64], w: &[C64]) -> C64 {
        let n = self.dim();
        let m = &self.matrix.inner;
        let mut acc = ZERO;
        for j in 0..n {
            let wj = w[j];
            if wj == ZERO {
                continue;
            }
            let mut col = ZERO;
            for i in 0..n {
                col += v[i].conj() * m[(i, j)];
            }
            acc += col * wj;
        }
        acc
    }

    /// `v^H A v` as a real number; the imaginary part is discarded.
    pub(crate) fn quadratic_form(&self, v: &[C64]) -> f64 {
        let n = self.dim();
        let m = &self.matrix.inner;
        let mut acc = 0.0;
        for i in 0..n {
            acc += m[(i, i)].re * v[i].norm_sqr();
            for j in (i + 1)..n {
                acc += 2.0 * (v[i].conj() * m[(i, j)] * v[j]).re;
            }
        }
        acc
    }
}

/// Square matrix with `max|U^H U - I| <= 1e-10`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
}

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(mismatch("UnitaryMatrix", "square matrix", format!("{}x{}", m.rows(), m.cols())));
        }
        let deviation = unitarity_deviation(&m);
        if !(deviation <= UNITARY_TOL) {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix: m })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Ok(Self { matrix: ComplexMatrix::identity(dim)? })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix.get(row, col)
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        self.matrix.column(col)
    }

    pub fn transpose(&self) -> Self {
        Self { matrix: self.matrix.transpose() }
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint() }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        Self::new(self.matrix.matmul(&rhs.matrix)?)
    }
}

/// `max|U^H U - I|`.
pub fn unitarity_deviation(m: &ComplexMatrix) -> f64 {
    let gram = m.inner.adjoint() * &m.inner;
    let mut dev = 0.0_f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { ONE } else { ZERO };
            dev = dev.max((gram[(i, j)] - target).norm());
        }
    }
    dev
}

/// Unit-norm complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::EmptyDimension { rows: 0, cols: 1 });
        }
        let norm = l2_norm(&amplitudes);
        if !((norm - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = l2_norm(&amplitudes);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm });
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(amplitudes)
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, bound: dim });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(mismatch("inner", self.dim(), other.dim()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

pub(crate) fn l2_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Ascending eigenvalues with an orthonormal eigenvector matrix (column `i`
/// belongs to `values[i]`).
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: UnitaryMatrix,
}

impl EigenSystem {
    pub fn new(values: Vec<f64>, vectors: UnitaryMatrix) -> Result<Self> {
        if values.len() != vectors.dim() {
            return Err(mismatch("EigenSystem", vectors.dim(), values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite eigenvalue".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("eigenvalues must be sorted ascending".into()));
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &UnitaryMatrix {
        &self.vectors
    }

    pub fn state(&self, index: usize) -> Result<StateVector> {
        if index >= self.dim() {
            return Err(Error::IndexOutOfRange { index, bound: self.dim() });
        }
        StateVector::normalized(self.vectors.column(index))
    }
}

/// Anything that pairs energies with an orthonormal set of basis vectors
/// (column `j` carries energy `energies()[j]`).
pub trait EnergyBasis {
    fn energies(&self) -> &[f64];
    fn basis_vectors(&self) -> &UnitaryMatrix;
}

impl EnergyBasis for EigenSystem {
    fn energies(&self) -> &[f64] {
        &self.values
    }

    fn basis_vectors(&self) -> &UnitaryMatrix {
        &self.vectors
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// The result satisfies `||H v_i - lambda_i v_i||_2 <= 1e-9 * dim * max|H|`
/// for every column; anything worse is reported as non-convergence.
pub fn hermitian_eigendecomposition(h: &HermitianOperator) -> Result<EigenSystem> {
    let dim = h.dim();
    let raw = h.matrix.inner.clone();
    let eig = SymmetricEigen::try_new(raw, f64::EPSILON, 0).ok_or(Error::EigenNonConvergence {
        dim,
        residual: f64::NAN,
    })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |i, j| eig.eigenvectors[(i, order[j])]);

    let hv = &h.matrix.inner * &vectors;
    let mut residual = 0.0_f64;
    for (j, &lambda) in values.iter().enumerate() {
        let r: f64 = (0..dim)
            .map(|i| (hv[(i, j)] - vectors[(i, j)] * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        residual = residual.max(r);
    }
    let bound = 1e-9 * dim as f64 * h.max_abs();
    if !(residual <= bound) {
        return Err(Error::EigenNonConvergence { dim, residual });
    }
    let vectors = UnitaryMatrix::new(ComplexMatrix::from_nalgebra(vectors)?)
        .map_err(|_| Error::EigenNonConvergence { dim, residual })?;
    EigenSystem::new(values, vectors)
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(h: &HermitianOperator) -> Vec<f64> {
    let mut values: Vec<f64> = h.matrix.inner.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Kronecker product: `(A (x) B)[i*p + k, j*q + l] = A[i, j] * B[k, l]` for
/// `B` of shape `p x q`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows().checked_mul(b.rows()).ok_or(Error::SizeOverflow { op: "kron" })?;
    let cols = a.cols().checked_mul(b.cols()).ok_or(Error::SizeOverflow { op: "kron" })?;
    // element count must also be addressable
    rows.checked_mul(cols).ok_or(Error::SizeOverflow { op: "kron" })?;
    let (p, q) = (b.rows(), b.cols());
    let mut out = DMatrix::zeros(rows, cols);
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            let aij = a.inner[(i, j)];
            for l in 0..q {
                for k in 0..p {
                    out[(i * p + k, j * q + l)] = aij * b.inner[(k, l)];
                }
            }
        }
    }
    Ok(ComplexMatrix { inner: out })
}

/// `sum_i |lambda_i|` for a Hermitian matrix.
pub fn trace_norm(h: &HermitianOperator) -> f64 {
    hermitian_eigenvalues(h).iter().map(|x| x.abs()).sum()
}

/// `(1/2) sum |eig(rho - sigma)|`, clamped to `[0, 1]`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(mismatch("trace_distance", rho.dim(), sigma.dim()));
    }
    let diff = rho.operator().sub(sigma.operator())?;
    Ok((0.5 * trace_norm(&diff)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(ComplexMatrix::zeros(0, 3), Err(Error::EmptyDimension { .. })));
        let err = ComplexMatrix::from_row_major(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]);
        assert!(matches!(err, Err(Error::NonFinite { row: 0, col: 1 })));
    }

    #[test]
    fn hermitian_construction_symmetrizes() {
        let m = ComplexMatrix::from_row_major(2, 2, vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0 + 1e-14), c(2.0, 0.0)])
            .unwrap();
        let h = HermitianOperator::new(m).unwrap();
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
        let bad = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(HermitianOperator::new(bad), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn unitary_rejects_non_unitary() {
        let m = ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 1.1]]).unwrap();
        assert!(matches!(UnitaryMatrix::new(m), Err(Error::NotUnitary { .. })));
        assert!(UnitaryMatrix::new(pauli_x()).is_ok());
    }

    #[test]
    fn state_vector_norm_check() {
        assert!(StateVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        let s = StateVector::normalized(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!((l2_norm(s.amplitudes()) - 1.0).abs() < 1e-15);
        assert!(StateVector::normalized(vec![ZERO; 3]).is_err());
    }

    #[test]
    fn eig_of_diagonal() {
        let h = HermitianOperator::from_real_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let es = hermitian_eigendecomposition(&h).unwrap();
        assert_eq!(es.values(), &[1.0, 2.0, 3.0]);
        // eigenvector for value 1 is e_1 up to phase
        assert!((es.vectors().get(1, 0).norm() - 1.0).abs() < 1e-14);
        assert!((es.vectors().get(0, 2).norm() - 1.0).abs() < 1e-14);
        assert!((es.vectors().get(2, 1).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_of_pauli_x() {
        let h = HermitianOperator::new(pauli_x()).unwrap();
        let es = hermitian_eigendecomposition(&h).unwrap();
        assert!((es.values()[0] + 1.0).abs() < 1e-14);
        assert!((es.values()[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = es.vectors().column(0);
        let v1 = es.vectors().column(1);
        // (1, -1)/sqrt2 and (1, 1)/sqrt2 up to a global phase
        assert!(((v0[0] + v0[1]).norm()) < 1e-14);
        assert!(((v0[0].norm()) - s).abs() < 1e-14);
        assert!(((v1[0] - v1[1]).norm()) < 1e-14);
    }

    #[test]
    fn eig_of_zero_matrix() {
        let h = HermitianOperator::zeros(4).unwrap();
        let es = hermitian_eigendecomposition(&h).unwrap();
        assert!(es.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kron_identities_and_shape() {
        let i2 = ComplexMatrix::identity(2).unwrap();
        assert_eq!(kron(&i2, &i2).unwrap(), ComplexMatrix::identity(4).unwrap());
        let a = ComplexMatrix::zeros(2, 3).unwrap();
        let b = ComplexMatrix::zeros(4, 5).unwrap();
        let k = kron(&a, &b).unwrap();
        assert_eq!((k.rows(), k.cols()), (8, 15));
    }

    #[test]
    fn kron_entry_matches_index_formula() {
        let x = pauli_x();
        let i2 = ComplexMatrix::identity(2).unwrap();
        let k = kron(&x, &i2).unwrap();
        // A[0,1] * B[1,1] sits at (0*2+1, 1*2+1)
        assert_eq!(k.get(1, 3), c(1.0, 0.0));
        assert_eq!(k.get(1, 2), ZERO);
        assert_eq!(k.get(2, 0), c(1.0, 0.0));
    }

    #[test]
    fn trace_distance_examples() {
        let zero = StateVector::basis(2, 0).unwrap();
        let one = StateVector::basis(2, 1).unwrap();
        let p0 = DensityMatrix::from_pure(&zero);
        let p1 = DensityMatrix::from_pure(&one);
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert_eq!(trace_distance(&p0, &p0).unwrap(), 0.0);
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-14);
        assert!((trace_distance(&p0, &mixed).unwrap() - 0.5).abs() < 1e-14);
        let p3 = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(trace_distance(&p0, &p3).is_err());
    }

    #[test]
    fn power_and_basis_change() {
        let h = HermitianOperator::new(pauli_x()).unwrap();
        assert_eq!(h.power(2).unwrap(), HermitianOperator::identity(2).unwrap());
        let es = hermitian_eigendecomposition(&h).unwrap();
        let d = h.in_basis(es.vectors()).unwrap();
        assert!((d.get(0, 0).re + 1.0).abs() < 1e-14);
        assert!(d.get(0, 1).norm() < 1e-14);
    }
}
