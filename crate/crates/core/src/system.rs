//! Bipartite composite systems `H0 = H_S (x) 1 + 1 (x) H_R` and their
//! perturbed eigenbases.

use crate::ensembles::{sample_haar_column, sample_haar_unitary, RngSeed};
use crate::error::{mismatch, Error, Result};
use crate::numkernel::{
    hermitian_eigendecomposition, kron, ComplexMatrix, EigenSystem, EnergyBasis, HermitianOperator, StateVector,
    UnitaryMatrix,
};

/// Largest composite dimension accepted by [`build_composite`].
pub const MAX_COMPOSITE_DIM: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct SubsystemSpec {
    hamiltonian: HermitianOperator,
}

impl SubsystemSpec {
    pub fn new(hamiltonian: HermitianOperator) -> Self {
        Self { hamiltonian }
    }

    pub fn diagonal(levels: &[f64]) -> Result<Self> {
        Ok(Self::new(HermitianOperator::from_real_diagonal(levels)?))
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }
}

/// Fixed 0-based product index `j = l * m + k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductIndex {
    pub n: usize,
    pub m: usize,
}

impl ProductIndex {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    pub fn dim(&self) -> usize {
        self.n * self.m
    }

    pub fn flat(&self, l: usize, k: usize) -> Result<usize> {
        if l >= self.n {
            return Err(Error::IndexOutOfRange { index: l, bound: self.n });
        }
        if k >= self.m {
            return Err(Error::IndexOutOfRange { index: k, bound: self.m });
        }
        Ok(l * self.m + k)
    }

    pub fn split(&self, j: usize) -> Result<(usize, usize)> {
        if j >= self.dim() {
            return Err(Error::IndexOutOfRange { index: j, bound: self.dim() });
        }
        Ok((j / self.m, j % self.m))
    }
}

/// `j = l * m + k` with range checks on both indices.
pub fn index_map(l: usize, k: usize, n: usize, m: usize) -> Result<usize> {
    ProductIndex::new(n, m).flat(l, k)
}

/// Inverse of [`index_map`].
pub fn index_unmap(j: usize, n: usize, m: usize) -> Result<(usize, usize)> {
    ProductIndex::new(n, m).split(j)
}

/// Product eigenbasis of `H0` in index-map order: column `j = l*m + k` is
/// `|alpha_l> (x) |beta_k>` with energy `a_l + b_k`. Energies are generally
/// not sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductBasis {
    energies: Vec<f64>,
    vectors: UnitaryMatrix,
}

impl EnergyBasis for ProductBasis {
    fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn basis_vectors(&self) -> &UnitaryMatrix {
        &self.vectors
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeSystem {
    index: ProductIndex,
    h_s: HermitianOperator,
    h_r: HermitianOperator,
    sub_s: EigenSystem,
    sub_r: EigenSystem,
    h0: HermitianOperator,
    product: ProductBasis,
}

impl CompositeSystem {
    pub fn n(&self) -> usize {
        self.index.n
    }

    pub fn m(&self) -> usize {
        self.index.m
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn index(&self) -> ProductIndex {
        self.index
    }

    pub fn h0(&self) -> &HermitianOperator {
        &self.h0
    }

    pub fn h_s(&self) -> &HermitianOperator {
        &self.h_s
    }

    pub fn h_r(&self) -> &HermitianOperator {
        &self.h_r
    }

    /// Eigenvalues `a_l` of `H_S`, ascending.
    pub fn subsystem_s(&self) -> &EigenSystem {
        &self.sub_s
    }

    /// Eigenvalues `b_k` of `H_R`, ascending.
    pub fn subsystem_r(&self) -> &EigenSystem {
        &self.sub_r
    }

    pub fn product_basis(&self) -> &ProductBasis {
        &self.product
    }

    /// `|phi_j>` in the computational basis.
    pub fn product_state(&self, j: usize) -> Result<StateVector> {
        self.index.split(j)?;
        StateVector::normalized(self.product.vectors.column(j))
    }

    /// Product-basis energies sorted ascending.
    pub fn sorted_energies(&self) -> Vec<f64> {
        let mut e = self.product.energies.clone();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Maps an operator written in the product eigenbasis to the
    /// computational basis: `Phi h Phi^H`.
    pub fn from_product_basis(&self, h: &HermitianOperator) -> Result<HermitianOperator> {
        if h.dim() != self.dim() {
            return Err(mismatch("from_product_basis", self.dim(), h.dim()));
        }
        h.in_basis(&self.product.vectors.adjoint())
    }

    /// Representation of a computational-basis operator in the product eigenbasis.
    pub fn to_product_basis(&self, a: &HermitianOperator) -> Result<HermitianOperator> {
        if a.dim() != self.dim() {
            return Err(mismatch("to_product_basis", self.dim(), a.dim()));
        }
        a.in_basis(&self.product.vectors)
    }
}

/// Builds `H0 = H_S (x) 1_m + 1_n (x) H_R` and its exact product eigenbasis.
pub fn build_composite(sub_s: &SubsystemSpec, sub_r: &SubsystemSpec) -> Result<CompositeSystem> {
    let (n, m) = (sub_s.dim(), sub_r.dim());
    let dim = n.checked_mul(m).ok_or(Error::SizeOverflow { op: "build_composite" })?;
    if dim > MAX_COMPOSITE_DIM {
        return Err(Error::InvalidArgument(format!(
            "composite dimension {dim} exceeds budget {MAX_COMPOSITE_DIM}"
        )));
    }
    let id_n = ComplexMatrix::identity(n)?;
    let id_m = ComplexMatrix::identity(m)?;
    let h0 = kron(sub_s.hamiltonian().matrix(), &id_m)?.add(&kron(&id_n, sub_r.hamiltonian().matrix())?)?;
    let h0 = HermitianOperator::new(h0)?;

    let es = hermitian_eigendecomposition(sub_s.hamiltonian())?;
    let er = hermitian_eigendecomposition(sub_r.hamiltonian())?;
    let vectors = UnitaryMatrix::new(kron(es.vectors().matrix(), er.vectors().matrix())?)?;
    let mut energies = Vec::with_capacity(dim);
    for &a in es.values() {
        for &b in er.values() {
            energies.push(a + b);
        }
    }
    Ok(CompositeSystem {
        index: ProductIndex::new(n, m),
        h_s: sub_s.hamiltonian().clone(),
        h_r: sub_r.hamiltonian().clone(),
        sub_s: es,
        sub_r: er,
        h0,
        product: ProductBasis { energies, vectors },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationMode {
    ExplicitHamiltonian,
    HaarRotation,
}

/// A composite system after the perturbation has entangled its eigenbasis.
///
/// `overlap[i][j] = <phi_j | psi_i>`, so row `i` expands eigenstate `i` in
/// the product basis.
#[derive(Clone, Debug)]
pub struct PerturbedSystem<'a> {
    composite: &'a CompositeSystem,
    mode: PerturbationMode,
    hamiltonian: Option<HermitianOperator>,
    eigensystem: EigenSystem,
    overlap: UnitaryMatrix,
}

impl<'a> PerturbedSystem<'a> {
    pub fn composite(&self) -> &'a CompositeSystem {
        self.composite
    }

    pub fn mode(&self) -> PerturbationMode {
        self.mode
    }

    /// Total Hamiltonian; absent in Haar mode.
    pub fn hamiltonian(&self) -> Option<&HermitianOperator> {
        self.hamiltonian.as_ref()
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eigensystem
    }

    pub fn overlap(&self) -> &UnitaryMatrix {
        &self.overlap
    }

    pub fn eigenstate(&self, i: usize) -> Result<StateVector> {
        self.eigensystem.state(i)
    }
}

/// Diagonalizes `H = H0 + H_int` (both in the computational basis).
pub fn perturb_explicit<'a>(cs: &'a CompositeSystem, h_int: &HermitianOperator) -> Result<PerturbedSystem<'a>> {
    if h_int.dim() != cs.dim() {
        return Err(mismatch("perturb_explicit", cs.dim(), h_int.dim()));
    }
    let h = cs.h0.add(h_int)?;
    let eigensystem = hermitian_eigendecomposition(&h)?;
    // (Phi^H V)[j, i] = <phi_j|psi_i>
    let overlap = UnitaryMatrix::new(
        cs.product
            .vectors
            .matrix()
            .adjoint()
            .matmul(eigensystem.vectors().matrix())?
            .transpose(),
    )?;
    Ok(PerturbedSystem {
        composite: cs,
        mode: PerturbationMode::ExplicitHamiltonian,
        hamiltonian: Some(h),
        eigensystem,
        overlap,
    })
}

/// Idealized perturbation: `|psi_i> = sum_j p_ij |phi_j>` with `P` Haar
/// random; eigenvalues are the sorted `H0` energies.
pub fn perturb_haar(cs: &CompositeSystem, seed: RngSeed) -> Result<PerturbedSystem<'_>> {
    let u = sample_haar_unitary(cs.dim(), seed)?;
    let vectors = cs.product.vectors.matmul(&u)?;
    let eigensystem = EigenSystem::new(cs.sorted_energies(), vectors)?;
    Ok(PerturbedSystem {
        composite: cs,
        mode: PerturbationMode::HaarRotation,
        hamiltonian: None,
        eigensystem,
        overlap: u.transpose(),
    })
}

/// Eigenstate `i` of `perturb_haar(cs, seed)` without sampling the full unitary.
pub fn haar_eigenstate(cs: &CompositeSystem, i: usize, seed: RngSeed) -> Result<StateVector> {
    Ok(phi_times(cs, &haar_coefficients(cs, i, seed)?))
}

/// Row `i` of `P` for `perturb_haar(cs, seed)`: coefficients of
/// eigenstate `i` in the product basis.
pub fn haar_coefficients(cs: &CompositeSystem, i: usize, seed: RngSeed) -> Result<StateVector> {
    sample_haar_column(cs.dim(), i, seed)
}

fn phi_times(cs: &CompositeSystem, coeffs: &StateVector) -> StateVector {
    let amps = cs
        .product
        .vectors
        .matrix()
        .mul_vec(coeffs.amplitudes())
        .expect("coefficient length equals composite dimension");
    StateVector::normalized(amps).expect("unitary image of a unit vector")
}

/// Zeroes the entries `h_ij` of a product-basis operator with
/// `|E_i - E_j| > band`, restricting couplings to an energy shell.
pub fn band_limit(h: &HermitianOperator, energies: &[f64], band: f64) -> Result<HermitianOperator> {
    if h.dim() != energies.len() {
        return Err(mismatch("band_limit", energies.len(), h.dim()));
    }
    if !(band.is_finite() && band > 0.0) {
        return Err(Error::InvalidArgument(format!("band must be positive, got {band}")));
    }
    let n = h.dim();
    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        if (energies[i] - energies[j]).abs() <= band {
            h.get(i, j)
        } else {
            num_complex::Complex64::new(0.0, 0.0)
        }
    })?;
    HermitianOperator::new(m)
}
