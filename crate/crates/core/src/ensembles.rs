//! Seeded random ensembles: Gaussian perturbation Hamiltonians and
//! Haar-distributed unitaries.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numkernel::{ComplexMatrix, HermitianOperator, StateVector, UnitaryMatrix, C64};

/// Master seed of a sample stream. Identical seeds give bit-identical streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.0)
    }

    pub fn derive(self, index: u64) -> RngSeed {
        derive_realization_seed(self, index)
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for realization `index` of a run keyed by `master`.
///
/// `index -> mix(master) + (index + 1) * GOLDEN` is a bijection on `u64`
/// (odd multiplier) and the splitmix64 finalizer is a bijection, so
/// distinct indices never collide under one master.
pub fn derive_realization_seed(master: RngSeed, realization_index: u64) -> RngSeed {
    let base = splitmix_finalize(master.0 ^ 0x6A09_E667_F3BC_C909);
    let z = base.wrapping_add(realization_index.wrapping_add(1).wrapping_mul(GOLDEN));
    RngSeed(splitmix_finalize(z))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SymmetryClass {
    /// Gaussian orthogonal ensemble.
    #[default]
    RealSymmetric,
    /// Gaussian unitary ensemble.
    ComplexHermitian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianEnsembleSpec {
    dim: usize,
    epsilon: f64,
    symmetry: SymmetryClass,
}

impl GaussianEnsembleSpec {
    pub fn new(dim: usize, epsilon: f64, symmetry: SymmetryClass) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyDimension { rows: 0, cols: 0 });
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be finite and positive, got {epsilon}")));
        }
        Ok(Self { dim, epsilon, symmetry })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }
}

/// Draws `H_int` from the GOE/GUE with off-diagonal variance `epsilon^2`.
///
/// Real-symmetric: off-diagonal `N(0, eps^2)`, diagonal `N(0, 2 eps^2)`.
/// Complex-Hermitian: off-diagonal real and imaginary parts `N(0, eps^2/2)`
/// each, diagonal `N(0, eps^2)`. Entries are drawn row by row over the upper
/// triangle, diagonal included.
pub fn sample_gaussian_perturbation(spec: &GaussianEnsembleSpec, seed: RngSeed) -> Result<HermitianOperator> {
    let n = spec.dim;
    let eps = spec.epsilon;
    let mut rng = seed.rng();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = match (spec.symmetry, i == j) {
                (SymmetryClass::RealSymmetric, true) => C64::new(eps * 2f64.sqrt() * normal(&mut rng), 0.0),
                (SymmetryClass::RealSymmetric, false) => C64::new(eps * normal(&mut rng), 0.0),
                (SymmetryClass::ComplexHermitian, true) => C64::new(eps * normal(&mut rng), 0.0),
                (SymmetryClass::ComplexHermitian, false) => {
                    let s = eps * std::f64::consts::FRAC_1_SQRT_2;
                    let re = normal(&mut rng);
                    let im = normal(&mut rng);
                    C64::new(s * re, s * im)
                }
            };
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianOperator::new(ComplexMatrix::from_nalgebra(m)?)
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard complex Gaussian with `E|z|^2 = 1`.
fn complex_normal(rng: &mut impl Rng) -> C64 {
    let re = normal(rng);
    let im = normal(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Column-major Ginibre matrix; column `j` consumes draws `j*dim .. (j+1)*dim`.
fn ginibre_columns(dim: usize, columns: usize, seed: RngSeed) -> DMatrix<C64> {
    let mut rng = seed.rng();
    let mut z = DMatrix::<C64>::zeros(dim, columns);
    for j in 0..columns {
        for i in 0..dim {
            z[(i, j)] = complex_normal(&mut rng);
        }
    }
    z
}

/// Haar-random unitary via QR of a Ginibre matrix, with the phases of
/// `diag(R)` pushed into `Q` so that the implied `R` has a positive diagonal.
pub fn sample_haar_unitary(dim: usize, seed: RngSeed) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(Error::EmptyDimension { rows: 0, cols: 0 });
    }
    let z = ginibre_columns(dim, dim, seed);
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        if norm == 0.0 {
            return Err(Error::Numerical("rank-deficient Ginibre sample".into()));
        }
        let phase = rjj / norm;
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::new(ComplexMatrix::from_nalgebra(q)?)
}

/// Column `column` of the unitary [`sample_haar_unitary`] would return for
/// the same `(dim, seed)`, without building the other columns.
///
/// The phase-corrected QR factor is the Gram-Schmidt orthonormalization of
/// the Ginibre columns, so column `c` only depends on the first `c + 1`
/// Gaussian columns. Agreement with the full sampler is up to rounding.
pub fn sample_haar_column(dim: usize, column: usize, seed: RngSeed) -> Result<StateVector> {
    if dim == 0 {
        return Err(Error::EmptyDimension { rows: 0, cols: 0 });
    }
    if column >= dim {
        return Err(Error::IndexOutOfRange { index: column, bound: dim });
    }
    let z = ginibre_columns(dim, column + 1, seed);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(column + 1);
    for j in 0..=column {
        let mut v: Vec<C64> = z.column(j).iter().copied().collect();
        // classical Gram-Schmidt, applied twice
        for _ in 0..2 {
            for q in &basis {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Numerical("rank-deficient Ginibre sample".into()));
        }
        for x in &mut v {
            *x /= norm;
        }
        basis.push(v);
    }
    StateVector::normalized(basis.pop().expect("basis has column + 1 entries"))
}
