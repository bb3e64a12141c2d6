//! Subsystem thermodynamics: reduced states, Gibbs states, canonical
//! averages, effective temperatures and entanglement entropies.

use nalgebra::DMatrix;

use crate::error::{mismatch, Error, Result};
use crate::numkernel::{
    hermitian_eigendecomposition, ComplexMatrix, HermitianOperator, StateVector, C64,
};

/// Trace and positivity tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-10;

/// Hermitian, positive semidefinite, unit-trace matrix. Eigenvalues are
/// kept alongside the matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
    spectrum: Vec<f64>,
}

impl DensityMatrix {
    /// Validates trace and positivity. Eigenvalues in `[-1e-10, 0)` are
    /// clipped to zero and the matrix is rescaled to unit trace.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let trace = op.matrix().trace().re;
        if !((trace - 1.0).abs() <= DENSITY_TOL) {
            return Err(Error::InvalidDensity(format!("trace {trace} != 1")));
        }
        let es = hermitian_eigendecomposition(&op)?;
        let min = es.values()[0];
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        if min >= 0.0 {
            return Ok(Self { op, spectrum: es.values().to_vec() });
        }
        let clipped: Vec<f64> = es.values().iter().map(|&x| x.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let spectrum: Vec<f64> = clipped.iter().map(|x| x / total).collect();
        let op = reassemble(es.vectors().matrix(), &spectrum)?;
        Ok(Self { op, spectrum })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        let n = a.len();
        let m = DMatrix::from_fn(n, n, |i, j| a[i] * a[j].conj());
        let op = HermitianOperator::new(ComplexMatrix::from_nalgebra(m).expect("finite amplitudes"))
            .expect("outer product is Hermitian");
        let mut spectrum = vec![0.0; n];
        spectrum[n - 1] = 1.0;
        Self { op, spectrum }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let op = HermitianOperator::identity(dim)?.scale(1.0 / dim as f64);
        Ok(Self { op, spectrum: vec![1.0 / dim as f64; dim] })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    /// Eigenvalues, ascending.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        let m = self.op.matrix();
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += m.get(i, j).norm_sqr();
            }
        }
        acc
    }
}

fn reassemble(vectors: &ComplexMatrix, weights: &[f64]) -> Result<HermitianOperator> {
    let n = weights.len();
    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| vectors.get(i, k) * weights[k] * vectors.get(j, k).conj())
            .sum()
    })?;
    HermitianOperator::new(m)
}

/// Which factor to keep in a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    S,
    R,
}

fn check_factorization(op: &'static str, psi: &StateVector, n: usize, m: usize) -> Result<()> {
    match n.checked_mul(m) {
        Some(d) if d == psi.dim() && n > 0 && m > 0 => Ok(()),
        _ => Err(mismatch(op, format!("{n}*{m}"), psi.dim())),
    }
}

/// Reduced state of `|psi><psi|` with index convention `j = l*m + k`.
pub fn partial_trace(psi: &StateVector, n: usize, m: usize, keep: Keep) -> Result<DensityMatrix> {
    check_factorization("partial_trace", psi, n, m)?;
    let a = psi.amplitudes();
    let reduced = match keep {
        Keep::S => ComplexMatrix::from_fn(n, n, |l, lp| {
            (0..m).map(|k| a[l * m + k] * a[lp * m + k].conj()).sum()
        })?,
        Keep::R => ComplexMatrix::from_fn(m, m, |k, kp| {
            (0..n).map(|l| a[l * m + k] * a[l * m + kp].conj()).sum()
        })?,
    };
    DensityMatrix::new(HermitianOperator::new(reduced)?)
}

/// Schmidt coefficients of `psi` across the `n x m` cut, descending.
pub fn schmidt_coefficients(psi: &StateVector, n: usize, m: usize) -> Result<Vec<f64>> {
    let keep = if n <= m { Keep::S } else { Keep::R };
    let rho = partial_trace(psi, n, m, keep)?;
    let mut s: Vec<f64> = rho.spectrum().iter().rev().map(|&x| x.max(0.0).sqrt()).collect();
    s.truncate(n.min(m));
    Ok(s)
}

/// `<psi| M (x) 1_R |psi> = sum_{l,l',k} conj(psi_{lk}) M_{ll'} psi_{l'k}`.
pub fn subsystem_expectation(psi: &StateVector, op_s: &HermitianOperator, n: usize, m: usize) -> Result<f64> {
    check_factorization("subsystem_expectation", psi, n, m)?;
    if op_s.dim() != n {
        return Err(mismatch("subsystem_expectation", n, op_s.dim()));
    }
    let a = psi.amplitudes();
    let mut acc = C64::new(0.0, 0.0);
    for l in 0..n {
        for lp in 0..n {
            let mll = op_s.get(l, lp);
            for k in 0..m {
                acc += a[l * m + k].conj() * mll * a[lp * m + k];
            }
        }
    }
    Ok(acc.re)
}

/// Boltzmann weights `exp(-beta E_i) / Z`, shifted so the largest exponent is 0.
pub fn gibbs_weights(energies: &[f64], beta: f64) -> Vec<f64> {
    let top = energies
        .iter()
        .map(|&e| -beta * e)
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = energies.iter().map(|&e| (-beta * e - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Canonical energy `sum_i E_i exp(-beta E_i) / Z`.
pub fn thermal_energy(energies: &[f64], beta: f64) -> f64 {
    gibbs_weights(energies, beta)
        .iter()
        .zip(energies)
        .map(|(w, e)| w * e)
        .sum()
}

/// `exp(-beta H) / Tr exp(-beta H)`, built in the eigenbasis of `H`.
pub fn gibbs_state(h: &HermitianOperator, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be finite, got {beta}")));
    }
    let es = hermitian_eigendecomposition(h)?;
    let w = gibbs_weights(es.values(), beta);
    DensityMatrix::new(reassemble(es.vectors().matrix(), &w)?)
}

/// `Tr(M exp(-beta H)) / Z`.
pub fn canonical_average(op: &HermitianOperator, h: &HermitianOperator, beta: f64) -> Result<f64> {
    if op.dim() != h.dim() {
        return Err(mismatch("canonical_average", h.dim(), op.dim()));
    }
    let rho = gibbs_state(h, beta)?;
    Ok(trace_product(op, rho.operator()))
}

/// `Re Tr(A B)` for Hermitian `A`, `B` of equal size.
pub(crate) fn trace_product(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a.get(i, j) * b.get(j, i)).re;
        }
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaBracket {
    pub lo: f64,
    pub hi: f64,
}

impl BetaBracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("invalid beta bracket [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }
}

impl Default for BetaBracket {
    fn default() -> Self {
        Self { lo: -50.0, hi: 50.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaFit {
    pub beta: f64,
    /// Trace distance between the target state and the fitted Gibbs state.
    pub residual: f64,
    pub iterations: usize,
}

const BETA_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

/// Bisection for the `beta` whose canonical energy over `energies` equals
/// `target`. Returns `(beta, iterations)`.
pub fn solve_beta_for_energy(energies: &[f64], target: f64, bracket: BetaBracket) -> Result<(f64, usize)> {
    let energy_at_lo = thermal_energy(energies, bracket.lo);
    let energy_at_hi = thermal_energy(energies, bracket.hi);
    if !(target < energy_at_lo && target > energy_at_hi) {
        return Err(Error::BetaOutOfRange {
            target,
            lo: bracket.lo,
            hi: bracket.hi,
            energy_at_lo,
            energy_at_hi,
        });
    }
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let mut iterations = 0;
    while hi - lo > BETA_TOL && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        // energy decreases with beta
        if thermal_energy(energies, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok((0.5 * (lo + hi), iterations))
}

/// Effective inverse temperature of `rho` with respect to `H`, matched on
/// energy `Tr(rho H)`.
pub fn fit_beta(rho: &DensityMatrix, h: &HermitianOperator, bracket: BetaBracket) -> Result<BetaFit> {
    if rho.dim() != h.dim() {
        return Err(mismatch("fit_beta", h.dim(), rho.dim()));
    }
    let target = trace_product(rho.operator(), h);
    let es = hermitian_eigendecomposition(h)?;
    let (beta, iterations) = solve_beta_for_energy(es.values(), target, bracket)?;
    let gibbs = DensityMatrix::new(reassemble(es.vectors().matrix(), &gibbs_weights(es.values(), beta))?)?;
    let residual = crate::numkernel::trace_distance(rho, &gibbs)?;
    Ok(BetaFit { beta, residual, iterations })
}

/// `-sum lambda ln lambda`, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let s: f64 = rho
        .spectrum()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum();
    s.max(0.0)
}

/// `-ln Tr rho^2`.
pub fn renyi2_entropy(rho: &DensityMatrix) -> f64 {
    (-rho.purity().ln()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_haar_column, RngSeed};
    use crate::numkernel::trace_distance;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> StateVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::new(vec![c(s), c(0.0), c(0.0), c(s)]).unwrap()
    }

    fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
        a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
    }

    #[test]
    fn density_validation() {
        let bad_trace = HermitianOperator::from_real_diagonal(&[0.5, 0.4]).unwrap();
        assert!(DensityMatrix::new(bad_trace).is_err());
        let negative = HermitianOperator::from_real_diagonal(&[1.1, -0.1]).unwrap();
        assert!(DensityMatrix::new(negative).is_err());
        let tiny = HermitianOperator::from_real_diagonal(&[1.0 + 5e-11, -5e-11]).unwrap();
        let rho = DensityMatrix::new(tiny).unwrap();
        assert!(rho.spectrum().iter().all(|&x| x >= 0.0));
        assert!((rho.operator().matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_state_reduces_to_pure() {
        let alpha = StateVector::normalized(vec![c(1.0), C64::new(0.0, 2.0)]).unwrap();
        let beta = StateVector::normalized(vec![c(1.0), c(-1.0), c(0.5)]).unwrap();
        let psi = StateVector::new(kron_vec(alpha.amplitudes(), beta.amplitudes())).unwrap();
        let rho = partial_trace(&psi, 2, 3, Keep::S).unwrap();
        let expected = DensityMatrix::from_pure(&alpha);
        assert!(rho.operator().matrix().max_abs_diff(expected.operator().matrix()).unwrap() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let rho = partial_trace(&bell(), 2, 2, Keep::S).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(rho.operator().matrix().max_abs_diff(mixed.operator().matrix()).unwrap() < 1e-15);
        assert!(partial_trace(&bell(), 3, 2, Keep::S).is_err());
    }

    #[test]
    fn partial_trace_matches_index_summation() {
        let (n, m) = (3, 5);
        let psi = sample_haar_column(n * m, 0, RngSeed(21)).unwrap();
        let a = psi.amplitudes();
        let rho = partial_trace(&psi, n, m, Keep::S).unwrap();
        // outer product first, then sum the R diagonal
        let full: Vec<Vec<C64>> = (0..n * m).map(|x| (0..n * m).map(|y| a[x] * a[y].conj()).collect()).collect();
        for l in 0..n {
            for lp in 0..n {
                let mut acc = c(0.0);
                for k in 0..m {
                    acc += full[l * m + k][lp * m + k];
                }
                assert!((rho.operator().get(l, lp) - acc).norm() <= 1e-12);
            }
        }
        let rho_r = partial_trace(&psi, n, m, Keep::R).unwrap();
        for k in 0..m {
            for kp in 0..m {
                let acc: C64 = (0..n).map(|l| full[l * m + k][l * m + kp]).sum();
                assert!((rho_r.operator().get(k, kp) - acc).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn subsystem_expectation_examples() {
        let id = HermitianOperator::identity(2).unwrap();
        assert!((subsystem_expectation(&bell(), &id, 2, 2).unwrap() - 1.0).abs() < 1e-15);
        let sz = HermitianOperator::from_real_diagonal(&[1.0, -1.0]).unwrap();
        assert!(subsystem_expectation(&bell(), &sz, 2, 2).unwrap().abs() < 1e-15);
        assert!(subsystem_expectation(&bell(), &HermitianOperator::identity(3).unwrap(), 2, 2).is_err());
    }

    #[test]
    fn gibbs_examples() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let inf_t = gibbs_state(&h, 0.0).unwrap();
        assert!((inf_t.operator().get(0, 0).re - 0.5).abs() < 1e-15);
        let cold = gibbs_state(&h, 1e6).unwrap();
        assert!((cold.operator().get(0, 0).re - 1.0).abs() < 1e-12);
        assert!(cold.operator().get(1, 1).re.abs() < 1e-12);
        let warm = gibbs_state(&h, 1.0).unwrap();
        // direct partition function: Z = 1 + e^{-1}
        let p0 = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((warm.operator().get(0, 0).re - p0).abs() < 1e-12);
        assert!((p0 - 0.731059).abs() < 1e-6);
        assert!(gibbs_state(&h, f64::NAN).is_err());
    }

    #[test]
    fn gibbs_normalization_over_wide_beta() {
        let levels: Vec<f64> = (0..9).map(|i| -10.0 + 2.5 * i as f64).collect();
        let h = HermitianOperator::from_real_diagonal(&levels).unwrap();
        for beta in [-50.0, 0.0, 50.0] {
            let rho = gibbs_state(&h, beta).unwrap();
            assert!((rho.operator().matrix().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_examples() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let id = HermitianOperator::identity(2).unwrap();
        assert!((canonical_average(&id, &h, 3.0).unwrap() - 1.0).abs() < 1e-14);
        let m = HermitianOperator::from_real_diagonal(&[2.0, 4.0]).unwrap();
        assert!((canonical_average(&m, &h, 0.0).unwrap() - 3.0).abs() < 1e-14);
        let e = canonical_average(&h, &h, 1.0).unwrap();
        let direct = (-1.0f64).exp() / (1.0 + (-1.0f64).exp());
        assert!((e - direct).abs() < 1e-12);
        assert!((direct - 0.268941).abs() < 1e-6);
        assert!(canonical_average(&id, &HermitianOperator::identity(3).unwrap(), 1.0).is_err());
    }

    #[test]
    fn beta_fit_examples() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        let fit = fit_beta(&mixed, &h, BetaBracket::default()).unwrap();
        assert!(fit.beta.abs() <= 1e-6);
        let target = gibbs_state(&h, 2.0).unwrap();
        let fit = fit_beta(&target, &h, BetaBracket::default()).unwrap();
        assert!((fit.beta - 2.0).abs() <= 1e-6);
        assert!(fit.residual <= 1e-9);
        let ground = DensityMatrix::from_pure(&StateVector::basis(2, 0).unwrap());
        match fit_beta(&ground, &h, BetaBracket::default()) {
            Err(Error::BetaOutOfRange { energy_at_lo, energy_at_hi, .. }) => {
                assert!(energy_at_lo > energy_at_hi);
            }
            other => panic!("expected bracket error, got {other:?}"),
        }
        assert!(BetaBracket::new(1.0, -1.0).is_err());
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::from_pure(&StateVector::basis(3, 1).unwrap());
        assert_eq!(von_neumann_entropy(&pure), 0.0);
        assert!(renyi2_entropy(&pure).abs() < 1e-15);
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((von_neumann_entropy(&half) - 2f64.ln()).abs() < 1e-15);
        assert!((renyi2_entropy(&half) - 2f64.ln()).abs() < 1e-15);
        let fifth = DensityMatrix::maximally_mixed(5).unwrap();
        assert!((von_neumann_entropy(&fifth) - 5f64.ln()).abs() < 1e-14);
        let rho = DensityMatrix::new(HermitianOperator::from_real_diagonal(&[0.75, 0.25]).unwrap()).unwrap();
        // purity 0.75^2 + 0.25^2 = 0.625
        assert!((renyi2_entropy(&rho) - 0.470004).abs() < 1e-6);
        assert!((renyi2_entropy(&rho) + 0.625f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn schmidt_of_bell_and_product() {
        let s = schmidt_coefficients(&bell(), 2, 2).unwrap();
        assert!(s.iter().all(|x| (x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12));
        let p = StateVector::basis(6, 4).unwrap();
        let s = schmidt_coefficients(&p, 2, 3).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12 && s[1].abs() < 1e-6);
    }

    #[test]
    fn trace_distance_to_self_is_zero_for_reductions() {
        let psi = sample_haar_column(8, 0, RngSeed(4)).unwrap();
        let rho = partial_trace(&psi, 2, 4, Keep::S).unwrap();
        assert!(trace_distance(&rho, &rho).unwrap() < 1e-15);
    }
}
