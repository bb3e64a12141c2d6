//! Eigenstate statistics: expectation values, microcanonical and ensemble
//! averages, the variance bound, time series with their infinite-time
//! (diagonal ensemble) limit, and binned matrix-element diagnostics.

use rayon::prelude::*;

use crate::ensembles::{sample_gaussian_perturbation, GaussianEnsembleSpec, RngSeed};
use crate::error::{mismatch, Error, Result};
use crate::numkernel::{EigenSystem, EnergyBasis, HermitianOperator, StateVector, C64, NORM_TOL};
use crate::system::{band_limit, haar_coefficients, perturb_explicit, CompositeSystem};
use crate::thermo::{gibbs_weights, solve_beta_for_energy, BetaBracket};

/// Closed energy window `[center - width/2, center + width/2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyWindow {
    center: f64,
    width: f64,
}

impl EnergyWindow {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !center.is_finite() || !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid energy window E={center}, dE={width}")));
        }
        Ok(Self { center, width })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn contains(&self, e: f64) -> bool {
        (e - self.center).abs() <= 0.5 * self.width
    }

    /// Indices of `energies` inside the window; errors when none are.
    pub fn select(&self, energies: &[f64]) -> Result<Vec<usize>> {
        let idx: Vec<usize> = (0..energies.len()).filter(|&j| self.contains(energies[j])).collect();
        if idx.is_empty() {
            let nearest = energies
                .iter()
                .copied()
                .min_by(|a, b| (a - self.center).abs().total_cmp(&(b - self.center).abs()))
                .unwrap_or(f64::NAN);
            return Err(Error::EmptyWindow { center: self.center, width: self.width, nearest });
        }
        Ok(idx)
    }
}

fn window_indices(energies: &[f64], window: Option<&EnergyWindow>) -> Result<Vec<usize>> {
    match window {
        Some(w) => w.select(energies),
        None => Ok((0..energies.len()).collect()),
    }
}

/// Monte Carlo summary over realizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleStats {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `sqrt(variance / count)`.
    pub standard_error: f64,
    /// Standard error of the variance estimate, `sqrt((m4 - m2^2) / count)`.
    pub variance_standard_error: f64,
}

impl EnsembleStats {
    /// Sequential two-pass reduction in sample order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let r = samples.len();
        if r < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 realizations, got {r}")));
        }
        let rf = r as f64;
        let mean = samples.iter().sum::<f64>() / rf;
        let (mut m2, mut m4) = (0.0, 0.0);
        for &x in samples {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m4 += d2 * d2;
        }
        let variance = m2 / (rf - 1.0);
        let (m2, m4) = (m2 / rf, m4 / rf);
        Ok(Self {
            count: r,
            mean,
            variance,
            standard_error: (variance / rf).sqrt(),
            variance_standard_error: ((m4 - m2 * m2).max(0.0) / rf).sqrt(),
        })
    }
}

/// `<psi|A|psi>`; fails if the imaginary residue exceeds `1e-10 max|A|`.
pub fn eigenstate_expectation(psi: &StateVector, op: &HermitianOperator) -> Result<f64> {
    if psi.dim() != op.dim() {
        return Err(mismatch("eigenstate_expectation", op.dim(), psi.dim()));
    }
    let a = psi.amplitudes();
    let z = op.sandwich(a, a);
    if z.im.abs() > 1e-10 * op.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!("expectation has imaginary part {:e}", z.im)));
    }
    Ok(z.re)
}

/// Uniform average of `<phi_j|A|phi_j>` over basis states in the window
/// (the whole spectrum when `window` is `None`).
pub fn microcanonical_average(
    op: &HermitianOperator,
    basis: &impl EnergyBasis,
    window: Option<&EnergyWindow>,
) -> Result<f64> {
    let vectors = basis.basis_vectors();
    if vectors.dim() != op.dim() {
        return Err(mismatch("microcanonical_average", vectors.dim(), op.dim()));
    }
    let idx = window_indices(basis.energies(), window)?;
    let sum: f64 = idx.iter().map(|&j| op.quadratic_form(&vectors.column(j))).sum();
    Ok(sum / idx.len() as f64)
}

/// `(2/N) <A^2>_micro`.
pub fn variance_bound(
    op: &HermitianOperator,
    basis: &impl EnergyBasis,
    window: Option<&EnergyWindow>,
    dim: usize,
) -> Result<f64> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let sq = op.power(2)?;
    Ok(2.0 / dim as f64 * microcanonical_average(&sq, basis, window)?)
}

fn is_diagonal(op: &HermitianOperator) -> bool {
    let n = op.dim();
    (0..n).all(|i| (0..n).all(|j| i == j || op.get(i, j) == C64::new(0.0, 0.0)))
}

/// `<psi_i|A|psi_i>` for `realizations` independent Haar rotations, seeded
/// by `seed.derive(r)`. Output is in realization order.
pub fn ensemble_samples(
    op: &HermitianOperator,
    cs: &CompositeSystem,
    eigenstate: usize,
    realizations: usize,
    seed: RngSeed,
) -> Result<Vec<f64>> {
    let in_product = cs.to_product_basis(op)?;
    if eigenstate >= cs.dim() {
        return Err(Error::IndexOutOfRange { index: eigenstate, bound: cs.dim() });
    }
    let diag = is_diagonal(&in_product).then(|| in_product.diagonal());
    (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let p = haar_coefficients(cs, eigenstate, seed.derive(r))?;
            Ok(match &diag {
                Some(d) => p.amplitudes().iter().zip(d).map(|(c, a)| a * c.norm_sqr()).sum(),
                None => in_product.quadratic_form(p.amplitudes()),
            })
        })
        .collect()
}

/// Mean and variance of `<psi_i|A|psi_i>` over Haar realizations.
pub fn ensemble_average(
    op: &HermitianOperator,
    cs: &CompositeSystem,
    eigenstate: usize,
    realizations: usize,
    seed: RngSeed,
) -> Result<EnsembleStats> {
    if realizations < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 realizations, got {realizations}")));
    }
    EnsembleStats::from_samples(&ensemble_samples(op, cs, eigenstate, realizations, seed)?)
}

/// Explicit-Hamiltonian counterpart of [`ensemble_samples`]: each
/// realization draws `H_int` in the product basis (optionally restricted to
/// `|E_i - E_j| <= band`), diagonalizes `H0 + H_int` and evaluates
/// eigenstate `eigenstate`.
pub fn explicit_ensemble_samples(
    op: &HermitianOperator,
    cs: &CompositeSystem,
    eigenstate: usize,
    realizations: usize,
    spec: &GaussianEnsembleSpec,
    band: Option<f64>,
    seed: RngSeed,
) -> Result<Vec<f64>> {
    if spec.dim() != cs.dim() {
        return Err(mismatch("explicit_ensemble_samples", cs.dim(), spec.dim()));
    }
    if eigenstate >= cs.dim() {
        return Err(Error::IndexOutOfRange { index: eigenstate, bound: cs.dim() });
    }
    (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let h = sample_gaussian_perturbation(spec, seed.derive(r))?;
            let h = match band {
                Some(b) => band_limit(&h, cs.product_basis().energies(), b)?,
                None => h,
            };
            let ps = perturb_explicit(cs, &cs.from_product_basis(&h)?)?;
            eigenstate_expectation(&ps.eigenstate(eigenstate)?, op)
        })
        .collect()
}

/// Expansion coefficients `C_i` of an initial state in a perturbed eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialState {
    coefficients: Vec<C64>,
}

impl InitialState {
    pub fn new(coefficients: Vec<C64>) -> Result<Self> {
        let norm: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if coefficients.is_empty() || !((norm - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { coefficients })
    }

    /// `C_i = <psi_i|Psi>`.
    pub fn from_state(state: &StateVector, es: &EigenSystem) -> Result<Self> {
        if state.dim() != es.dim() {
            return Err(mismatch("InitialState::from_state", es.dim(), state.dim()));
        }
        let v = es.vectors();
        let a = state.amplitudes();
        let coefficients: Vec<C64> = (0..es.dim())
            .map(|i| (0..es.dim()).map(|k| v.get(k, i).conj() * a[k]).sum())
            .collect();
        let norm: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        Self::new(coefficients.into_iter().map(|c| c / norm).collect())
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }
}

fn check_dynamics(op: &'static str, c: &InitialState, es: &EigenSystem, a: &HermitianOperator) -> Result<()> {
    if c.dim() != es.dim() {
        return Err(mismatch(op, es.dim(), c.dim()));
    }
    if a.dim() != es.dim() {
        return Err(mismatch(op, es.dim(), a.dim()));
    }
    Ok(())
}

/// `A_t = sum_ij conj(C_i) C_j e^{i(E_i - E_j)t} A_ij` with complex values
/// kept, for inspecting the imaginary residue.
pub fn expectation_time_series_complex(
    c: &InitialState,
    es: &EigenSystem,
    op: &HermitianOperator,
    times: &[f64],
) -> Result<Vec<C64>> {
    check_dynamics("expectation_time_series", c, es, op)?;
    let n = es.dim();
    let rotated = op.in_basis(es.vectors())?;
    // row-major copy for the inner loop
    let dense: Vec<C64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| rotated.get(i, j)).collect();
    let energies = es.values();
    let coeffs = c.coefficients();
    Ok(times
        .par_iter()
        .map_init(
            || vec![C64::new(0.0, 0.0); n],
            |z, &t| {
                for i in 0..n {
                    z[i] = coeffs[i] * C64::from_polar(1.0, -energies[i] * t);
                }
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..n {
                    let row = &dense[i * n..(i + 1) * n];
                    let mut s = C64::new(0.0, 0.0);
                    for j in 0..n {
                        s += row[j] * z[j];
                    }
                    acc += z[i].conj() * s;
                }
                acc
            },
        )
        .collect())
}

/// Real expectation-value time series (hbar = 1). Fails if any point has
/// an imaginary residue above `1e-9 max|A|`.
pub fn expectation_time_series(
    c: &InitialState,
    es: &EigenSystem,
    op: &HermitianOperator,
    times: &[f64],
) -> Result<Vec<f64>> {
    let raw = expectation_time_series_complex(c, es, op, times)?;
    let tol = 1e-9 * op.max_abs().max(f64::MIN_POSITIVE);
    if let Some(bad) = raw.iter().find(|z| z.im.abs() > tol) {
        return Err(Error::Numerical(format!("time series imaginary residue {:e}", bad.im)));
    }
    Ok(raw.into_iter().map(|z| z.re).collect())
}

/// Groups of indices whose sorted energies differ by at most
/// `1e-10 * max|E|` from their neighbour.
pub fn degenerate_groups(energies: &[f64]) -> Vec<Vec<usize>> {
    let scale = energies.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    let tol = 1e-10 * scale;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &e) in energies.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (e - energies[*g.last().unwrap()]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Infinite-time average `sum_g <Psi|P_g A P_g|Psi>` over degenerate groups
/// `g`; reduces to `sum_i |C_i|^2 A_ii` for a nondegenerate spectrum.
pub fn diagonal_ensemble_average(c: &InitialState, es: &EigenSystem, op: &HermitianOperator) -> Result<f64> {
    check_dynamics("diagonal_ensemble_average", c, es, op)?;
    let v = es.vectors();
    let coeffs = c.coefficients();
    let mut total = 0.0;
    for group in degenerate_groups(es.values()) {
        let cols: Vec<Vec<C64>> = group.iter().map(|&i| v.column(i)).collect();
        for (a, &i) in group.iter().enumerate() {
            for (b, &j) in group.iter().enumerate() {
                total += (coeffs[i].conj() * coeffs[j] * op.sandwich(&cols[a], &cols[b])).re;
            }
        }
    }
    Ok(total)
}

/// Trapezoidal `(1/T) int A_t dt` over the sampled span.
pub fn numeric_time_average(series: &[f64], times: &[f64]) -> Result<f64> {
    if series.len() != times.len() {
        return Err(mismatch("numeric_time_average", times.len(), series.len()));
    }
    if times.len() < 2 {
        return Err(Error::InvalidArgument("need at least two time points".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    let integral: f64 = times
        .windows(2)
        .zip(series.windows(2))
        .map(|(t, a)| 0.5 * (t[1] - t[0]) * (a[0] + a[1]))
        .sum();
    Ok(integral / (times[times.len() - 1] - times[0]))
}

/// Bins with fewer samples than this are flagged.
pub const MIN_BIN_COUNT: usize = 5;

/// `ceil(sqrt(N))`.
pub fn default_bin_count(dim: usize) -> usize {
    (dim as f64).sqrt().ceil() as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyBinStats {
    pub center: f64,
    pub count: usize,
    /// Mean eigenvalue of the levels in the bin (`center` when empty).
    pub mean_energy: f64,
    /// Estimate of the smooth diagonal function at `mean_energy`.
    pub mean_diagonal: f64,
    pub diagonal_variance: f64,
    /// Variance of `A_ii` about a linear fit in `E_i` within the bin, i.e.
    /// the eigenstate-to-eigenstate fluctuation with the smooth trend removed.
    pub fluctuation_variance: f64,
    /// `ln(count * W / bin_width)` with `W` the spectral width; `None` for
    /// empty bins.
    pub entropy: Option<f64>,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OffDiagonalBin {
    pub energy_center: f64,
    pub omega_center: f64,
    pub count: usize,
    /// Mean `|A_ij|^2`, estimating `exp(-S(E)) |f(E, omega)|^2`.
    pub mean_sq: f64,
    pub flagged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualStats {
    pub count: usize,
    /// Real part of the mean normalized fluctuation.
    pub mean: f64,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EthDiagnostics {
    pub energy_min: f64,
    pub energy_max: f64,
    pub energy_bins: Vec<EnergyBinStats>,
    /// Energy-major grid: `offdiag_bins[e * omega_bins + w]`.
    pub offdiag_bins: Vec<OffDiagonalBin>,
    pub omega_bins: usize,
    pub entropy_curve: Vec<(f64, f64)>,
    pub residuals: ResidualStats,
}

impl EthDiagnostics {
    pub fn offdiag(&self, energy_bin: usize, omega_bin: usize) -> &OffDiagonalBin {
        &self.offdiag_bins[energy_bin * self.omega_bins + omega_bin]
    }

    /// Unflagged energy bins whose centers lie in the middle half of the spectrum.
    pub fn mid_spectrum_bins(&self) -> Vec<usize> {
        let w = self.energy_max - self.energy_min;
        let (lo, hi) = (self.energy_min + 0.25 * w, self.energy_max - 0.25 * w);
        (0..self.energy_bins.len())
            .filter(|&b| {
                let bin = &self.energy_bins[b];
                !bin.flagged && bin.center >= lo && bin.center <= hi
            })
            .collect()
    }

    /// Lowest-omega off-diagonal mean divided by half the diagonal variance
    /// in the same energy bin. Random-matrix eigenvectors give 1.
    pub fn offdiag_to_diag_ratio(&self, energy_bin: usize) -> Option<f64> {
        let d = &self.energy_bins[energy_bin];
        let o = self.offdiag(energy_bin, 0);
        if d.flagged || o.flagged || d.fluctuation_variance <= 0.0 {
            return None;
        }
        Some(o.mean_sq / (0.5 * d.fluctuation_variance))
    }
}

/// Residual variance of `y` about its least-squares line in `x`, with
/// `count - 2` degrees of freedom.
fn detrended_variance(pts: &[(f64, f64)]) -> Option<f64> {
    let k = pts.len();
    if k < 3 {
        return None;
    }
    let kf = k as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / kf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / kf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    Some(rss / (kf - 2.0))
}

fn bin_of(x: f64, lo: f64, width: f64, bins: usize) -> usize {
    if width <= 0.0 {
        return 0;
    }
    (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1)
}

/// Bins the matrix elements of `A` in the eigenbasis of `es`: diagonal
/// elements by `E_i`, off-diagonal `|A_ij|^2` (with `i > j`) by
/// `E = (E_i + E_j)/2` and `omega = E_i - E_j >= 0`.
pub fn eth_ansatz_diagnostics(
    op: &HermitianOperator,
    es: &EigenSystem,
    energy_bins: usize,
    omega_bins: usize,
) -> Result<EthDiagnostics> {
    let n = es.dim();
    if op.dim() != n {
        return Err(mismatch("eth_ansatz_diagnostics", n, op.dim()));
    }
    if energy_bins == 0 || omega_bins == 0 {
        return Err(Error::InvalidArgument("bin counts must be positive".into()));
    }
    if n < 4 * energy_bins {
        return Err(Error::InvalidArgument(format!(
            "need N >= 4 * energy_bins ({n} < {})",
            4 * energy_bins
        )));
    }
    let rotated = op.in_basis(es.vectors())?;
    let e = es.values();
    let (emin, emax) = (e[0], e[n - 1]);
    let span = emax - emin;
    let ew = span / energy_bins as f64;
    let ow = span / omega_bins as f64;

    let mut diag: Vec<Vec<(f64, f64)>> = vec![Vec::new(); energy_bins];
    for i in 0..n {
        diag[bin_of(e[i], emin, ew, energy_bins)].push((e[i], rotated.get(i, i).re));
    }
    let energy_stats: Vec<EnergyBinStats> = diag
        .iter()
        .enumerate()
        .map(|(b, pts)| {
            let count = pts.len();
            let vals: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let mean = if count > 0 { vals.iter().sum::<f64>() / count as f64 } else { 0.0 };
            let var = if count > 1 {
                vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64
            } else {
                0.0
            };
            let center = emin + (b as f64 + 0.5) * ew;
            let mean_energy = if count > 0 { pts.iter().map(|p| p.0).sum::<f64>() / count as f64 } else { center };
            let entropy = (count > 0 && ew > 0.0).then(|| (count as f64 * span / ew).ln());
            EnergyBinStats {
                center,
                count,
                mean_energy,
                mean_diagonal: mean,
                diagonal_variance: var,
                fluctuation_variance: detrended_variance(pts).unwrap_or(var),
                entropy,
                flagged: count < MIN_BIN_COUNT,
            }
        })
        .collect();

    let cells = energy_bins * omega_bins;
    let mut sums = vec![0.0; cells];
    let mut counts = vec![0usize; cells];
    let mut cell_of_pair = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..n {
        for j in 0..i {
            let eb = bin_of(0.5 * (e[i] + e[j]), emin, ew, energy_bins);
            let ob = bin_of(e[i] - e[j], 0.0, ow, omega_bins);
            let cell = eb * omega_bins + ob;
            sums[cell] += rotated.get(i, j).norm_sqr();
            counts[cell] += 1;
            cell_of_pair.push((i, j, cell));
        }
    }
    let offdiag_bins: Vec<OffDiagonalBin> = (0..cells)
        .map(|cell| OffDiagonalBin {
            energy_center: emin + ((cell / omega_bins) as f64 + 0.5) * ew,
            omega_center: ((cell % omega_bins) as f64 + 0.5) * ow,
            count: counts[cell],
            mean_sq: if counts[cell] > 0 { sums[cell] / counts[cell] as f64 } else { 0.0 },
            flagged: counts[cell] < MIN_BIN_COUNT,
        })
        .collect();

    let mut rsum = C64::new(0.0, 0.0);
    let mut rsq = 0.0;
    let mut rcount = 0usize;
    for &(i, j, cell) in &cell_of_pair {
        let ms = offdiag_bins[cell].mean_sq;
        if ms > 0.0 {
            let r = rotated.get(i, j) / ms.sqrt();
            rsum += r;
            rsq += r.norm_sqr();
            rcount += 1;
        }
    }
    let residuals = if rcount > 0 {
        let mean = rsum / rcount as f64;
        ResidualStats { count: rcount, mean: mean.re, variance: rsq / rcount as f64 - mean.norm_sqr() }
    } else {
        ResidualStats { count: 0, mean: 0.0, variance: 0.0 }
    };

    let entropy_curve = energy_stats
        .iter()
        .filter_map(|b| b.entropy.map(|s| (b.center, s)))
        .collect();
    Ok(EthDiagnostics {
        energy_min: emin,
        energy_max: emax,
        energy_bins: energy_stats,
        offdiag_bins,
        omega_bins,
        entropy_curve,
        residuals,
    })
}

/// Diagnostics of `A^power` for `power` in `{2, 3}`.
pub fn moment_structure_check(
    op: &HermitianOperator,
    power: u32,
    es: &EigenSystem,
    energy_bins: usize,
    omega_bins: usize,
) -> Result<EthDiagnostics> {
    if !(2..=3).contains(&power) {
        return Err(Error::InvalidArgument(format!("power must be 2 or 3, got {power}")));
    }
    eth_ansatz_diagnostics(&op.power(power)?, es, energy_bins, omega_bins)
}

/// Canonical average of `A` over the full spectrum of `es` at the `beta`
/// whose canonical energy equals `energy`. Returns `(beta, average)`.
pub fn energy_matched_canonical(
    op: &HermitianOperator,
    es: &EigenSystem,
    energy: f64,
    bracket: BetaBracket,
) -> Result<(f64, f64)> {
    if op.dim() != es.dim() {
        return Err(mismatch("energy_matched_canonical", es.dim(), op.dim()));
    }
    let (beta, _) = solve_beta_for_energy(es.values(), energy, bracket)?;
    let w = gibbs_weights(es.values(), beta);
    let v = es.vectors();
    let avg = (0..es.dim()).map(|i| w[i] * op.quadratic_form(&v.column(i))).sum();
    Ok((beta, avg))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two (x, y) pairs".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("x values must not all be equal".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::SymmetryClass;
    use crate::numkernel::{hermitian_eigendecomposition, ComplexMatrix};
    use crate::system::{build_composite, SubsystemSpec};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn six_level() -> CompositeSystem {
        build_composite(
            &SubsystemSpec::diagonal(&[0.0, 1.0]).unwrap(),
            &SubsystemSpec::diagonal(&[0.0, 1.0, 2.0]).unwrap(),
        )
        .unwrap()
    }

    fn ladder(n: usize, m: usize) -> CompositeSystem {
        let s: Vec<f64> = (0..n).map(|l| l as f64).collect();
        let r: Vec<f64> = (0..m).map(|k| k as f64 / m as f64).collect();
        build_composite(&SubsystemSpec::diagonal(&s).unwrap(), &SubsystemSpec::diagonal(&r).unwrap()).unwrap()
    }

    fn random_hermitian(dim: usize, seed: u64) -> HermitianOperator {
        let spec = GaussianEnsembleSpec::new(dim, 1.0, SymmetryClass::ComplexHermitian).unwrap();
        sample_gaussian_perturbation(&spec, RngSeed(seed)).unwrap()
    }

    fn plus_minus_diagonal(dim: usize) -> HermitianOperator {
        let d: Vec<f64> = (0..dim).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        HermitianOperator::from_real_diagonal(&d).unwrap()
    }

    #[test]
    fn expectation_examples() {
        let psi = crate::ensembles::sample_haar_column(4, 0, RngSeed(2)).unwrap();
        assert!((eigenstate_expectation(&psi, &HermitianOperator::identity(4).unwrap()).unwrap() - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new(vec![c(s), c(0.0), c(0.0), c(s)]).unwrap();
        let szi = HermitianOperator::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(eigenstate_expectation(&bell, &szi).unwrap().abs() < 1e-15);
        assert!(eigenstate_expectation(&bell, &HermitianOperator::identity(3).unwrap()).is_err());
    }

    #[test]
    fn expectation_matches_quadratic_sum() {
        let a = random_hermitian(12, 8);
        let psi = crate::ensembles::sample_haar_column(12, 0, RngSeed(9)).unwrap();
        let v = psi.amplitudes();
        let mut direct = c(0.0);
        for i in 0..12 {
            for j in 0..12 {
                direct += v[i].conj() * a.get(i, j) * v[j];
            }
        }
        assert!((eigenstate_expectation(&psi, &a).unwrap() - direct.re).abs() <= 1e-12);
    }

    #[test]
    fn microcanonical_examples() {
        let cs = six_level();
        let id = HermitianOperator::identity(6).unwrap();
        let w = EnergyWindow::new(1.0, 0.5).unwrap();
        assert!((microcanonical_average(&id, cs.product_basis(), Some(&w)).unwrap() - 1.0).abs() < 1e-15);
        assert!((microcanonical_average(cs.h0(), cs.product_basis(), Some(&w)).unwrap() - 1.0).abs() < 1e-15);
        assert!((microcanonical_average(cs.h0(), cs.product_basis(), None).unwrap() - 1.5).abs() < 1e-15);
        let empty = EnergyWindow::new(10.0, 0.5).unwrap();
        match microcanonical_average(cs.h0(), cs.product_basis(), Some(&empty)) {
            Err(Error::EmptyWindow { nearest, .. }) => assert_eq!(nearest, 3.0),
            other => panic!("expected empty window, got {other:?}"),
        }
        assert!(EnergyWindow::new(0.0, 0.0).is_err());
    }

    #[test]
    fn variance_bound_examples() {
        let cs = ladder(4, 4);
        let id = HermitianOperator::identity(16).unwrap();
        assert!((variance_bound(&id, cs.product_basis(), None, 16).unwrap() - 0.125).abs() < 1e-15);
        let zero = HermitianOperator::zeros(16).unwrap();
        assert_eq!(variance_bound(&zero, cs.product_basis(), None, 16).unwrap(), 0.0);
    }

    #[test]
    fn ensemble_of_identity_is_exact() {
        let cs = ladder(2, 4);
        let st = ensemble_average(&HermitianOperator::identity(8).unwrap(), &cs, 0, 50, RngSeed(1)).unwrap();
        assert!((st.mean - 1.0).abs() < 1e-14);
        assert!(st.variance < 1e-28);
        assert!(ensemble_average(&HermitianOperator::identity(8).unwrap(), &cs, 0, 1, RngSeed(1)).is_err());
    }

    #[test]
    fn ensemble_traceless_mean_is_zero() {
        let cs = ladder(2, 32);
        let a = plus_minus_diagonal(64);
        let st = ensemble_average(&a, &cs, 0, 2000, RngSeed(17)).unwrap();
        assert!(st.mean.abs() <= 5.0 * st.standard_error, "{st:?}");
    }

    #[test]
    fn ensemble_projector_mean_is_one_over_n() {
        let cs = ladder(2, 32);
        let mut d = vec![0.0; 64];
        d[0] = 1.0;
        let a = HermitianOperator::from_real_diagonal(&d).unwrap();
        let st = ensemble_average(&a, &cs, 5, 2000, RngSeed(23)).unwrap();
        assert!((st.mean - 1.0 / 64.0).abs() <= 5.0 * st.standard_error, "{st:?}");
    }

    #[test]
    fn ensemble_variance_under_bound() {
        let cs = ladder(2, 32);
        let a = plus_minus_diagonal(64);
        let st = ensemble_average(&a, &cs, 0, 2000, RngSeed(29)).unwrap();
        let bound = variance_bound(&a, cs.product_basis(), None, 64).unwrap();
        assert!((bound - 2.0 / 64.0).abs() < 1e-15);
        assert!(st.variance <= bound + 3.0 * st.variance_standard_error);
    }

    #[test]
    fn ensemble_samples_match_full_rotation_dense_observable() {
        let cs = build_composite(
            &SubsystemSpec::new(random_hermitian(2, 3)),
            &SubsystemSpec::new(random_hermitian(3, 4)),
        )
        .unwrap();
        let a = random_hermitian(6, 5);
        let seed = RngSeed(99);
        let fast = ensemble_samples(&a, &cs, 2, 5, seed).unwrap();
        for (r, value) in fast.iter().enumerate() {
            let ps = crate::system::perturb_haar(&cs, seed.derive(r as u64)).unwrap();
            let direct = eigenstate_expectation(&ps.eigenstate(2).unwrap(), &a).unwrap();
            assert!((value - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn stats_from_samples() {
        let st = EnsembleStats::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(st.mean, 2.5);
        assert!((st.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((st.standard_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!(EnsembleStats::from_samples(&[1.0]).is_err());
    }

    fn two_level() -> (EigenSystem, HermitianOperator, InitialState) {
        let omega = 0.7;
        let es = EigenSystem::new(vec![0.0, omega], crate::numkernel::UnitaryMatrix::identity(2).unwrap()).unwrap();
        let a = HermitianOperator::new(ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap())
            .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        (es, a, InitialState::new(vec![c(s), c(s)]).unwrap())
    }

    #[test]
    fn two_level_cosine_series() {
        let (es, a, init) = two_level();
        let times: Vec<f64> = (0..50).map(|k| 0.3 * k as f64).collect();
        let series = expectation_time_series(&init, &es, &a, &times).unwrap();
        for (t, v) in times.iter().zip(&series) {
            assert!((v - (0.7 * t).cos()).abs() < 1e-14);
        }
        assert!(diagonal_ensemble_average(&init, &es, &a).unwrap().abs() < 1e-15);
    }

    #[test]
    fn eigenstate_initial_condition_is_stationary() {
        let h = random_hermitian(6, 12);
        let es = hermitian_eigendecomposition(&h).unwrap();
        let a = random_hermitian(6, 13);
        let mut coeffs = vec![c(0.0); 6];
        coeffs[3] = C64::from_polar(1.0, 0.4);
        let init = InitialState::new(coeffs).unwrap();
        let aii = eigenstate_expectation(&es.state(3).unwrap(), &a).unwrap();
        let series = expectation_time_series(&init, &es, &a, &[0.0, 1.0, 17.5]).unwrap();
        assert!(series.iter().all(|v| (v - aii).abs() < 1e-12));
        assert!((diagonal_ensemble_average(&init, &es, &a).unwrap() - aii).abs() < 1e-12);
    }

    #[test]
    fn time_series_at_zero_is_initial_expectation() {
        let h = random_hermitian(8, 40);
        let es = hermitian_eigendecomposition(&h).unwrap();
        let a = random_hermitian(8, 41);
        let psi = crate::ensembles::sample_haar_column(8, 0, RngSeed(42)).unwrap();
        let init = InitialState::from_state(&psi, &es).unwrap();
        let a0 = expectation_time_series(&init, &es, &a, &[0.0]).unwrap()[0];
        assert!((a0 - eigenstate_expectation(&psi, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_diagonal_ensemble_keeps_in_group_coherence() {
        // two degenerate levels: the state never dephases
        let es = EigenSystem::new(vec![1.0, 1.0], crate::numkernel::UnitaryMatrix::identity(2).unwrap()).unwrap();
        let a = HermitianOperator::new(ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap())
            .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let init = InitialState::new(vec![c(s), c(s)]).unwrap();
        assert!((diagonal_ensemble_average(&init, &es, &a).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(degenerate_groups(&[0.0, 1.0, 1.0, 2.0]), vec![vec![0], vec![1, 2], vec![3]]);
    }

    #[test]
    fn numeric_average_examples() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        assert!((numeric_time_average(&vec![2.5; 101], &times).unwrap() - 2.5).abs() < 1e-15);
        let omega = 2.0 * std::f64::consts::PI;
        // ten full periods
        let series: Vec<f64> = times.iter().map(|t| (omega * t).cos()).collect();
        assert!(numeric_time_average(&series, &times).unwrap().abs() < 1e-10);
        assert!(numeric_time_average(&[1.0, 2.0], &[1.0, 1.0]).is_err());
        assert!(numeric_time_average(&[1.0], &[1.0]).is_err());
        assert!(numeric_time_average(&[1.0, 2.0], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn numeric_average_half_period_remainder() {
        let omega = 1.3;
        let period = 2.0 * std::f64::consts::PI / omega;
        let t_end = 200.0 * period + 0.5 * period;
        let steps = 400_000;
        let times: Vec<f64> = (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect();
        let series: Vec<f64> = times.iter().map(|t| (omega * t).cos()).collect();
        let avg = numeric_time_average(&series, &times).unwrap();
        assert!(avg.abs() <= std::f64::consts::PI / (omega * t_end));
    }

    #[test]
    fn diagnostics_of_identity() {
        let h = random_hermitian(32, 50);
        let es = hermitian_eigendecomposition(&h).unwrap();
        let d = eth_ansatz_diagnostics(&HermitianOperator::identity(32).unwrap(), &es, 4, 3).unwrap();
        assert!(d.energy_bins.iter().filter(|b| b.count > 0).all(|b| (b.mean_diagonal - 1.0).abs() < 1e-12));
        assert!(d.offdiag_bins.iter().all(|b| b.mean_sq < 1e-26));
        assert_eq!(d.energy_bins.iter().map(|b| b.count).sum::<usize>(), 32);
        assert_eq!(d.offdiag_bins.iter().map(|b| b.count).sum::<usize>(), 32 * 31 / 2);
        assert!(eth_ansatz_diagnostics(&HermitianOperator::identity(32).unwrap(), &es, 9, 3).is_err());
    }

    #[test]
    fn diagnostics_of_eigenbasis_diagonal_operator() {
        let h = random_hermitian(16, 60);
        let es = hermitian_eigendecomposition(&h).unwrap();
        // a function of H is diagonal in its eigenbasis
        let a = h.power(2).unwrap();
        let d = eth_ansatz_diagnostics(&a, &es, 4, 4).unwrap();
        assert!(d.offdiag_bins.iter().all(|b| b.mean_sq < 1e-20));
    }

    #[test]
    fn moment_check_examples() {
        let h = random_hermitian(16, 70);
        let es = hermitian_eigendecomposition(&h).unwrap();
        let id = HermitianOperator::identity(16).unwrap();
        let base = eth_ansatz_diagnostics(&id, &es, 4, 2).unwrap();
        assert_eq!(moment_structure_check(&id, 3, &es, 4, 2).unwrap(), base);
        let mut d = vec![0.0; 16];
        d[..5].iter_mut().for_each(|x| *x = 1.0);
        let proj = HermitianOperator::from_real_diagonal(&d).unwrap();
        assert_eq!(
            moment_structure_check(&proj, 2, &es, 4, 2).unwrap(),
            eth_ansatz_diagnostics(&proj, &es, 4, 2).unwrap()
        );
        assert!(moment_structure_check(&id, 4, &es, 4, 2).is_err());
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let xs = [64.0, 128.0, 256.0, 512.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.0)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 1.0).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
        assert!(loglog_slope(&[1.0, 2.0], &[1.0, -1.0]).is_err());
    }
}
