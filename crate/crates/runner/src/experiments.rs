//! The five experiment kinds, each producing a [`ResultRecord`].

use ethlab_core::ensembles::{sample_gaussian_perturbation, GaussianEnsembleSpec, RngSeed, SymmetryClass};
use ethlab_core::eth::{
    default_bin_count, degenerate_groups, diagonal_ensemble_average, energy_matched_canonical, eth_ansatz_diagnostics,
    ensemble_samples, expectation_time_series_complex, explicit_ensemble_samples, loglog_slope, microcanonical_average,
    moment_structure_check, numeric_time_average, variance_bound, EnergyWindow, EnsembleStats, InitialState,
};
use ethlab_core::numkernel::{EigenSystem, EnergyBasis, HermitianOperator};
use ethlab_core::system::{
    band_limit, build_composite, haar_eigenstate, perturb_explicit, perturb_haar, CompositeSystem, SubsystemSpec,
};
use ethlab_core::thermo::{
    fit_beta, partial_trace, renyi2_entropy, von_neumann_entropy, BetaBracket, DensityMatrix, Keep,
};
use ethlab_core::numkernel::trace_distance;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, Mode, SubsystemKind, Symmetry};
use crate::error::{RunnerError, RunnerResult};
use crate::observable::build_observable;
use crate::results::{ResultRecord, Row, Table};

/// Longest time grid a time-average run may request.
pub const MAX_TIME_STEPS: usize = 50_000_000;

// Realization indices count up from 0; fixed draws use the top of the range.
const SUBSYSTEM_S_STREAM: u64 = u64::MAX;
const SUBSYSTEM_R_STREAM: u64 = u64::MAX - 1;
const OBSERVABLE_STREAM: u64 = u64::MAX - 2;

fn symmetry(cfg: &ExperimentConfig) -> SymmetryClass {
    match cfg.perturbation.symmetry {
        Symmetry::RealSymmetric => SymmetryClass::RealSymmetric,
        Symmetry::ComplexHermitian => SymmetryClass::ComplexHermitian,
    }
}

fn composite(cfg: &ExperimentConfig, m: usize, seed: RngSeed) -> RunnerResult<CompositeSystem> {
    let n = cfg.n;
    let (s, r) = match cfg.subsystems.kind {
        SubsystemKind::Ladder => {
            let a: Vec<f64> = (0..n).map(|l| l as f64).collect();
            let b: Vec<f64> = (0..m).map(|k| k as f64 / m as f64).collect();
            (SubsystemSpec::diagonal(&a)?, SubsystemSpec::diagonal(&b)?)
        }
        SubsystemKind::Random => {
            let spec_s = GaussianEnsembleSpec::new(n, 1.0, SymmetryClass::RealSymmetric)?;
            let spec_r = GaussianEnsembleSpec::new(m, 1.0 / m as f64, SymmetryClass::RealSymmetric)?;
            (
                SubsystemSpec::new(sample_gaussian_perturbation(&spec_s, seed.derive(SUBSYSTEM_S_STREAM))?),
                SubsystemSpec::new(sample_gaussian_perturbation(&spec_r, seed.derive(SUBSYSTEM_R_STREAM))?),
            )
        }
    };
    Ok(build_composite(&s, &r)?)
}

fn observable(cfg: &ExperimentConfig, cs: &CompositeSystem, seed: RngSeed) -> RunnerResult<HermitianOperator> {
    build_observable(&cfg.observable, cs, seed.derive(OBSERVABLE_STREAM).0)
}

fn window(cfg: &ExperimentConfig) -> RunnerResult<Option<EnergyWindow>> {
    Ok(cfg.window.map(|w| EnergyWindow::new(w.center, w.width)).transpose()?)
}

/// Product-basis GOE/GUE draw, optionally band limited, in the computational basis.
fn interaction(cfg: &ExperimentConfig, cs: &CompositeSystem, seed: RngSeed) -> RunnerResult<HermitianOperator> {
    let spec = GaussianEnsembleSpec::new(cs.dim(), cfg.epsilon, symmetry(cfg))?;
    let mut h = sample_gaussian_perturbation(&spec, seed)?;
    if let Some(b) = cfg.perturbation.band {
        h = band_limit(&h, cs.product_basis().energies(), b)?;
    }
    Ok(cs.from_product_basis(&h)?)
}

/// Perturbed eigenbasis for a single realization.
fn eigensystem(cfg: &ExperimentConfig, cs: &CompositeSystem, seed: RngSeed) -> RunnerResult<EigenSystem> {
    let ps = match cfg.mode {
        Mode::HaarRotation => perturb_haar(cs, seed)?,
        Mode::ExplicitHamiltonian => perturb_explicit(cs, &interaction(cfg, cs, seed)?)?,
    };
    Ok(ps.eigensystem().clone())
}

fn samples(
    cfg: &ExperimentConfig,
    cs: &CompositeSystem,
    op: &HermitianOperator,
    eigenstate: usize,
    seed: RngSeed,
) -> RunnerResult<Vec<f64>> {
    Ok(match cfg.mode {
        Mode::HaarRotation => ensemble_samples(op, cs, eigenstate, cfg.realizations, seed)?,
        Mode::ExplicitHamiltonian => {
            let spec = GaussianEnsembleSpec::new(cs.dim(), cfg.epsilon, symmetry(cfg))?;
            explicit_ensemble_samples(op, cs, eigenstate, cfg.realizations, &spec, cfg.perturbation.band, seed)?
        }
    })
}

/// Runs `cfg` as point `point` of a run keyed by `master`.
pub fn execute(cfg: &ExperimentConfig, master: RngSeed, point: u64) -> RunnerResult<ResultRecord> {
    cfg.validate()?;
    let seed = master.derive(point);
    let (rows, tables) = match cfg.experiment {
        Experiment::EnsembleVsMicro => ensemble_vs_micro(cfg, seed)?,
        Experiment::VarianceScaling => variance_scaling(cfg, seed)?,
        Experiment::TimeAverage => time_average(cfg, seed)?,
        Experiment::EthDiagnostics => eth_diagnostics(cfg, seed)?,
        Experiment::SubsystemGibbs => subsystem_gibbs(cfg, seed)?,
    };
    let mut echo = cfg.clone();
    echo.output_dir = None;
    echo.seed = master.0;
    Ok(ResultRecord {
        experiment: cfg.experiment.id().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: master.0,
        config: echo,
        rows,
        tables,
    })
}

type Output = (Vec<Row>, Vec<Table>);

fn ensemble_vs_micro(cfg: &ExperimentConfig, seed: RngSeed) -> RunnerResult<Output> {
    let (n, m) = (cfg.n, cfg.m);
    let cs = composite(cfg, m, seed)?;
    let op = observable(cfg, &cs, seed)?;
    let i = cfg.eigenstate.unwrap_or(0);
    let xs = samples(cfg, &cs, &op, i, seed)?;
    let stats = EnsembleStats::from_samples(&xs)?;
    let win = window(cfg)?;
    let micro = microcanonical_average(&op, cs.product_basis(), win.as_ref())?;
    let population = match &win {
        Some(w) => w.select(&cs.sorted_energies())?.len(),
        None => cs.dim(),
    };
    let bound = variance_bound(&op, cs.product_basis(), win.as_ref(), cs.dim())?;
    let r = cfg.realizations;
    let rows = vec![
        Row::new(n, m, "ensemble_mean", stats.mean).with_error(stats.standard_error, r),
        Row::new(n, m, "ensemble_variance", stats.variance).with_error(stats.variance_standard_error, r),
        Row::new(n, m, "microcanonical", micro).with_error(0.0, population),
        Row::new(n, m, "variance_bound", bound),
        Row::new(n, m, "mean_deviation", (stats.mean - micro).abs()).with_error(stats.standard_error, r),
        Row::new(n, m, "eigenstate", i as f64),
    ];
    let mut table = Table::new("samples", &["realization", "expectation"]);
    for (k, x) in xs.iter().enumerate() {
        table.push(&[k as f64, *x]);
    }
    Ok((rows, vec![table]))
}

/// Slope of `ln y` on `ln x` and its standard error from the fit residuals.
fn slope_with_error(xs: &[f64], ys: &[f64]) -> RunnerResult<(f64, f64)> {
    let slope = loglog_slope(xs, ys)?;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let se = if lx.len() > 2 { (rss / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok((slope, se))
}

fn variance_scaling(cfg: &ExperimentConfig, seed: RngSeed) -> RunnerResult<Output> {
    let n = cfg.n;
    let win = window(cfg)?;
    let mut rows = Vec::new();
    let mut table = Table::new("variance", &["dim", "variance", "stderr", "bound", "mean", "microcanonical"]);
    let (mut dims, mut vars) = (Vec::new(), Vec::new());
    for (k, m) in cfg.scanned_sizes().into_iter().enumerate() {
        let size_seed = seed.derive(k as u64);
        let cs = composite(cfg, m, size_seed)?;
        let op = observable(cfg, &cs, size_seed)?;
        let i = cfg.eigenstate.unwrap_or(0);
        let stats = EnsembleStats::from_samples(&samples(cfg, &cs, &op, i, size_seed)?)?;
        let bound = variance_bound(&op, cs.product_basis(), win.as_ref(), cs.dim())?;
        let micro = microcanonical_average(&op, cs.product_basis(), win.as_ref())?;
        let d = cs.dim() as f64;
        let r = cfg.realizations;
        rows.push(Row::new(n, m, "ensemble_variance", stats.variance).at(d).with_error(stats.variance_standard_error, r));
        rows.push(Row::new(n, m, "variance_bound", bound).at(d));
        rows.push(Row::new(n, m, "ensemble_mean", stats.mean).at(d).with_error(stats.standard_error, r));
        rows.push(Row::new(n, m, "microcanonical", micro).at(d));
        table.push(&[d, stats.variance, stats.variance_standard_error, bound, stats.mean, micro]);
        dims.push(d);
        vars.push(stats.variance);
    }
    let (slope, se) = slope_with_error(&dims, &vars)?;
    rows.push(Row::new(n, cfg.m, "loglog_slope", slope).with_error(se, dims.len()));
    Ok((rows, vec![table]))
}

/// Smallest spacing between distinct levels (degenerate groups merged).
fn min_gap(es: &EigenSystem) -> RunnerResult<f64> {
    let e = es.values();
    let groups = degenerate_groups(e);
    let gap = groups
        .windows(2)
        .map(|w| e[w[1][0]] - e[*w[0].last().expect("groups are non-empty")])
        .fold(f64::INFINITY, f64::min);
    if gap.is_finite() && gap > 0.0 {
        Ok(gap)
    } else {
        Err(RunnerError::Config("time-average needs at least two distinct energy levels".into()))
    }
}

fn time_average(cfg: &ExperimentConfig, seed: RngSeed) -> RunnerResult<Output> {
    let (n, m) = (cfg.n, cfg.m);
    let cs = composite(cfg, m, seed)?;
    let op = observable(cfg, &cs, seed)?;
    let es = eigensystem(cfg, &cs, seed.derive(0))?;
    let j = cfg.initial_state.unwrap_or(cs.dim() / 2);
    let init = InitialState::from_state(&cs.product_state(j)?, &es)?;

    let gap = min_gap(&es)?;
    let e = es.values();
    let width = e[e.len() - 1] - e[0];
    let grid = cfg.time.unwrap_or_default();
    let t_max = grid.t_max.unwrap_or(grid.gap_multiple.unwrap_or(1e4) / gap);
    let steps = match grid.steps {
        Some(s) => s,
        None => ((t_max * width / 4.0).ceil() as usize).max(1),
    };
    if steps > MAX_TIME_STEPS {
        return Err(RunnerError::Config(format!(
            "time grid needs {steps} steps (limit {MAX_TIME_STEPS}); lower t_max or set time.steps"
        )));
    }
    let times: Vec<f64> = (0..=steps).map(|k| t_max * k as f64 / steps as f64).collect();
    let raw = expectation_time_series_complex(&init, &es, &op, &times)?;
    let residue = raw.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()));
    let tol = 1e-9 * op.max_abs().max(f64::MIN_POSITIVE);
    if residue > tol {
        return Err(ethlab_core::Error::Numerical(format!("time series imaginary residue {residue:e}")).into());
    }
    let series: Vec<f64> = raw.iter().map(|z| z.re).collect();

    let diagonal = diagonal_ensemble_average(&init, &es, &op)?;
    let micro = microcanonical_average(&op, &es, window(cfg)?.as_ref())?;
    let mut rows = vec![
        Row::new(n, m, "diagonal_ensemble", diagonal),
        Row::new(n, m, "microcanonical", micro),
        Row::new(n, m, "min_gap", gap),
        Row::new(n, m, "max_imaginary_residue", residue).with_error(tol, times.len()),
    ];
    let mut running = Table::new("running_average", &["t", "average", "deviation"]);
    for frac in [1e-3, 1e-2, 1e-1, 1.0] {
        let idx = ((steps as f64 * frac).round() as usize).clamp(1, steps);
        let avg = numeric_time_average(&series[..=idx], &times[..=idx])?;
        let t = times[idx];
        rows.push(Row::new(n, m, "time_average", avg).at(t).with_error(0.0, idx + 1));
        rows.push(Row::new(n, m, "deviation", (avg - diagonal).abs()).at(t).with_error(0.0, idx + 1));
        running.push(&[t, avg, (avg - diagonal).abs()]);
    }
    let keep = grid.samples.unwrap_or(1000).min(times.len());
    let mut table = Table::new("series", &["t", "expectation"]);
    for k in 0..keep {
        let idx = if keep == 1 { 0 } else { k * (times.len() - 1) / (keep - 1) };
        table.push(&[times[idx], series[idx]]);
    }
    Ok((rows, vec![table, running]))
}

fn eth_diagnostics(cfg: &ExperimentConfig, seed: RngSeed) -> RunnerResult<Output> {
    let (n, m) = (cfg.n, cfg.m);
    let cs = composite(cfg, m, seed)?;
    let op = observable(cfg, &cs, seed)?;
    let es = eigensystem(cfg, &cs, seed.derive(0))?;
    let bins = cfg.bins.unwrap_or_default();
    let eb = bins.energy.unwrap_or(default_bin_count(cs.dim()));
    let ob = bins.omega.unwrap_or(eb);
    let diag = eth_ansatz_diagnostics(&op, &es, eb, ob)?;
    let moment = moment_structure_check(&op, 2, &es, eb, ob)?;
    let mid = diag.mid_spectrum_bins();

    let mut rows = vec![
        Row::new(n, m, "residual_mean", diag.residuals.mean).with_error(0.0, diag.residuals.count),
        Row::new(n, m, "residual_variance", diag.residuals.variance).with_error(0.0, diag.residuals.count),
    ];
    let mut energy = Table::new(
        "energy_bins",
        &[
            "center",
            "mean_energy",
            "count",
            "mean_diagonal",
            "diagonal_variance",
            "fluctuation_variance",
            "entropy",
            "offdiag_ratio",
            "beta",
            "canonical",
            "relative_deviation",
            "moment2_mean",
            "mid_spectrum",
        ],
    );
    let (mut worst_ratio, mut worst_dev) = (1.0_f64, 0.0_f64);
    for (b, bin) in diag.energy_bins.iter().enumerate() {
        let ratio = diag.offdiag_to_diag_ratio(b).unwrap_or(f64::NAN);
        let (beta, canonical) = if bin.count > 0 {
            energy_matched_canonical(&op, &es, bin.mean_energy, BetaBracket::default()).unwrap_or((f64::NAN, f64::NAN))
        } else {
            (f64::NAN, f64::NAN)
        };
        let rel = ((bin.mean_diagonal - canonical) / canonical).abs();
        let is_mid = mid.contains(&b);
        if is_mid {
            rows.push(Row::new(n, m, "offdiag_ratio", ratio).at(bin.mean_energy).with_error(0.0, bin.count));
            rows.push(Row::new(n, m, "canonical_relative_deviation", rel).at(bin.mean_energy).with_error(0.0, bin.count));
            worst_ratio = worst_ratio.max(ratio.max(1.0 / ratio));
            worst_dev = worst_dev.max(rel);
        }
        energy.push(&[
            bin.center,
            bin.mean_energy,
            bin.count as f64,
            bin.mean_diagonal,
            bin.diagonal_variance,
            bin.fluctuation_variance,
            bin.entropy.unwrap_or(f64::NAN),
            ratio,
            beta,
            canonical,
            rel,
            moment.energy_bins[b].mean_diagonal,
            if is_mid { 1.0 } else { 0.0 },
        ]);
    }
    rows.push(Row::new(n, m, "mid_spectrum_bins", mid.len() as f64));
    rows.push(Row::new(n, m, "worst_ratio_factor", worst_ratio));
    rows.push(Row::new(n, m, "worst_canonical_deviation", worst_dev));

    let mut offdiag = Table::new("offdiag_bins", &["energy_center", "omega_center", "count", "mean_sq", "flagged"]);
    for o in &diag.offdiag_bins {
        offdiag.push(&[o.energy_center, o.omega_center, o.count as f64, o.mean_sq, if o.flagged { 1.0 } else { 0.0 }]);
    }
    let mut entropy = Table::new("entropy", &["energy", "entropy"]);
    for &(e, s) in &diag.entropy_curve {
        entropy.push(&[e, s]);
    }
    Ok((rows, vec![energy, offdiag, entropy]))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn mean_and_error(v: &[f64]) -> (f64, f64) {
    match EnsembleStats::from_samples(v) {
        Ok(s) => (s.mean, s.standard_error),
        Err(_) => (v.first().copied().unwrap_or(f64::NAN), 0.0),
    }
}

struct GibbsSample {
    distance: f64,
    beta: f64,
    renyi2: f64,
    von_neumann: f64,
}

fn subsystem_gibbs(cfg: &ExperimentConfig, seed: RngSeed) -> RunnerResult<Output> {
    let n = cfg.n;
    let mut rows = Vec::new();
    let mut table = Table::new(
        "trace_distance",
        &["m", "median", "mean", "stderr", "median_beta", "mean_renyi2", "mean_von_neumann"],
    );
    let mixed = DensityMatrix::maximally_mixed(n)?;
    for (k, m) in cfg.scanned_sizes().into_iter().enumerate() {
        let size_seed = seed.derive(k as u64);
        let cs = composite(cfg, m, size_seed)?;
        let i = cfg.eigenstate.unwrap_or(0);
        let draws: Vec<GibbsSample> = (0..cfg.realizations as u64)
            .into_par_iter()
            .map(|r| -> RunnerResult<GibbsSample> {
                let s = size_seed.derive(r);
                let psi = match cfg.mode {
                    Mode::HaarRotation => haar_eigenstate(&cs, i, s)?,
                    Mode::ExplicitHamiltonian => perturb_explicit(&cs, &interaction(cfg, &cs, s)?)?.eigenstate(i)?,
                };
                let rho = partial_trace(&psi, n, m, Keep::S)?;
                let beta = fit_beta(&rho, cs.h_s(), BetaBracket::default()).map_or(f64::NAN, |f| f.beta);
                Ok(GibbsSample {
                    distance: trace_distance(&rho, &mixed)?,
                    beta,
                    renyi2: renyi2_entropy(&rho),
                    von_neumann: von_neumann_entropy(&rho),
                })
            })
            .collect::<RunnerResult<_>>()?;
        let mut dist: Vec<f64> = draws.iter().map(|d| d.distance).collect();
        let (mean, se) = mean_and_error(&dist);
        let med = median(&mut dist);
        let mut betas: Vec<f64> = draws.iter().map(|d| d.beta).filter(|b| b.is_finite()).collect();
        let med_beta = if betas.is_empty() { f64::NAN } else { median(&mut betas) };
        let (s2, s2_se) = mean_and_error(&draws.iter().map(|d| d.renyi2).collect::<Vec<_>>());
        let (s1, s1_se) = mean_and_error(&draws.iter().map(|d| d.von_neumann).collect::<Vec<_>>());
        let r = cfg.realizations;
        let mf = m as f64;
        // large-sample standard error of a median, normal approximation
        rows.push(Row::new(n, m, "median_trace_distance", med).at(mf).with_error(1.2533 * se, r));
        rows.push(Row::new(n, m, "mean_trace_distance", mean).at(mf).with_error(se, r));
        rows.push(Row::new(n, m, "median_beta", med_beta).at(mf).with_error(0.0, betas.len()));
        rows.push(Row::new(n, m, "mean_renyi2", s2).at(mf).with_error(s2_se, r));
        rows.push(Row::new(n, m, "mean_von_neumann", s1).at(mf).with_error(s1_se, r));
        table.push(&[mf, med, mean, se, med_beta, s2, s1]);
    }
    Ok((rows, vec![table]))
}
