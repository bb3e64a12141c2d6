//! Reproducible experiment runner on top of `ethlab-core`.
//!
//! A run reads one TOML config, executes the experiment it names, and writes
//! `results.csv`, `results.json`, per-table CSVs and a `manifest.json` of
//! checksums. Identical config and seed give byte-identical files whatever
//! the worker count.

pub mod config;
pub mod error;
pub mod experiments;
pub mod observable;
pub mod plot;
pub mod results;

use std::path::{Path, PathBuf};

use ethlab_core::ensembles::RngSeed;

pub use config::{ExperimentConfig, SweepAxis};
pub use error::{RunnerError, RunnerResult};
pub use results::{Manifest, ResultRecord};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> RunnerResult<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(RunnerError::Config("workers must be positive".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| RunnerError::Config(format!("cannot start {k} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> RunnerResult<PathBuf> {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| RunnerError::Config("output_dir: not set in the config and no --out given".into()))
}

/// Executes a single config and writes its files. `seed` overrides the
/// config's master seed.
pub fn run(cfg: &ExperimentConfig, seed: Option<u64>, out: Option<&Path>) -> RunnerResult<(ResultRecord, Manifest)> {
    let dir = output_dir(cfg, out)?;
    let record = experiments::execute(cfg, RngSeed(seed.unwrap_or(cfg.seed)), 0)?;
    let manifest = results::write_record(&record, &dir)?;
    Ok((record, manifest))
}

/// Sub-directory name of a sweep point.
pub fn sweep_dir_name(axis: SweepAxis, value: &str) -> String {
    format!("{}_{}", axis.name().replace('.', "_"), value)
}

/// One run per value of `axis`; point `k` uses seed stream `k` of the master seed.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: &str,
    values: &[String],
    seed: Option<u64>,
    out: Option<&Path>,
) -> RunnerResult<Vec<(PathBuf, ResultRecord)>> {
    let axis = SweepAxis::parse(axis)?;
    if values.is_empty() {
        return Err(RunnerError::Config("values: sweep needs at least one value".into()));
    }
    let configs: Vec<ExperimentConfig> = values.iter().map(|v| axis.apply(cfg, v)).collect::<RunnerResult<_>>()?;
    let root = output_dir(cfg, out)?;
    let master = RngSeed(seed.unwrap_or(cfg.seed));
    let mut done = Vec::with_capacity(values.len());
    for (k, (point, value)) in configs.iter().zip(values).enumerate() {
        let record = experiments::execute(point, master, k as u64)?;
        let dir = root.join(sweep_dir_name(axis, value));
        results::write_record(&record, &dir)?;
        done.push((dir, record));
    }
    Ok(done)
}

/// Writes plot files for a run directory, or for every run directory one
/// level below `dir` (a sweep).
pub fn plot_data(dir: &Path) -> RunnerResult<Vec<PathBuf>> {
    if dir.join("results.json").is_file() {
        return plot::emit_plot_data(dir);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| RunnerError::io(dir, e))?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("results.json").is_file())
        .collect();
    if subdirs.is_empty() {
        return Err(RunnerError::Results(format!("no results.json in {} or its sub-directories", dir.display())));
    }
    subdirs.sort();
    let mut written = Vec::new();
    for d in subdirs {
        written.extend(plot::emit_plot_data(&d)?);
    }
    Ok(written)
}
