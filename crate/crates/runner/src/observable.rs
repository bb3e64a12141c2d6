//! Observables named in a config, realized for a concrete composite system.

use std::path::Path;

use ethlab_core::ensembles::RngSeed;
use ethlab_core::numkernel::{kron, ComplexMatrix, HermitianOperator};
use ethlab_core::system::CompositeSystem;
use ethlab_core::C64;
use rand::seq::SliceRandom;
use serde::Deserialize;

use crate::config::{ObservableConfig, Preset};
use crate::error::{RunnerError, RunnerResult};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

/// `dim/2` entries `+1`, `dim/2` entries `-1` (and one `0` for odd `dim`),
/// shuffled by `seed`. Traceless with `A^2` a projector of rank `2*(dim/2)`.
pub fn balanced_signs(dim: usize, seed: u64) -> Vec<f64> {
    let half = dim / 2;
    let mut v: Vec<f64> = (0..dim)
        .map(|j| match j {
            j if j < half => 1.0,
            j if j < 2 * half => -1.0,
            _ => 0.0,
        })
        .collect();
    v.shuffle(&mut RngSeed(seed).rng());
    v
}

fn load_matrix(path: &Path, dim: usize) -> RunnerResult<HermitianOperator> {
    let text = std::fs::read_to_string(path).map_err(|e| RunnerError::io(path, e))?;
    let file: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| RunnerError::Config(format!("observable.file {}: {e}", path.display())))?;
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
    if !shape_ok(&file.re) || file.im.as_ref().is_some_and(|im| !shape_ok(im)) {
        return Err(RunnerError::Config(format!(
            "observable.file {}: expected a {dim}x{dim} matrix",
            path.display()
        )));
    }
    let m = ComplexMatrix::from_fn(dim, dim, |i, j| {
        C64::new(file.re[i][j], file.im.as_ref().map_or(0.0, |im| im[i][j]))
    })?;
    HermitianOperator::new(m).map_err(|e| RunnerError::Config(format!("observable.file {}: {e}", path.display())))
}

/// Builds the observable in the computational basis. `default_seed` is used
/// by the random-diagonal preset when the config does not fix one.
pub fn build_observable(cfg: &ObservableConfig, cs: &CompositeSystem, default_seed: u64) -> RunnerResult<HermitianOperator> {
    if let Some(path) = &cfg.file {
        return load_matrix(path, cs.dim());
    }
    let id_r = ComplexMatrix::identity(cs.m())?;
    let op = match cfg.preset.expect("validated config has a preset or a file") {
        Preset::Identity => HermitianOperator::identity(cs.dim())?,
        Preset::H0 => cs.h0().clone(),
        Preset::HS => HermitianOperator::new(kron(cs.h_s().matrix(), &id_r)?)?,
        Preset::Projector => {
            let alpha = cs.subsystem_s().vectors().column(cfg.level.unwrap_or(0));
            let p = ComplexMatrix::from_fn(cs.n(), cs.n(), |i, j| alpha[i] * alpha[j].conj())?;
            HermitianOperator::new(kron(&p, &id_r)?)?
        }
        Preset::RandomDiagonal => {
            let d = balanced_signs(cs.dim(), cfg.seed.unwrap_or(default_seed));
            cs.from_product_basis(&HermitianOperator::from_real_diagonal(&d)?)?
        }
    };
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_signs_are_traceless_and_seeded() {
        for dim in [1, 2, 7, 64] {
            let v = balanced_signs(dim, 3);
            assert_eq!(v.len(), dim);
            assert_eq!(v.iter().sum::<f64>(), 0.0);
            assert_eq!(v, balanced_signs(dim, 3));
        }
        assert_ne!(balanced_signs(64, 3), balanced_signs(64, 4));
    }
}
