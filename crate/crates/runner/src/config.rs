//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{RunnerError, RunnerResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EnsembleVsMicro,
    VarianceScaling,
    TimeAverage,
    EthDiagnostics,
    SubsystemGibbs,
}

impl Experiment {
    pub fn id(self) -> &'static str {
        match self {
            Experiment::EnsembleVsMicro => "ensemble-vs-micro",
            Experiment::VarianceScaling => "variance-scaling",
            Experiment::TimeAverage => "time-average",
            Experiment::EthDiagnostics => "eth-diagnostics",
            Experiment::SubsystemGibbs => "subsystem-gibbs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    HaarRotation,
    ExplicitHamiltonian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    #[default]
    RealSymmetric,
    ComplexHermitian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub center: f64,
    pub width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Identity,
    H0,
    /// `H_S (x) 1_R`.
    HS,
    /// `|alpha_level><alpha_level| (x) 1_R` for an eigenstate of `H_S`.
    Projector,
    /// Balanced, shuffled `+-1` diagonal in the product basis.
    RandomDiagonal,
}

/// Either a preset or a JSON matrix file (`{"re": [[..]], "im": [[..]]}`,
/// `im` optional) in the computational basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for ObservableConfig {
    fn default() -> Self {
        Self { preset: Some(Preset::RandomDiagonal), level: None, seed: None, file: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SubsystemKind {
    /// `H_S = diag(0, 1, .., n-1)`, `H_R = diag(k / m)`.
    #[default]
    Ladder,
    /// Independent GOE draws: `H_S` with unit scale, `H_R` with scale `1/m`.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SubsystemConfig {
    #[serde(default)]
    pub kind: SubsystemKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub symmetry: Symmetry,
    /// Keep only couplings with `|E_i - E_j| <= band` between product states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Final time. Defaults to `gap_multiple / (min level gap)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_multiple: Option<f64>,
    /// Number of intervals. Defaults to a step of `4 / (spectral width)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Points of the series written to the output table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BinsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub mode: Mode,
    pub realizations: usize,
    pub seed: u64,
    /// Eigenstate index for ensemble and Gibbs experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenstate: Option<usize>,
    /// Values of `m` scanned by variance-scaling and subsystem-gibbs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    /// Product-basis index of the quench initial state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default)]
    pub observable: ObservableConfig,
    #[serde(default)]
    pub subsystems: SubsystemConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<BinsConfig>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> RunnerError {
    RunnerError::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> RunnerResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> RunnerResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> RunnerResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunnerError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        // observable files are resolved next to the config
        if let (Some(file), Some(dir)) = (cfg.observable.file.as_mut(), path.parent()) {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> RunnerResult<String> {
        toml::to_string(self).map_err(|e| RunnerError::Config(e.to_string()))
    }

    /// All sizes `m` the experiment touches.
    pub fn scanned_sizes(&self) -> Vec<usize> {
        match (self.experiment, &self.sizes) {
            (Experiment::VarianceScaling | Experiment::SubsystemGibbs, Some(s)) => s.clone(),
            _ => vec![self.m],
        }
    }

    pub fn validate(&self) -> RunnerResult<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        if self.m == 0 {
            return Err(invalid("m", "must be positive"));
        }
        positive("epsilon", self.epsilon)?;
        if self.realizations == 0 {
            return Err(invalid("realizations", "must be positive"));
        }
        if matches!(self.experiment, Experiment::EnsembleVsMicro | Experiment::VarianceScaling) && self.realizations < 2 {
            return Err(invalid("realizations", "need at least 2 for a variance"));
        }
        if let Some(sizes) = &self.sizes {
            if sizes.is_empty() || sizes.contains(&0) {
                return Err(invalid("sizes", "must be a non-empty list of positive counts"));
            }
            if self.experiment == Experiment::VarianceScaling && sizes.len() < 2 {
                return Err(invalid("sizes", "variance-scaling needs at least two sizes"));
            }
        }
        let budget = ethlab_core::system::MAX_COMPOSITE_DIM;
        for m in self.scanned_sizes() {
            match self.n.checked_mul(m) {
                Some(d) if d <= budget => {}
                _ => return Err(invalid("m", format!("composite dimension n*m for m = {m} exceeds {budget}"))),
            }
            if let Some(i) = self.eigenstate {
                if i >= self.n * m {
                    return Err(invalid("eigenstate", format!("{i} out of range for dimension {}", self.n * m)));
                }
            }
        }
        if let Some(j) = self.initial_state {
            if j >= self.n * self.m {
                return Err(invalid("initial_state", format!("{j} out of range for dimension {}", self.n * self.m)));
            }
        }
        if let Some(w) = &self.window {
            if !w.center.is_finite() {
                return Err(invalid("window.center", "must be finite"));
            }
            positive("window.width", w.width)?;
        }
        let obs = &self.observable;
        match (obs.preset, &obs.file) {
            (Some(_), Some(_)) => return Err(invalid("observable", "set either preset or file, not both")),
            (None, None) => return Err(invalid("observable", "needs a preset or a file")),
            _ => {}
        }
        if obs.level.is_some() && obs.preset != Some(Preset::Projector) {
            return Err(invalid("observable.level", "only applies to the projector preset"));
        }
        if let Some(l) = obs.level {
            if l >= self.n {
                return Err(invalid("observable.level", format!("{l} out of range for n = {}", self.n)));
            }
        }
        if obs.seed.is_some() && obs.preset != Some(Preset::RandomDiagonal) {
            return Err(invalid("observable.seed", "only applies to the random-diagonal preset"));
        }
        if let Some(b) = self.perturbation.band {
            positive("perturbation.band", b)?;
        }
        if let Some(t) = &self.time {
            if let Some(v) = t.t_max {
                positive("time.t_max", v)?;
            }
            if let Some(v) = t.gap_multiple {
                positive("time.gap_multiple", v)?;
            }
            if t.t_max.is_some() && t.gap_multiple.is_some() {
                return Err(invalid("time", "set either t_max or gap_multiple, not both"));
            }
            if t.steps == Some(0) {
                return Err(invalid("time.steps", "must be positive"));
            }
            if matches!(t.samples, Some(0 | 1)) {
                return Err(invalid("time.samples", "must be at least 2"));
            }
        }
        if let Some(b) = &self.bins {
            if b.energy == Some(0) || b.omega == Some(0) {
                return Err(invalid("bins", "counts must be positive"));
            }
        }
        Ok(())
    }
}

/// Config fields a sweep may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    N,
    M,
    Epsilon,
    Realizations,
    Eigenstate,
    WindowWidth,
    Band,
}

impl SweepAxis {
    pub fn parse(name: &str) -> RunnerResult<Self> {
        Ok(match name {
            "n" => SweepAxis::N,
            "m" => SweepAxis::M,
            "epsilon" => SweepAxis::Epsilon,
            "realizations" => SweepAxis::Realizations,
            "eigenstate" => SweepAxis::Eigenstate,
            "window.width" => SweepAxis::WindowWidth,
            "perturbation.band" => SweepAxis::Band,
            other => return Err(invalid("axis", format!("`{other}` is not a sweepable numeric field"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::M => "m",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Realizations => "realizations",
            SweepAxis::Eigenstate => "eigenstate",
            SweepAxis::WindowWidth => "window.width",
            SweepAxis::Band => "perturbation.band",
        }
    }

    /// Copy of `base` with this axis set to `value`, validated.
    pub fn apply(self, base: &ExperimentConfig, value: &str) -> RunnerResult<ExperimentConfig> {
        let mut cfg = base.clone();
        let count = || -> RunnerResult<usize> {
            value.parse().map_err(|_| invalid(self.name(), format!("`{value}` is not a count")))
        };
        let real = || -> RunnerResult<f64> {
            value.parse().map_err(|_| invalid(self.name(), format!("`{value}` is not a number")))
        };
        match self {
            SweepAxis::N => cfg.n = count()?,
            SweepAxis::M => {
                cfg.m = count()?;
                cfg.sizes = None;
            }
            SweepAxis::Epsilon => cfg.epsilon = real()?,
            SweepAxis::Realizations => cfg.realizations = count()?,
            SweepAxis::Eigenstate => cfg.eigenstate = Some(count()?),
            SweepAxis::WindowWidth => {
                let w = cfg.window.as_mut().ok_or_else(|| invalid("window.width", "base config has no window"))?;
                w.width = real()?;
            }
            SweepAxis::Band => cfg.perturbation.band = Some(real()?),
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
