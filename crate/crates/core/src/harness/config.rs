use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{JacobianConvention, MechanismKind};
use crate::models::{
    BernoulliToy, LinRegNonConjugate, LocScaleNormal, LogisticBeta, ModelSpec,
};
use crate::pf::{KernelSpec, PfOptions, RestartPoint, Schedule, WeightDenominator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    DpPf,
    DpRejectAbc,
}

impl Sampler {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DpPf => "dp-pf",
            Self::DpRejectAbc => "dp-reject-abc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

/// Which experiment a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Coverage,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismConfig {
    pub kind: MechanismKind,
    /// Defaults to the model's summary sensitivity.
    pub sensitivity: Option<f64>,
    pub convention: JacobianConvention,
}

impl Default for MechanismConfig {
    fn default() -> Self {
        Self {
            kind: MechanismKind::Laplace,
            sensitivity: None,
            convention: JacobianConvention::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulePreset {
    /// Chosen from the model family.
    #[default]
    Default,
    Locscale,
    Regression,
    Logistic,
    Linear,
    Rejection,
}

/// Schedule relative to the target budget: `ε_t = fractions[t] · ε`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub preset: SchedulePreset,
    /// Iteration count for the `linear` preset.
    pub iterations: Option<usize>,
    pub fractions: Option<Vec<f64>>,
    pub kernel: Option<KernelSpec>,
    /// `q_t = q_fractions[t] · q` (objective perturbation only).
    pub q_fractions: Option<Vec<f64>>,
    /// Iteration 1 proposes from the prior.
    pub prior_first: Option<bool>,
}

impl ScheduleConfig {
    /// Concrete schedule for target budget `epsilon` (and noise fraction `q`).
    pub fn build(&self, model: &ModelSpec, epsilon: f64, q: Option<f64>) -> Result<Schedule> {
        let preset = match self.preset {
            SchedulePreset::Default => match model {
                ModelSpec::BernoulliToy(_) => SchedulePreset::Linear,
                ModelSpec::LocscaleNormal(_) => SchedulePreset::Locscale,
                ModelSpec::LinregConjugate(_) | ModelSpec::LinregNonconjugate(_) => SchedulePreset::Regression,
                ModelSpec::LogisticBeta(_) => SchedulePreset::Logistic,
            },
            p => p,
        };
        let mut s = match preset {
            SchedulePreset::Locscale => Schedule::locscale(epsilon),
            SchedulePreset::Regression => Schedule::regression(epsilon),
            SchedulePreset::Logistic => Schedule::logistic(
                epsilon,
                q.ok_or_else(|| Error::Config("logistic schedule needs q".into()))?,
            ),
            SchedulePreset::Linear => Schedule::linear(epsilon, self.iterations.unwrap_or(4), KernelSpec::adaptive()),
            SchedulePreset::Rejection => Schedule::rejection(epsilon),
            SchedulePreset::Default => unreachable!("resolved above"),
        };
        if let Some(fr) = &self.fractions {
            s.epsilons = fr
                .iter()
                .enumerate()
                .map(|(i, f)| if i + 1 == fr.len() && *f == 1.0 { epsilon } else { f * epsilon })
                .collect();
            if let KernelSpec::Fixed { scales } = &s.kernel {
                if scales.len() != fr.len() {
                    s.kernel = KernelSpec::geometric(1.0, 0.1, fr.len());
                }
            }
            if let Some(qs) = &s.q {
                if qs.len() != fr.len() {
                    s.q = None;
                }
            }
        }
        if let Some(k) = &self.kernel {
            s.kernel = k.clone();
        }
        if let Some(p) = self.prior_first {
            s.prior_first = p;
        }
        if let Some(qf) = &self.q_fractions {
            let q = q.ok_or_else(|| Error::Config("q_fractions given without q".into()))?;
            s.q = Some(qf.iter().map(|f| f * q).collect());
        }
        s.validate(epsilon)?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerOptions {
    pub restart: RestartPoint,
    pub denominator: WeightDenominator,
    pub max_attempts: u64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            restart: RestartPoint::default(),
            denominator: WeightDenominator::default(),
            max_attempts: 10_000_000,
        }
    }
}

impl SamplerOptions {
    pub fn pf_options(&self, particles: usize, master_seed: u64, replicate: u64) -> PfOptions {
        PfOptions {
            particles,
            master_seed,
            replicate,
            restart: self.restart,
            denominator: self.denominator,
            max_attempts: self.max_attempts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageConfig {
    pub particle_grid: Vec<usize>,
    pub runs: usize,
    pub epsilon: f64,
    /// Fixed release; drawn once from the data lane when absent.
    pub s_dp: Option<Vec<f64>>,
    /// Value the intervals should cover; the exact posterior mean of the toy
    /// model when absent.
    pub truth: Option<f64>,
    /// θ-coordinate whose interval is scored.
    pub coordinate: usize,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            particle_grid: vec![100, 500, 2000],
            runs: 200,
            epsilon: 1.0,
            s_dp: Some(vec![7.0]),
            truth: None,
            coordinate: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub n: usize,
    pub epsilon: f64,
    pub q: f64,
    /// Budget share of the coefficient release.
    pub share: f64,
    pub sensitivity: f64,
    pub particles: usize,
    pub runs: usize,
    /// `false` replaces the private analysis with the non-private posterior.
    pub private: bool,
    pub curve_points: usize,
    /// Fraction of sampled curves kept in the central band.
    pub central: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            epsilon: 0.5,
            q: 0.5,
            share: 0.9,
            sensitivity: 2.0,
            particles: 200,
            runs: 1,
            private: true,
            curve_points: 101,
            central: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// A full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub epsilons: Vec<f64>,
    pub ns: Vec<usize>,
    pub particles: usize,
    #[serde(default = "default_samplers")]
    pub samplers: Vec<Sampler>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Parameter names to report; all when absent.
    #[serde(default)]
    pub report: Option<Vec<String>>,
    #[serde(default)]
    pub workers: Option<usize>,
    pub model: ModelSpec,
    #[serde(default)]
    pub mechanism: MechanismConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub sampler: SamplerOptions,
    #[serde(default)]
    pub coverage: CoverageConfig,
    #[serde(default)]
    pub logistic: LogisticConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Four-step tempering used by the desk preset; starting low keeps the
/// first (prior-proposal) step cheap at n = 1000.
/// Records in the desk logistic preset.
pub const DESK_LOGISTIC_N: usize = 200;

pub const DESK_LOCSCALE_FRACTIONS: [f64; 4] = [0.05, 0.15, 0.4, 1.0];

fn default_seed() -> u64 {
    20_240_601
}

fn default_replicates() -> usize {
    30
}

fn default_samplers() -> Vec<Sampler> {
    vec![Sampler::DpPf]
}

fn default_alpha() -> f64 {
    0.05
}

impl ExperimentConfig {
    /// Built-in configuration for a command at a preset scale.
    pub fn preset(command: Command, preset: Preset) -> Self {
        let paper = preset == Preset::Paper;
        let base = |model: ModelSpec| Self {
            master_seed: default_seed(),
            replicates: if paper { 100 } else { 30 },
            epsilons: vec![1.0],
            ns: vec![100],
            particles: 500,
            samplers: default_samplers(),
            alpha: default_alpha(),
            report: None,
            workers: None,
            model,
            mechanism: MechanismConfig::default(),
            schedule: ScheduleConfig::default(),
            sampler: SamplerOptions::default(),
            coverage: CoverageConfig::default(),
            logistic: LogisticConfig::default(),
            output: OutputConfig::default(),
        };
        match command {
            Command::Simulate => {
                let mut c = base(ModelSpec::LocscaleNormal(LocScaleNormal::default()));
                if paper {
                    c.epsilons = vec![0.1, 0.5, 1.0, 2.0];
                    c.ns = vec![100, 1000];
                    c.particles = 1000;
                    c.samplers = vec![Sampler::DpPf, Sampler::DpRejectAbc];
                } else {
                    c.epsilons = vec![1.0, 2.0];
                    c.ns = vec![100, 1000];
                    c.particles = 200;
                    c.schedule.fractions = Some(DESK_LOCSCALE_FRACTIONS.to_vec());
                }
                c
            }
            Command::Coverage => {
                let mut c = if paper {
                    let mut c = base(ModelSpec::LinregNonconjugate(LinRegNonConjugate::new(500)));
                    c.coverage = CoverageConfig {
                        particle_grid: vec![100, 200, 300, 500, 1000, 1200, 1400, 1600],
                        runs: 100,
                        epsilon: 1.0,
                        s_dp: Some(vec![0.0, 0.0, 50.0, 0.0, 50.0]),
                        truth: Some(0.0),
                        coordinate: 1,
                    };
                    c
                } else {
                    base(ModelSpec::BernoulliToy(BernoulliToy::new(20)))
                };
                c.ns = vec![c.model.as_model().n()];
                c.epsilons = vec![c.coverage.epsilon];
                c
            }
            Command::Logistic => {
                let mut c = base(ModelSpec::LogisticBeta(LogisticBeta::default()));
                c.mechanism.kind = MechanismKind::ObjectivePerturbation;
                c.epsilons = vec![0.5];
                c.ns = vec![1000];
                c.particles = 200;
                if paper {
                    c.logistic.runs = 10;
                } else {
                    c.logistic.n = DESK_LOGISTIC_N;
                    c.ns = vec![DESK_LOGISTIC_N];
                    c.schedule.kernel = Some(KernelSpec::adaptive());
                    c.schedule.q_fractions = Some((1..=10).map(|t| t as f64 / 10.0).collect());
                }
                c
            }
        }
    }

    /// Parse TOML text layered over a preset: top-level keys in the text
    /// override the preset's, and any table in the text replaces the preset's
    /// table of the same name.
    pub fn from_toml_over(text: &str, command: Command, preset: Preset) -> Result<Self> {
        let file: toml::Table = toml::from_str(text)?;
        let base = toml::Table::try_from(Self::preset(command, preset))
            .map_err(|e| Error::Config(format!("preset serialization failed: {e}")))?;
        let mut merged = base;
        for (k, v) in file {
            merged.insert(k, v);
        }
        let cfg: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate(command)?;
        Ok(cfg)
    }

    pub fn load(path: &Path, command: Command, preset: Preset) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_over(&text, command, preset)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The model with sample size `n`.
    pub fn model_with_n(&self, n: usize) -> ModelSpec {
        let mut m = self.model.clone();
        match &mut m {
            ModelSpec::BernoulliToy(x) => x.n = n,
            ModelSpec::LocscaleNormal(x) => x.n = n,
            ModelSpec::LinregConjugate(x) => x.n = n,
            ModelSpec::LinregNonconjugate(x) => x.n = n,
            ModelSpec::LogisticBeta(x) => x.n = n,
        }
        m
    }

    /// Indices of reported θ-coordinates.
    pub fn report_indices(&self) -> Result<Vec<usize>> {
        let names = self.model.as_model().param_names();
        match &self.report {
            None => Ok((0..names.len()).collect()),
            Some(sel) => sel
                .iter()
                .map(|s| {
                    names
                        .iter()
                        .position(|n| n == s)
                        .ok_or_else(|| Error::Config(format!("unknown parameter `{s}` in report; known: {names:?}")))
                })
                .collect(),
        }
    }

    pub fn sensitivity(&self) -> f64 {
        self.mechanism
            .sensitivity
            .unwrap_or_else(|| self.model.as_model().sensitivity())
    }

    pub fn validate(&self, command: Command) -> Result<()> {
        let cfg = |msg: &str| Err(Error::Config(msg.to_string()));
        self.model.validate()?;
        if self.epsilons.is_empty() || self.ns.is_empty() {
            return cfg("epsilons and ns must be nonempty");
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return cfg("epsilons must be positive and finite");
        }
        if self.ns.contains(&0) {
            return cfg("ns must be positive");
        }
        if self.particles < 2 {
            return cfg("particles must be at least 2");
        }
        if self.replicates < 1 {
            return cfg("replicates must be at least 1");
        }
        if self.samplers.is_empty() {
            return cfg("samplers must be nonempty");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return cfg("alpha must lie in (0, 1)");
        }
        if self.workers == Some(0) {
            return cfg("workers must be positive");
        }
        if !(self.sensitivity() > 0.0) {
            return cfg("sensitivity must be positive");
        }
        if self.sampler.max_attempts == 0 {
            return cfg("max_attempts must be positive");
        }
        self.report_indices()?;
        match command {
            Command::Simulate => {
                if self.mechanism.kind == MechanismKind::ObjectivePerturbation {
                    return cfg("objective perturbation is only available through the logistic command");
                }
                if matches!(self.model, ModelSpec::LogisticBeta(_)) {
                    return cfg("the logistic-beta model runs through the logistic command");
                }
                for &e in &self.epsilons {
                    self.schedule.build(&self.model, e, None)?;
                }
            }
            Command::Coverage => {
                let c = &self.coverage;
                if c.particle_grid.is_empty() || c.particle_grid.iter().any(|&n| n < 2) {
                    return cfg("coverage particle_grid must be nonempty with entries >= 2");
                }
                if c.runs < 1 {
                    return cfg("coverage runs must be at least 1");
                }
                if c.coordinate >= self.model.as_model().dim() {
                    return cfg("coverage coordinate exceeds the θ-dimension");
                }
                if c.truth.is_none() && !matches!(self.model, ModelSpec::BernoulliToy(_)) {
                    return cfg("coverage without an explicit truth needs the bernoulli-toy model");
                }
                if let Some(s) = &c.s_dp {
                    let m = self.model.as_model();
                    let k = m.summary_stats(&[]).len();
                    if s.len() != k {
                        return Err(Error::Config(format!("coverage s_dp has length {}, model summaries have {k}", s.len())));
                    }
                }
                if matches!(self.model, ModelSpec::LogisticBeta(_)) {
                    return cfg("coverage does not support the logistic-beta model");
                }
                self.schedule.build(&self.model, c.epsilon, None)?;
            }
            Command::Logistic => {
                let l = &self.logistic;
                if !matches!(self.model, ModelSpec::LogisticBeta(_)) {
                    return cfg("the logistic command needs the logistic-beta model");
                }
                if l.n < 2 || l.particles < 2 || l.runs < 1 || l.curve_points < 2 {
                    return cfg("logistic n, particles, runs and curve_points must be at least 2, 2, 1, 2");
                }
                if !(l.share > 0.0 && l.share < 1.0) {
                    return cfg("logistic share must lie in (0, 1)");
                }
                if !(l.central > 0.0 && l.central <= 1.0) {
                    return cfg("logistic central must lie in (0, 1]");
                }
                if !(l.sensitivity > 0.0) {
                    return cfg("logistic sensitivity must be positive");
                }
                crate::mechanism::MechanismSpec::objective_perturbation(
                    l.sensitivity,
                    l.share * l.epsilon,
                    l.q,
                    0.5,
                )?;
                self.schedule.build(&self.model, l.epsilon, Some(l.q))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for command in [Command::Simulate, Command::Coverage, Command::Logistic] {
            for preset in [Preset::Desk, Preset::Paper] {
                let c = ExperimentConfig::preset(command, preset);
                c.validate(command).unwrap();
                let back = ExperimentConfig::from_toml_over(&c.to_toml(), command, preset).unwrap();
                assert_eq!(back, c);
            }
        }
    }

    #[test]
    fn file_overrides_preset() {
        let text = "master_seed = 9\nparticles = 50\n[model]\nname = \"bernoulli-toy\"\nn = 10\n";
        let c = ExperimentConfig::from_toml_over(text, Command::Simulate, Preset::Desk).unwrap();
        assert_eq!(c.master_seed, 9);
        assert_eq!(c.particles, 50);
        assert_eq!(c.model.name(), "bernoulli-toy");
        assert_eq!(c.epsilons, vec![1.0, 2.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "particle = 50\n",
            "[model]\nname = \"bernoulli-toy\"\nsize = 3\n",
            "[sampler]\nretries = 2\n",
        ] {
            let e = ExperimentConfig::from_toml_over(text, Command::Simulate, Preset::Desk).unwrap_err();
            assert!(e.is_config(), "{text}: {e}");
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "particles = 1\n",
            "epsilons = []\n",
            "replicates = 0\n",
            "[schedule]\nfractions = [0.5, 0.9]\n",
            "[schedule]\nfractions = [1.0, 0.5, 1.0]\n",
            "report = [\"nu\"]\n",
        ] {
            assert!(ExperimentConfig::from_toml_over(text, Command::Simulate, Preset::Desk).is_err(), "{text}");
        }
    }

    #[test]
    fn fractions_scale_the_target() {
        let c = ScheduleConfig {
            preset: SchedulePreset::Linear,
            fractions: Some(vec![0.25, 0.5, 1.0]),
            ..ScheduleConfig::default()
        };
        let s = c
            .build(&ModelSpec::BernoulliToy(BernoulliToy::default()), 2.0, None)
            .unwrap();
        assert_eq!(s.epsilons, vec![0.5, 1.0, 2.0]);
    }

    #[test]
    fn report_selects_named_parameters() {
        let mut c = ExperimentConfig::preset(Command::Simulate, Preset::Desk);
        c.report = Some(vec!["sigma2".into()]);
        assert_eq!(c.report_indices().unwrap(), vec![1]);
    }
}
