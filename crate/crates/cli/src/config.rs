//! Experiment configuration: a strict TOML schema (unknown keys are errors)
//! and its assembly into problems, sets and optimizer runs.

use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use unixgrad::baselines::BaselineKind;
use unixgrad::data::{PlantedL1Params, SyntheticLsParams};
use unixgrad::geometry::{BregmanGeometry, FeasibleSet};
use unixgrad::oracles::OracleMode;
use unixgrad::solver::{OptimizerKind, SolverVariant};

/// Top-level experiment configuration. See the repository README for the
/// documented schema; unknown keys anywhere are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<SetSpec>,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    pub run: RunSpec,
    #[serde(rename = "optimizer")]
    pub optimizers: Vec<OptimizerSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemSpec {
    #[serde(rename = "synthetic-ls")]
    SyntheticLs(SyntheticLsSpec),
    Libsvm(LibsvmSpec),
    PlantedL1(PlantedL1Spec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticLsSpec {
    pub n: usize,
    pub d: usize,
    #[serde(default = "default_entry_sigma")]
    pub entry_sigma: f64,
    #[serde(default = "default_noise_variance")]
    pub noise_variance: f64,
    /// Shrink the ball below the unconstrained optimum norm.
    #[serde(default = "default_true")]
    pub boundary: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default)]
    pub data_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibsvmSpec {
    pub path: PathBuf,
    pub lambda: f64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_true")]
    pub scale_features: bool,
    #[serde(default)]
    pub split_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedL1Spec {
    pub n: usize,
    pub d: usize,
    pub radius: f64,
    #[serde(default = "default_kink_scale")]
    pub kink_scale: f64,
    #[serde(default = "default_kink_rows")]
    pub kink_rows: usize,
    #[serde(default = "default_true")]
    pub boundary: bool,
    #[serde(default)]
    pub data_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetSpec {
    L2Ball {
        radius: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Simplex {
        #[serde(default)]
        floor: f64,
    },
}

impl SetSpec {
    pub fn build(&self, dim: usize) -> anyhow::Result<FeasibleSet> {
        Ok(match self {
            SetSpec::L2Ball { radius, center } => {
                let center = match center {
                    Some(c) => {
                        anyhow::ensure!(c.len() == dim, "ball center has dimension {}, problem needs {dim}", c.len());
                        Array1::from_vec(c.clone())
                    }
                    None => Array1::zeros(dim),
                };
                FeasibleSet::l2_ball(center, *radius)?
            }
            SetSpec::Box { lower, upper } => {
                anyhow::ensure!(lower.len() == dim && upper.len() == dim, "box bounds must have dimension {dim}");
                FeasibleSet::box_set(Array1::from_vec(lower.clone()), Array1::from_vec(upper.clone()))?
            }
            SetSpec::Simplex { floor } => FeasibleSet::simplex(dim, *floor)?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default)]
    pub kind: GeometryKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter_override: Option<f64>,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            kind: GeometryKind::Euclidean,
            diameter_override: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    #[default]
    Euclidean,
    NegativeEntropy,
}

impl GeometryKind {
    pub fn to_core(self) -> BregmanGeometry {
        match self {
            Self::Euclidean => BregmanGeometry::Euclidean,
            Self::NegativeEntropy => BregmanGeometry::NegativeEntropy,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum OracleSpec {
    Deterministic,
    MiniBatch { batch_size: usize },
    AdditiveNoise { sigma: f64 },
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self::Deterministic
    }
}

impl OracleSpec {
    pub fn to_core(self) -> OracleMode {
        match self {
            Self::Deterministic => OracleMode::Deterministic,
            Self::MiniBatch { batch_size } => OracleMode::MiniBatch { batch_size },
            Self::AdditiveNoise { sigma } => OracleMode::AdditiveNoise { sigma },
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Self::Deterministic)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub horizon: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub checkpoints: CheckpointSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CheckpointSpec {
    /// The name of a built-in schedule; only `"pow2"` is defined.
    Named(String),
    Explicit(Vec<usize>),
}

impl Default for CheckpointSpec {
    fn default() -> Self {
        Self::Named("pow2".to_string())
    }
}

impl CheckpointSpec {
    pub fn resolve(&self, horizon: usize) -> anyhow::Result<Vec<usize>> {
        match self {
            Self::Named(name) if name == "pow2" => {
                Ok(unixgrad::diagnostics::checkpoint_schedule(horizon))
            }
            Self::Named(name) => anyhow::bail!("unknown checkpoint schedule `{name}`"),
            Self::Explicit(points) => {
                anyhow::ensure!(!points.is_empty(), "checkpoint list is empty");
                anyhow::ensure!(
                    points.windows(2).all(|w| w[0] < w[1]),
                    "checkpoints must be strictly increasing"
                );
                anyhow::ensure!(
                    *points.last().unwrap() <= horizon,
                    "checkpoint beyond the horizon"
                );
                anyhow::ensure!(points[0] >= 1, "checkpoints start at 1");
                Ok(points.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub kind: String,
    /// SGD step scale / AMSGrad step; grid-tuned when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// AdaGrad scalar diameter; defaults to the resolved Bregman diameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// A resolved optimizer: either a solver variant or a baseline rule.
#[derive(Debug, Clone)]
pub enum ResolvedOptimizer {
    Solver(SolverVariant),
    Baseline(BaselineKind),
    /// Baseline whose step must be grid-tuned before running.
    TunedBaseline(TunedKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TunedKind {
    Sgd,
    AmsGrad,
}

impl OptimizerSpec {
    pub fn kind(&self) -> anyhow::Result<OptimizerKind> {
        OptimizerKind::from_name(&self.kind)
            .ok_or_else(|| anyhow::anyhow!("unknown optimizer kind `{}`", self.kind))
    }

    fn reject_fields(&self, allowed: &[&str]) -> anyhow::Result<()> {
        let present: &[(&str, bool)] = &[
            ("step", self.step.is_some()),
            ("diameter", self.diameter.is_some()),
            ("beta1", self.beta1.is_some()),
            ("beta2", self.beta2.is_some()),
            ("epsilon", self.epsilon.is_some()),
        ];
        for (name, is_set) in present {
            if *is_set && !allowed.contains(name) {
                anyhow::bail!("field `{name}` does not apply to optimizer `{}`", self.kind);
            }
        }
        Ok(())
    }

    /// Resolves the entry against the run's Bregman diameter.
    pub fn resolve(&self, bregman_diameter: f64) -> anyhow::Result<ResolvedOptimizer> {
        Ok(match self.kind()? {
            OptimizerKind::UniXGrad => {
                self.reject_fields(&[])?;
                ResolvedOptimizer::Solver(SolverVariant::UniXGrad)
            }
            OptimizerKind::MirrorProx => {
                self.reject_fields(&[])?;
                ResolvedOptimizer::Solver(SolverVariant::MirrorProx)
            }
            OptimizerKind::OptimisticMd => {
                self.reject_fields(&[])?;
                ResolvedOptimizer::Solver(SolverVariant::OptimisticMD)
            }
            OptimizerKind::Sgd => {
                self.reject_fields(&["step"])?;
                match self.step {
                    Some(step) => ResolvedOptimizer::Baseline(BaselineKind::Sgd { step_scale: step }),
                    None => ResolvedOptimizer::TunedBaseline(TunedKind::Sgd),
                }
            }
            OptimizerKind::AdaGradScalar => {
                self.reject_fields(&["diameter"])?;
                ResolvedOptimizer::Baseline(BaselineKind::AdaGradScalar {
                    diameter: self.diameter.unwrap_or(bregman_diameter),
                })
            }
            OptimizerKind::AmsGrad => {
                self.reject_fields(&["step", "beta1", "beta2", "epsilon"])?;
                match self.step {
                    Some(step) => ResolvedOptimizer::Baseline(BaselineKind::AmsGrad {
                        step,
                        beta1: self.beta1.unwrap_or(0.9),
                        beta2: self.beta2.unwrap_or(0.999),
                        epsilon: self.epsilon.unwrap_or(1e-8),
                    }),
                    None => ResolvedOptimizer::TunedBaseline(TunedKind::AmsGrad),
                }
            }
        })
    }
}

/// Parses a config file; a manifest (carrying a `[config]` table) is
/// accepted transparently so runs can be replayed from their manifests.
pub fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let as_value: toml::Value = toml::from_str(&text)?;
    let config_value = match as_value.get("config") {
        Some(embedded) => embedded.clone(),
        None => as_value,
    };
    let config: ExperimentConfig = config_value.try_into()?;
    validate(&config)?;
    Ok(config)
}

pub fn validate(config: &ExperimentConfig) -> anyhow::Result<()> {
    anyhow::ensure!(!config.optimizers.is_empty(), "optimizer list is empty");
    anyhow::ensure!(!config.run.seeds.is_empty(), "seeds list is empty");
    anyhow::ensure!(config.run.horizon >= 1, "horizon must be at least 1");
    let mut kinds = Vec::new();
    for opt in &config.optimizers {
        let kind = opt.kind()?;
        anyhow::ensure!(
            !kinds.contains(&kind),
            "optimizer `{}` listed twice; outputs would collide",
            kind
        );
        kinds.push(kind);
    }
    config.run.checkpoints.resolve(config.run.horizon)?;
    match &config.problem {
        ProblemSpec::SyntheticLs(spec) => {
            if spec.boundary && config.set.is_some() {
                anyhow::bail!(
                    "`boundary = true` derives its own ball; drop the [set] table or set boundary = false"
                );
            }
            if !spec.boundary && spec.radius.is_none() && config.set.is_none() {
                anyhow::bail!("non-boundary synthetic-ls needs a radius or a [set] table");
            }
        }
        ProblemSpec::PlantedL1(_) => {
            anyhow::ensure!(
                config.set.is_none(),
                "planted-l1 defines its own ball; drop the [set] table"
            );
        }
        ProblemSpec::Libsvm(spec) => {
            anyhow::ensure!(config.set.is_some(), "libsvm problems need a [set] table");
            anyhow::ensure!(
                spec.train_fraction > 0.0 && spec.train_fraction < 1.0,
                "train fraction must lie in (0, 1)"
            );
        }
    }
    Ok(())
}

impl SyntheticLsSpec {
    pub fn to_params(&self) -> SyntheticLsParams {
        SyntheticLsParams {
            n: self.n,
            d: self.d,
            entry_sigma: self.entry_sigma,
            noise_variance: self.noise_variance,
            radius: self.radius,
            boundary: self.boundary,
            boundary_shrink: 0.8,
            seed: self.data_seed,
        }
    }
}

impl PlantedL1Spec {
    pub fn to_params(&self) -> PlantedL1Params {
        PlantedL1Params {
            n: self.n,
            d: self.d,
            radius: self.radius,
            kink_scale: self.kink_scale,
            kink_rows: self.kink_rows,
            boundary: self.boundary,
            seed: self.data_seed,
        }
    }
}

fn default_entry_sigma() -> f64 {
    1.0
}

fn default_noise_variance() -> f64 {
    1e-3
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_kink_scale() -> f64 {
    0.1
}

fn default_kink_rows() -> usize {
    3
}

fn default_true() -> bool {
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[problem.synthetic-ls]
n = 50
d = 10

[run]
horizon = 64
seeds = [0]

[[optimizer]]
kind = "unixgrad"
"#;

    fn parse(text: &str) -> anyhow::Result<ExperimentConfig> {
        let value: toml::Value = toml::from_str(text)?;
        let config: ExperimentConfig = value.try_into()?;
        validate(&config)?;
        Ok(config)
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config = parse(MINIMAL).unwrap();
        assert_eq!(config.geometry.kind, GeometryKind::Euclidean);
        assert_eq!(config.oracle, OracleSpec::Deterministic);
        assert_eq!(
            config.run.checkpoints.resolve(64).unwrap(),
            vec![1, 2, 4, 8, 16, 32, 64]
        );
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = MINIMAL.replace("horizon = 64", "horizon = 64\ntypo_key = 1");
        assert!(parse(&text).is_err());
        let text = MINIMAL.replace("n = 50", "n = 50\nbogus = 2");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn empty_optimizer_list_is_rejected() {
        let text = MINIMAL.replace("[[optimizer]]\nkind = \"unixgrad\"\n", "");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn duplicate_optimizers_are_rejected() {
        let text = format!("{MINIMAL}\n[[optimizer]]\nkind = \"unixgrad\"\n");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn irrelevant_hyperparameters_are_rejected() {
        let config = parse(&MINIMAL.replace(
            "kind = \"unixgrad\"",
            "kind = \"unixgrad\"\nstep = 0.5",
        ))
        .unwrap();
        assert!(config.optimizers[0].resolve(1.0).is_err());
    }

    #[test]
    fn explicit_checkpoints_are_validated() {
        let good = MINIMAL.replace("seeds = [0]", "seeds = [0]\ncheckpoints = [8, 16, 64]");
        assert!(parse(&good).is_ok());
        let beyond = MINIMAL.replace("seeds = [0]", "seeds = [0]\ncheckpoints = [8, 128]");
        assert!(parse(&beyond).is_err());
        let unordered = MINIMAL.replace("seeds = [0]", "seeds = [0]\ncheckpoints = [16, 8]");
        assert!(parse(&unordered).is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let config = parse(MINIMAL).unwrap();
        let text = toml::to_string(&config).unwrap();
        let reparsed = parse(&text).unwrap();
        let again = toml::to_string(&reparsed).unwrap();
        assert_eq!(text, again);
    }
}
