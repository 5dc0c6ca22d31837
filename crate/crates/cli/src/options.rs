//! Flag groups shared by the subcommands. Each group doubles as the schema of a JSON config
//! file whose keys are the long flag names; flags given on the command line win over the file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use dagforge_core::gp::GpConfig;
use dagforge_core::synth::{GraphModel, GraphSpec, Mechanism, Noise, SemSpec, WeightRange};
use dagforge_core::{
    Algorithm, ContinuousConfig, PruneConfig, Regressor, ScoreConfig, ScoreKind, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "DAGFORGE_SEED";

/// Seed from the environment, used when neither a flag nor a config file sets one.
pub fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::input(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Reads a JSON config. A run manifest is accepted too; its `config` block is used.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::from(e).at(path))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::from(e).at(path))?;
    if let Some(inner) = value.get_mut("config").map(serde_json::Value::take) {
        value = inner;
    }
    serde_json::from_value(value).map_err(|e| CliError::from(e).at(path))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgoArg {
    Ppo,
    A2c,
    Vpg,
    /// Gradient descent on the relaxed loss with a straight-through step function.
    StContinuous,
    /// Sort by marginal variance and regress each node on its predecessors.
    Sortnregress,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreArg {
    BicEv,
    BicNv,
    Ls,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressorArg {
    Ols,
    Gp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphArg {
    Er,
    Sf,
}

/// Parses `none`, `threshold[:delta]` or `ci[:alpha]`.
pub fn parse_prune(s: &str) -> CliResult<Option<PruneConfig>> {
    let bad = || CliError::input(format!("cannot parse prune setting '{s}' (want none, threshold:DELTA or ci:ALPHA)"));
    let (method, value) = match s.split_once(':') {
        Some((m, v)) => (m.trim(), Some(v.trim().parse::<f64>().map_err(|_| bad())?)),
        None => (s.trim(), None),
    };
    let cfg = match method {
        "none" if value.is_none() => return Ok(None),
        "threshold" => PruneConfig::Threshold { delta: value.unwrap_or(0.3) },
        "ci" => PruneConfig::Ci { alpha: value.unwrap_or(0.05) },
        _ => return Err(bad()),
    };
    cfg.validate()?;
    Ok(Some(cfg))
}

pub fn prune_label(cfg: Option<&PruneConfig>) -> String {
    match cfg {
        None => "none".into(),
        Some(PruneConfig::Threshold { delta }) => format!("threshold:{delta}"),
        Some(PruneConfig::Ci { alpha }) => format!("ci:{alpha}"),
    }
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunOptions {
    /// Dataset CSV, one row per sample. A non-numeric first row is treated as a header.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Ground-truth adjacency CSV (0/1). Adds SHD to the trace and metrics to the manifest.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub algo: Option<AlgoArg>,
    #[arg(long, value_enum)]
    pub score: Option<ScoreArg>,
    #[arg(long, value_enum)]
    pub regressor: Option<RegressorArg>,
    /// Policy updates, or iterations for st-continuous. Default 20000.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Sampled DAGs per policy update. Default 64.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub entropy_coef: Option<f64>,
    /// Edge penalty of the least-squares score.
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// L1 weight of st-continuous.
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Stop after this many updates without a better graph.
    #[arg(long)]
    pub patience: Option<usize>,
    /// `none`, `threshold[:DELTA]` or `ci[:ALPHA]`. Default none.
    #[arg(long)]
    pub prune: Option<String>,
    /// Center and scale every column before scoring.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Fully resolved run settings.
#[derive(Clone, Debug)]
pub struct RunPlan {
    /// Every field filled in; stored in the manifest so the run can be repeated.
    pub options: RunOptions,
    pub method: Method,
    pub prune: Option<PruneConfig>,
    pub standardize: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Policy { train: TrainConfig, score: ScoreConfig },
    Continuous(ContinuousConfig),
    Sortnregress { threshold: f64 },
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($field:ident),*) => {
        RunOptions { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunOptions {
    /// Fields set in `self` win; the rest come from `base`.
    pub fn or(self, base: RunOptions) -> RunOptions {
        overlay!(
            self, base, data, truth, algo, score, regressor, steps, batch, lr, entropy_coef,
            lambda0, lambda1, patience, prune, standardize, seed
        )
    }

    pub fn resolve(&self, fallback_seed: Option<u64>) -> CliResult<RunPlan> {
        let algo = self.algo.unwrap_or(AlgoArg::Ppo);
        let seed = self.seed.or(fallback_seed).unwrap_or(0);
        let steps = self.steps.unwrap_or(20_000);
        let prune = parse_prune(self.prune.as_deref().unwrap_or("none"))?;
        let standardize = self.standardize.unwrap_or(false);
        let mut filled = RunOptions {
            algo: Some(algo),
            seed: Some(seed),
            prune: Some(prune_label(prune.as_ref())),
            standardize: Some(standardize),
            ..self.clone()
        };

        let method = match algo {
            AlgoArg::Ppo | AlgoArg::A2c | AlgoArg::Vpg => {
                let algorithm = match algo {
                    AlgoArg::Ppo => Algorithm::Ppo,
                    AlgoArg::A2c => Algorithm::A2c,
                    _ => Algorithm::Vpg,
                };
                let defaults = TrainConfig::default();
                let train = TrainConfig {
                    algorithm,
                    batch_size: self.batch.unwrap_or(defaults.batch_size),
                    total_steps: steps,
                    learning_rate: Some(self.lr.unwrap_or(algorithm.default_learning_rate())),
                    entropy_coef: self.entropy_coef.unwrap_or(defaults.entropy_coef),
                    patience: self.patience,
                    seed,
                    ..defaults
                };
                train.validate()?;
                let kind = match self.score.unwrap_or(ScoreArg::BicEv) {
                    ScoreArg::BicEv => ScoreKind::BicEv,
                    ScoreArg::BicNv => ScoreKind::BicNv,
                    ScoreArg::Ls => ScoreKind::Ls,
                };
                let mut score = ScoreConfig::new(kind);
                if let Some(l) = self.lambda0 {
                    score.lambda0 = l;
                }
                if self.regressor == Some(RegressorArg::Gp) {
                    score.regressor = Regressor::Gp(GpConfig::default());
                }
                score.validate()?;
                filled.score = Some(self.score.unwrap_or(ScoreArg::BicEv));
                filled.regressor = Some(self.regressor.unwrap_or(RegressorArg::Ols));
                filled.steps = Some(steps);
                filled.batch = Some(train.batch_size);
                filled.lr = train.learning_rate;
                filled.entropy_coef = Some(train.entropy_coef);
                filled.lambda0 = Some(score.lambda0);
                Method::Policy { train, score }
            }
            AlgoArg::StContinuous => {
                let defaults = ContinuousConfig::default();
                let cfg = ContinuousConfig {
                    learning_rate: self.lr.unwrap_or(defaults.learning_rate),
                    lambda1: self.lambda1.unwrap_or(defaults.lambda1),
                    max_iters: steps,
                    seed,
                    ..defaults
                };
                if !(cfg.learning_rate > 0.0) || !(cfg.lambda1 >= 0.0) || cfg.max_iters == 0 {
                    return Err(CliError::input("st-continuous needs lr > 0, lambda1 >= 0 and steps >= 1"));
                }
                filled.steps = Some(steps);
                filled.lr = Some(cfg.learning_rate);
                filled.lambda1 = Some(cfg.lambda1);
                Method::Continuous(cfg)
            }
            AlgoArg::Sortnregress => Method::Sortnregress { threshold: 0.3 },
        };
        Ok(RunPlan {
            options: filled,
            method,
            prune,
            standardize,
            seed,
        })
    }
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenerateOptions {
    /// Number of observed variables. Default 10.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_enum)]
    pub graph: Option<GraphArg>,
    /// Expected in-degree. Default 1.
    #[arg(long)]
    pub k: Option<usize>,
    /// `linear`, `gp`, `mlp` or `pnl-gp`.
    #[arg(long)]
    pub mech: Option<String>,
    /// `gauss`, `gauss:VAR`, `gauss:LO..HI`, `exp`, `gumbel`, `laplace` or `uniform`.
    #[arg(long)]
    pub noise: Option<String>,
    /// Number of samples. Default 1000.
    #[arg(long)]
    pub n: Option<usize>,
    /// `wide`, `regular` or intervals such as `-2:-0.5,0.5:2`.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub standardize: Option<bool>,
    /// Simulate this many extra variables and drop them from the output.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Add Gaussian noise to a share of entries: `PERCENT[:VARIANCE]`.
    #[arg(long)]
    pub corrupt: Option<String>,
}

/// Resolved generation settings.
#[derive(Clone, Debug)]
pub struct GeneratePlan {
    pub graph: GraphSpec,
    pub sem: SemSpec,
    pub hidden: usize,
    /// Percent of entries and noise variance.
    pub corrupt: Option<(f64, f64)>,
}

impl GenerateOptions {
    pub fn or(self, base: GenerateOptions) -> GenerateOptions {
        GenerateOptions {
            d: self.d.or(base.d),
            graph: self.graph.or(base.graph),
            k: self.k.or(base.k),
            mech: self.mech.or(base.mech),
            noise: self.noise.or(base.noise),
            n: self.n.or(base.n),
            weights: self.weights.or(base.weights),
            seed: self.seed.or(base.seed),
            standardize: self.standardize.or(base.standardize),
            hidden: self.hidden.or(base.hidden),
            corrupt: self.corrupt.or(base.corrupt),
        }
    }

    pub fn resolve(&self, fallback_seed: Option<u64>) -> CliResult<GeneratePlan> {
        let model = match self.graph.unwrap_or(GraphArg::Er) {
            GraphArg::Er => GraphModel::Er,
            GraphArg::Sf => GraphModel::Sf,
        };
        let seed = self.seed.or(fallback_seed).unwrap_or(0);
        let graph = GraphSpec::new(self.d.unwrap_or(10), model, self.k.unwrap_or(1), seed);
        graph.validate()?;
        let mechanism: Mechanism = self.mech.as_deref().unwrap_or("linear").parse()?;
        let noise: Noise = self.noise.as_deref().unwrap_or("gauss").parse()?;
        let weights: WeightRange = self.weights.as_deref().unwrap_or("wide").parse()?;
        let sem = SemSpec::linear(self.n.unwrap_or(1000))
            .with_mechanism(mechanism)
            .with_noise(noise)
            .with_weights(weights)
            .standardized(self.standardize.unwrap_or(false));
        sem.validate()?;
        let corrupt = match &self.corrupt {
            None => None,
            Some(s) => {
                let bad = || CliError::input(format!("cannot parse corruption '{s}' (want PERCENT[:VARIANCE])"));
                let (p, v) = match s.split_once(':') {
                    Some((p, v)) => (p, v.trim().parse::<f64>().map_err(|_| bad())?),
                    None => (s.as_str(), 1.0),
                };
                Some((p.trim().parse::<f64>().map_err(|_| bad())?, v))
            }
        };
        Ok(GeneratePlan {
            graph,
            sem,
            hidden: self.hidden.unwrap_or(0),
            corrupt,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prune_specs() {
        assert_eq!(parse_prune("none").unwrap(), None);
        assert_eq!(parse_prune("threshold").unwrap(), Some(PruneConfig::Threshold { delta: 0.3 }));
        assert_eq!(parse_prune("ci:0.01").unwrap(), Some(PruneConfig::Ci { alpha: 0.01 }));
        assert!(parse_prune("threshold:x").is_err());
        assert!(parse_prune("ci:2").is_err());
        assert!(parse_prune("bogus").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file: RunOptions = serde_json::from_str(r#"{"algo":"a2c","steps":5,"lr":0.1}"#).unwrap();
        let flags = RunOptions {
            steps: Some(7),
            ..Default::default()
        };
        let merged = flags.or(file);
        assert_eq!(merged.algo, Some(AlgoArg::A2c));
        assert_eq!(merged.steps, Some(7));
        assert_eq!(merged.lr, Some(0.1));
    }

    #[test]
    fn resolved_options_round_trip() {
        let plan = RunOptions {
            algo: Some(AlgoArg::A2c),
            prune: Some("threshold:0.25".into()),
            ..Default::default()
        }
        .resolve(Some(9))
        .unwrap();
        assert_eq!(plan.seed, 9);
        assert_eq!(plan.options.lr, Some(7e-4));
        let again = plan.options.resolve(None).unwrap();
        assert_eq!(again.options, plan.options);
        assert_eq!(again.prune, Some(PruneConfig::Threshold { delta: 0.25 }));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<RunOptions>(r#"{"stpes":5}"#).is_err());
    }

    #[test]
    fn infeasible_degree_is_an_input_error() {
        let opts = GenerateOptions {
            d: Some(3),
            k: Some(4),
            ..Default::default()
        };
        assert!(matches!(opts.resolve(None), Err(CliError::Input(_))));
    }
}
