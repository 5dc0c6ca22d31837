//! Policy-gradient search loops: vanilla policy gradient, A2C-style and PPO.
//!
//! All three share one step structure: sample a batch of actions, score the decoded
//! graphs (in parallel, gathered positionally), record the best graph seen so far, and
//! update `(mu, log_sigma)` and the scalar value baseline with Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    entropy_grad, log_prob, log_prob_grad, ppo_surrogate_grad, sample_actions, Action, Adam,
    PolicyParams, DEFAULT_GAMMA,
};
use crate::dag::{vec_to_dag, Dag, PotentialVec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::shd;
use crate::scoring::{ScoreConfig, Scorer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Vpg,
    A2c,
    Ppo,
}

impl Algorithm {
    pub fn default_learning_rate(self) -> f64 {
        match self {
            Algorithm::A2c => 7e-4,
            Algorithm::Vpg | Algorithm::Ppo => 3e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            epochs: 10,
            minibatch: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub batch_size: usize,
    pub total_steps: usize,
    /// `None` selects the algorithm default.
    pub learning_rate: Option<f64>,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub advantage_normalization: bool,
    /// Global gradient-norm clip applied before every Adam step.
    pub max_grad_norm: Option<f64>,
    pub ppo: PpoConfig,
    /// Subtract the batch-mean reward in vanilla policy gradient.
    pub vpg_baseline: bool,
    /// Stop after this many steps without a best-reward improvement.
    pub patience: Option<usize>,
    pub gamma_clip: f64,
    pub seed: u64,
    /// Score batch actions on the rayon pool.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Ppo,
            batch_size: 64,
            total_steps: 20_000,
            learning_rate: None,
            entropy_coef: 0.0,
            value_coef: 0.5,
            advantage_normalization: true,
            max_grad_norm: Some(0.5),
            ppo: PpoConfig::default(),
            vpg_baseline: true,
            patience: None,
            gamma_clip: DEFAULT_GAMMA,
            seed: 0,
            parallel: true,
        }
    }
}

impl TrainConfig {
    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
            .unwrap_or_else(|| self.algorithm.default_learning_rate())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.batch_size == 0 {
            return bad("batch size must be >= 1");
        }
        if self.total_steps == 0 {
            return bad("training steps must be >= 1");
        }
        if !(self.learning_rate() > 0.0) {
            return bad("learning rate must be > 0");
        }
        if !(self.ppo.clip > 0.0) {
            return bad("ppo clip must be > 0");
        }
        if self.ppo.epochs == 0 || self.ppo.minibatch == 0 {
            return bad("ppo epochs and minibatch must be >= 1");
        }
        if !(self.gamma_clip > 0.0) {
            return bad("action clamp must be > 0");
        }
        Ok(())
    }
}

/// One row of the training trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub mean_reward: f64,
    pub best_reward: f64,
    /// SHD of the best graph so far against the dataset's recorded ground truth.
    pub best_shd: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub params: PolicyParams,
    pub trace: Vec<TraceRow>,
    /// Highest-reward graph visited.
    pub best_dag: Dag,
    pub best_reward: f64,
    pub best_action: PotentialVec,
    /// Number of policy updates performed.
    pub steps_run: usize,
}

impl TrainOutput {
    /// Writes `step,mean_reward,best_reward,best_shd` rows; unknown SHD is left empty.
    pub fn write_trace_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,mean_reward,best_reward,best_shd")?;
        for row in &self.trace {
            let shd = row.best_shd.map(|s| s.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{:?},{:?},{}",
                row.step, row.mean_reward, row.best_reward, shd
            )?;
        }
        Ok(())
    }
}

pub fn train_vpg(data: &Dataset, cfg: &TrainConfig, score_cfg: &ScoreConfig) -> Result<TrainOutput> {
    train(data, &TrainConfig { algorithm: Algorithm::Vpg, ..cfg.clone() }, score_cfg)
}

pub fn train_a2c(data: &Dataset, cfg: &TrainConfig, score_cfg: &ScoreConfig) -> Result<TrainOutput> {
    train(data, &TrainConfig { algorithm: Algorithm::A2c, ..cfg.clone() }, score_cfg)
}

pub fn train_ppo(data: &Dataset, cfg: &TrainConfig, score_cfg: &ScoreConfig) -> Result<TrainOutput> {
    train(data, &TrainConfig { algorithm: Algorithm::Ppo, ..cfg.clone() }, score_cfg)
}

/// Runs `cfg.algorithm` for `cfg.total_steps` policy updates.
pub fn train(data: &Dataset, cfg: &TrainConfig, score_cfg: &ScoreConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let scorer = Scorer::new(data, score_cfg.clone())?;
    let truth = data.meta.as_ref().and_then(|m| m.graph.as_ref());
    let d = data.d();

    let mut params = PolicyParams::new(d);
    params.gamma_clip = cfg.gamma_clip;
    let dim = params.dim();
    let mut value = 0.0;
    // Layout: [mu | log_sigma | value].
    let mut adam = Adam::new(2 * dim + 1, cfg.learning_rate());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut best_reward = f64::NEG_INFINITY;
    let mut best_dag = Dag::empty(d);
    let mut best_action = PotentialVec::zeros(d);
    let mut best_shd = None;
    let mut since_improvement = 0usize;
    let mut trace = Vec::with_capacity(cfg.total_steps);
    let mut steps_run = 0;

    for step in 0..cfg.total_steps {
        let actions = sample_actions(&params, cfg.batch_size, &mut rng);
        let rewards = batch_rewards(&scorer, &actions, cfg.parallel)?;

        let mut improved = false;
        for (action, &r) in actions.iter().zip(&rewards) {
            if r > best_reward {
                best_reward = r;
                best_action = action.clamped.clone();
                improved = true;
            }
        }
        if improved {
            best_dag = vec_to_dag(&best_action);
            best_shd = truth.map(|t| shd(&best_dag, t));
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        let mean_reward = rewards.iter().sum::<f64>() / rewards.len() as f64;
        trace.push(TraceRow {
            step,
            mean_reward,
            best_reward,
            best_shd,
        });

        match cfg.algorithm {
            Algorithm::Vpg => vpg_update(&mut params, &mut adam, &actions, &rewards, cfg)?,
            Algorithm::A2c => a2c_update(&mut params, &mut value, &mut adam, &actions, &rewards, cfg)?,
            Algorithm::Ppo => ppo_update(
                &mut params,
                &mut value,
                &mut adam,
                &actions,
                &rewards,
                cfg,
                &mut rng,
            )?,
        }
        if !params.is_finite() {
            return Err(Error::Numeric(format!("policy diverged at step {step}")));
        }
        steps_run = step + 1;
        if cfg.patience.is_some_and(|p| since_improvement >= p) {
            break;
        }
    }

    Ok(TrainOutput {
        params,
        trace,
        best_dag,
        best_reward,
        best_action,
        steps_run,
    })
}

fn batch_rewards(scorer: &Scorer<'_>, actions: &[Action], parallel: bool) -> Result<Vec<f64>> {
    if parallel && actions.len() > 1 {
        actions
            .par_iter()
            .map(|a| scorer.reward(&a.clamped))
            .collect()
    } else {
        actions.iter().map(|a| scorer.reward(&a.clamped)).collect()
    }
}

/// Shifts to mean zero and scales to unit standard deviation (population), with a
/// small denominator guard so constant batches give all-zero advantages.
fn normalize(adv: &mut [f64]) {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    for a in adv.iter_mut() {
        *a = (*a - mean) / (sd + 1e-8);
    }
}

/// Assembles `[d mu | d log_sigma | d value]` of a loss, clips, and applies Adam.
fn apply(
    params: &mut PolicyParams,
    value: &mut f64,
    adam: &mut Adam,
    mut grad: Vec<f64>,
    cfg: &TrainConfig,
) -> Result<()> {
    if let Some(max_norm) = cfg.max_grad_norm {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > max_norm {
            let s = max_norm / (norm + 1e-6);
            grad.iter_mut().for_each(|g| *g *= s);
        }
    }
    let dim = params.dim();
    let mut flat = Vec::with_capacity(2 * dim + 1);
    flat.extend_from_slice(&params.mu);
    flat.extend_from_slice(&params.log_sigma);
    flat.push(*value);
    adam.step(&mut flat, &grad)?;
    params.mu.copy_from_slice(&flat[..dim]);
    params.log_sigma.copy_from_slice(&flat[dim..2 * dim]);
    *value = flat[2 * dim];
    Ok(())
}

/// Loss gradient of `-mean(A_k ln pi(z_k)) - c_ent H` plus an optional value term.
fn score_function_grad(
    params: &PolicyParams,
    actions: &[Action],
    advantages: &[f64],
    cfg: &TrainConfig,
) -> Vec<f64> {
    let dim = params.dim();
    let mut grad = vec![0.0; 2 * dim + 1];
    let scale = 1.0 / actions.len() as f64;
    for (action, &a) in actions.iter().zip(advantages) {
        if a == 0.0 {
            continue;
        }
        let (d_mu, d_ls) = log_prob_grad(params, &action.raw);
        for i in 0..dim {
            grad[i] -= scale * a * d_mu[i];
            grad[dim + i] -= scale * a * d_ls[i];
        }
    }
    add_entropy_grad(params, &mut grad, cfg.entropy_coef);
    grad
}

fn add_entropy_grad(params: &PolicyParams, grad: &mut [f64], coef: f64) {
    if coef != 0.0 {
        let dim = params.dim();
        for (g, e) in grad[dim..2 * dim].iter_mut().zip(entropy_grad(params)) {
            *g -= coef * e;
        }
    }
}

fn value_grad(value: f64, rewards: &[f64], coef: f64) -> f64 {
    let n = rewards.len() as f64;
    -2.0 * coef * rewards.iter().map(|r| r - value).sum::<f64>() / n
}

fn vpg_update(
    params: &mut PolicyParams,
    adam: &mut Adam,
    actions: &[Action],
    rewards: &[f64],
    cfg: &TrainConfig,
) -> Result<()> {
    let mut adv = rewards.to_vec();
    if cfg.vpg_baseline {
        let mean = adv.iter().sum::<f64>() / adv.len() as f64;
        adv.iter_mut().for_each(|a| *a -= mean);
    }
    if cfg.advantage_normalization {
        normalize(&mut adv);
    }
    let grad = score_function_grad(params, actions, &adv, cfg);
    let mut value = 0.0;
    apply(params, &mut value, adam, grad, cfg)
}

fn a2c_update(
    params: &mut PolicyParams,
    value: &mut f64,
    adam: &mut Adam,
    actions: &[Action],
    rewards: &[f64],
    cfg: &TrainConfig,
) -> Result<()> {
    let mut adv: Vec<f64> = rewards.iter().map(|r| r - *value).collect();
    if cfg.advantage_normalization {
        normalize(&mut adv);
    }
    let mut grad = score_function_grad(params, actions, &adv, cfg);
    grad[2 * params.dim()] = value_grad(*value, rewards, cfg.value_coef);
    apply(params, value, adam, grad, cfg)
}

fn ppo_update(
    params: &mut PolicyParams,
    value: &mut f64,
    adam: &mut Adam,
    actions: &[Action],
    rewards: &[f64],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let dim = params.dim();
    let old_log_probs: Vec<f64> = actions.iter().map(|a| log_prob(params, &a.raw)).collect();
    let raw_adv: Vec<f64> = rewards.iter().map(|r| r - *value).collect();
    let mut order: Vec<usize> = (0..actions.len()).collect();
    let mb = cfg.ppo.minibatch.min(actions.len());

    for _ in 0..cfg.ppo.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb) {
            let draws: Vec<&[f64]> = chunk.iter().map(|&k| actions[k].raw.as_slice()).collect();
            let old: Vec<f64> = chunk.iter().map(|&k| old_log_probs[k]).collect();
            let mut adv: Vec<f64> = chunk.iter().map(|&k| raw_adv[k]).collect();
            if cfg.advantage_normalization && adv.len() > 1 {
                normalize(&mut adv);
            }
            let returns: Vec<f64> = chunk.iter().map(|&k| rewards[k]).collect();

            let (g_mu, g_ls) = ppo_surrogate_grad(params, &draws, &old, &adv, cfg.ppo.clip);
            let mut grad = Vec::with_capacity(2 * dim + 1);
            grad.extend(g_mu.iter().map(|g| -g));
            grad.extend(g_ls.iter().map(|g| -g));
            grad.push(value_grad(*value, &returns, cfg.value_coef));
            add_entropy_grad(params, &mut grad, cfg.entropy_coef);
            apply(params, value, adam, grad, cfg)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_of_constant_batch_is_zero() {
        let mut adv = vec![3.0; 5];
        normalize(&mut adv);
        assert!(adv.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(TrainConfig::default().learning_rate(), 3e-4);
        let a2c = TrainConfig {
            algorithm: Algorithm::A2c,
            ..TrainConfig::default()
        };
        assert_eq!(a2c.learning_rate(), 7e-4);
    }

    #[test]
    fn equal_rewards_leave_mean_unchanged_in_ppo() {
        let mut params = PolicyParams::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let actions = sample_actions(&params, 16, &mut rng);
        let rewards = vec![-1.5; 16];
        let cfg = TrainConfig::default();
        let mut adam = Adam::new(2 * params.dim() + 1, 1e-2);
        let mut value = 0.0;
        ppo_update(&mut params, &mut value, &mut adam, &actions, &rewards, &cfg, &mut rng).unwrap();
        assert!(params.mu.iter().all(|&m| m == 0.0));
        assert!(params.log_sigma.iter().all(|&s| s == 0.0));
        assert!(value < 0.0, "value baseline should move towards the reward");
    }
}
