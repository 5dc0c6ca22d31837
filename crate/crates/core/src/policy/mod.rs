//! Diagonal Gaussian policy over potential vectors and the policy-gradient trainers.
//!
//! The environment is stateless and every episode is a single action: draw `z`, decode
//! it into a DAG, receive the scaled graph score as reward. Log-densities always use the
//! raw Gaussian draw; clamping to `[-gamma, gamma]` only affects the decoded action.

mod adam;
mod continuous;
mod train;

pub use adam::Adam;
pub use continuous::{train_continuous_st, ContinuousConfig, ContinuousOutput};
pub use train::{
    train, train_a2c, train_ppo, train_vpg, Algorithm, PpoConfig, TraceRow, TrainConfig,
    TrainOutput,
};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dag::{potential_len, PotentialVec};

/// Default half-width of the action hypercube.
pub const DEFAULT_GAMMA: f64 = 10.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    d: usize,
    pub mu: Vec<f64>,
    pub log_sigma: Vec<f64>,
    pub gamma_clip: f64,
}

/// One sampled action: the raw Gaussian draw and its clamped potential vector.
#[derive(Clone, Debug)]
pub struct Action {
    pub raw: Vec<f64>,
    pub clamped: PotentialVec,
}

impl PolicyParams {
    /// Policy centered at the origin with unit spread.
    pub fn new(d: usize) -> Self {
        let dim = potential_len(d);
        Self {
            d,
            mu: vec![0.0; dim],
            log_sigma: vec![0.0; dim],
            gamma_clip: DEFAULT_GAMMA,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.log_sigma.iter().map(|s| s.exp()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.mu.iter().chain(&self.log_sigma).all(|v| v.is_finite())
    }

    /// The policy mean, clamped and decoded as a potential vector.
    pub fn mean_action(&self) -> PotentialVec {
        let g = self.gamma_clip;
        PotentialVec::new(self.d, self.mu.iter().map(|m| m.clamp(-g, g)).collect())
            .expect("finite policy mean")
    }
}

/// Draws `count` actions `clamp(mu + sigma * xi, -gamma, gamma)`.
pub fn sample_actions<R: Rng + ?Sized>(params: &PolicyParams, count: usize, rng: &mut R) -> Vec<Action> {
    let sigma = params.sigma();
    let g = params.gamma_clip;
    (0..count)
        .map(|_| {
            let raw: Vec<f64> = params
                .mu
                .iter()
                .zip(&sigma)
                .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let clamped = raw.iter().map(|v| v.clamp(-g, g)).collect();
            Action {
                clamped: PotentialVec::new(params.d, clamped).expect("finite draw"),
                raw,
            }
        })
        .collect()
}

/// `ln N(z; mu, diag(sigma^2))`.
pub fn log_prob(params: &PolicyParams, z: &[f64]) -> f64 {
    assert_eq!(z.len(), params.dim(), "log_prob: dimension mismatch");
    params
        .mu
        .iter()
        .zip(&params.log_sigma)
        .zip(z)
        .map(|((m, ls), x)| {
            let u = (x - m) * (-ls).exp();
            -HALF_LN_2PI - ls - 0.5 * u * u
        })
        .sum()
}

/// Gradient of [`log_prob`] with respect to `(mu, log_sigma)`.
pub fn log_prob_grad(params: &PolicyParams, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d_mu = Vec::with_capacity(z.len());
    let mut d_ls = Vec::with_capacity(z.len());
    for ((m, ls), x) in params.mu.iter().zip(&params.log_sigma).zip(z) {
        let inv_var = (-2.0 * ls).exp();
        let diff = x - m;
        d_mu.push(diff * inv_var);
        d_ls.push(diff * diff * inv_var - 1.0);
    }
    (d_mu, d_ls)
}

/// Differential entropy `sum_i 0.5 ln(2 pi e sigma_i^2)`.
pub fn entropy(params: &PolicyParams) -> f64 {
    params
        .log_sigma
        .iter()
        .map(|ls| 0.5 + HALF_LN_2PI + ls)
        .sum()
}

/// Gradient of [`entropy`] with respect to `log_sigma` (it does not depend on `mu`).
pub fn entropy_grad(params: &PolicyParams) -> Vec<f64> {
    vec![1.0; params.dim()]
}

/// Clipped surrogate `mean_k min(rho_k A_k, clip(rho_k, 1-eps, 1+eps) A_k)` where
/// `rho_k = exp(ln pi(z_k) - old_log_prob_k)`.
pub fn ppo_surrogate(
    params: &PolicyParams,
    draws: &[&[f64]],
    old_log_probs: &[f64],
    advantages: &[f64],
    clip: f64,
) -> f64 {
    let total: f64 = draws
        .iter()
        .zip(old_log_probs)
        .zip(advantages)
        .map(|((z, old), a)| {
            let ratio = (log_prob(params, z) - old).exp();
            (ratio * a).min(ratio.clamp(1.0 - clip, 1.0 + clip) * a)
        })
        .sum();
    total / draws.len() as f64
}

/// Gradient of [`ppo_surrogate`] with respect to `(mu, log_sigma)`.
pub fn ppo_surrogate_grad(
    params: &PolicyParams,
    draws: &[&[f64]],
    old_log_probs: &[f64],
    advantages: &[f64],
    clip: f64,
) -> (Vec<f64>, Vec<f64>) {
    let dim = params.dim();
    let mut g_mu = vec![0.0; dim];
    let mut g_ls = vec![0.0; dim];
    let scale = 1.0 / draws.len() as f64;
    for ((z, old), &a) in draws.iter().zip(old_log_probs).zip(advantages) {
        let ratio = (log_prob(params, z) - old).exp();
        // The clipped branch is flat in the parameters; only the unclipped one carries gradient.
        let unclipped_active = if a >= 0.0 {
            ratio <= 1.0 + clip
        } else {
            ratio >= 1.0 - clip
        };
        if !unclipped_active {
            continue;
        }
        let w = scale * a * ratio;
        let (d_mu, d_ls) = log_prob_grad(params, z);
        for i in 0..dim {
            g_mu[i] += w * d_mu[i];
            g_ls[i] += w * d_ls[i];
        }
    }
    (g_mu, g_ls)
}
