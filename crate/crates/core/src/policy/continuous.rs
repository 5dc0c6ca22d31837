//! Gradient-based alternative to the policy search, used as an ablation.
//!
//! The weighted adjacency is `W(z) = (E + E^T) .* H(grad p)` where `grad p[i,j] = p_j - p_i`.
//! The forward pass uses the step function; the backward pass treats `H` as identity
//! (straight-through). The loss is `ln(|X - X W|_F^2 / (n d)) + lambda1 |z|_1`, minimized
//! with Adam.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Adam;
use crate::dag::{edge_slot, potential_len, WeightedGraph};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousConfig {
    pub learning_rate: f64,
    pub lambda1: f64,
    pub max_iters: usize,
    /// Standard deviation of the random initial potentials.
    pub init_scale: f64,
    /// Stop once the relative loss change over `plateau_window` iterations is below this.
    pub plateau_tol: f64,
    pub plateau_window: usize,
    pub seed: u64,
}

impl Default for ContinuousConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            lambda1: 1e-7,
            max_iters: 20_000,
            init_scale: 0.1,
            plateau_tol: 1e-6,
            plateau_window: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ContinuousOutput {
    pub graph: WeightedGraph,
    /// Loss after every iteration.
    pub loss_trace: Vec<f64>,
    pub z: Vec<f64>,
}

/// `W(z)` with the forward step function applied.
fn weights_of(d: usize, z: &[f64]) -> DMatrix<f64> {
    let p = &z[..d];
    let mut w = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i + 1..d {
            let e = z[edge_slot(d, i, j)];
            if p[j] > p[i] {
                w[(i, j)] = e;
            } else if p[i] > p[j] {
                w[(j, i)] = e;
            }
        }
    }
    w
}

/// Loss and straight-through gradient given the Gram matrix `X^T X`.
fn loss_and_grad(gram: &DMatrix<f64>, scale: f64, lambda1: f64, z: &[f64]) -> (f64, Vec<f64>) {
    let d = gram.nrows();
    let w = weights_of(d, z);
    let resid = DMatrix::identity(d, d) - &w;
    let gram_resid = gram * &resid;
    let fit = resid.component_mul(&gram_resid).sum().max(f64::MIN_POSITIVE);
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    let loss = (fit * scale).ln() + lambda1 * l1;

    // dL/dW = -2 X^T X (I - W) / fit
    let g = gram_resid * (-2.0 / fit);
    let p = &z[..d];
    let mut grad = vec![0.0; z.len()];
    for i in 0..d {
        for j in i + 1..d {
            let slot = edge_slot(d, i, j);
            let e = z[slot];
            let h_ij = if p[j] > p[i] { 1.0 } else { 0.0 };
            let h_ji = if p[i] > p[j] { 1.0 } else { 0.0 };
            grad[slot] = g[(i, j)] * h_ij + g[(j, i)] * h_ji;
            // Straight-through: dH/dx := 1, and grad p[i,j] = p_j - p_i.
            let through = g[(i, j)] * e - g[(j, i)] * e;
            grad[j] += through;
            grad[i] -= through;
        }
    }
    for (gr, v) in grad.iter_mut().zip(z) {
        if *v != 0.0 {
            *gr += lambda1 * v.signum();
        }
    }
    (loss, grad)
}

/// Minimizes the relaxed least-squares loss and returns the final weighted DAG.
pub fn train_continuous_st(data: &Dataset, cfg: &ContinuousConfig) -> Result<ContinuousOutput> {
    if !(cfg.learning_rate > 0.0) || !(cfg.lambda1 >= 0.0) || cfg.max_iters == 0 {
        return Err(Error::InvalidArgument(
            "continuous optimization needs lr > 0, lambda1 >= 0 and at least one iteration".into(),
        ));
    }
    let d = data.d();
    let x = data.x();
    let gram = x.transpose() * x;
    let scale = 1.0 / (data.n() * d) as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z: Vec<f64> = (0..potential_len(d))
        .map(|_| cfg.init_scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut adam = Adam::new(z.len(), cfg.learning_rate);
    let mut loss_trace = Vec::new();

    for it in 0..cfg.max_iters {
        let (loss, grad) = loss_and_grad(&gram, scale, cfg.lambda1, &z);
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("continuous loss diverged at iteration {it}")));
        }
        loss_trace.push(loss);
        if it >= cfg.plateau_window {
            let past = loss_trace[it - cfg.plateau_window];
            if (loss - past).abs() <= cfg.plateau_tol * past.abs().max(1e-12) {
                break;
            }
        }
        adam.step(&mut z, &grad)?;
    }

    let graph = WeightedGraph::new(weights_of(d, &z))?;
    Ok(ContinuousOutput {
        graph,
        loss_trace,
        z,
    })
}
