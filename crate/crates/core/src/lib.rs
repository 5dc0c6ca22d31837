//! Score-based causal discovery over an unconstrained parameterization of DAGs.
//!
//! A potential vector `z` of length `d(d+1)/2` decodes to a DAG: the first `d` entries
//! order the nodes and the remaining ones switch edges on or off. Every `z` yields an
//! acyclic graph and every DAG has a preimage, so a Gaussian policy over `z` searches
//! the DAG space directly, rewarded by a BIC-style score.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dag;
pub mod data;
pub mod error;
pub mod gp;
pub mod linalg;
pub mod metrics;
pub mod policy;
pub mod prune;
pub mod scoring;
pub mod synth;

pub use dag::{dag_to_vec, enumerate_dags, is_acyclic, potential_len, vec_to_dag, Dag, PotentialVec, WeightedGraph};
pub use data::{Dataset, GenerationRecord};
pub use error::{Error, Result};
pub use gp::GpConfig;
pub use metrics::{evaluate, shd, sortnregress, varsortability, EvalResult, SortDirection};
pub use policy::{
    train, train_continuous_st, Algorithm, ContinuousConfig, ContinuousOutput, PolicyParams, TraceRow,
    TrainConfig, TrainOutput,
};
pub use prune::{estimate_weights, prune_ci, prune_threshold, PruneConfig};
pub use scoring::{score, Regressor, ScoreCache, ScoreConfig, ScoreKind, Scorer};
pub use synth::{GraphModel, GraphSpec, Mechanism, Noise, SemSpec, WeightRange};
