//! Decomposable graph scores built from per-node sums of squared residuals (SSR).
//!
//! * BIC with non-equal noise variances: `-(n * sum_i ln(SSR_i / n) + |G| ln n)`
//! * BIC with equal noise variances: `-(n d ln(sum_i SSR_i / (n d)) + |G| ln n)`
//! * Least squares: `-(sum_i SSR_i + lambda0 |G|)`
//!
//! Every score is a sum of per-node terms, so SSR values are memoized per
//! `(node, parent set)` in a [`ScoreCache`].

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::dag::{vec_to_dag, Dag, PotentialVec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gp::{gp_ssr, GpConfig};
use crate::linalg::ols;

/// SSR values are clamped here before taking logarithms.
pub const SSR_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    BicEv,
    BicNv,
    Ls,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Regressor {
    Ols,
    Gp(GpConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub kind: ScoreKind,
    pub regressor: Regressor,
    /// Edge penalty of the least-squares score; ignored by the BIC scores.
    pub lambda0: f64,
    /// Lower clamp applied to each SSR before a logarithm.
    pub ssr_floor: f64,
    /// Maximum number of cached SSR entries; `None` means unbounded.
    pub cache_capacity: Option<usize>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            kind: ScoreKind::BicEv,
            regressor: Regressor::Ols,
            lambda0: 1e-6,
            ssr_floor: SSR_FLOOR,
            cache_capacity: None,
        }
    }
}

impl ScoreConfig {
    pub fn new(kind: ScoreKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn with_regressor(mut self, regressor: Regressor) -> Self {
        self.regressor = regressor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 >= 0.0) {
            return Err(Error::InvalidArgument("lambda0 must be >= 0".into()));
        }
        if !(self.ssr_floor >= 0.0) {
            return Err(Error::InvalidArgument("ssr floor must be >= 0".into()));
        }
        if let Regressor::Gp(gp) = &self.regressor {
            gp.validate()?;
        }
        Ok(())
    }
}

/// Residual sum of squares of `node` regressed on `parents`.
pub fn ssr(data: &Dataset, node: usize, parents: &[usize], regressor: &Regressor) -> Result<f64> {
    if node >= data.d() || parents.iter().any(|&p| p >= data.d()) {
        return Err(Error::Shape(format!("node index out of range for {} variables", data.d())));
    }
    if parents.contains(&node) {
        return Err(Error::InvalidArgument(format!("node {node} listed as its own parent")));
    }
    let value = match regressor {
        Regressor::Ols => ols(data.x(), node, parents).ssr,
        Regressor::Gp(cfg) => gp_ssr(data, node, parents, cfg)?,
    };
    if !value.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite SSR for node {node}; data may be corrupt"
        )));
    }
    Ok(value.max(0.0))
}

/// Memo of SSR values keyed by `(node, parent bitmask)`.
///
/// Graphs with more than 64 nodes bypass the cache. Concurrent readers share a lock;
/// two threads inserting the same key store the same value.
pub struct ScoreCache {
    store: Store,
    hits: AtomicU64,
    misses: AtomicU64,
}

enum Store {
    Disabled,
    Unbounded(RwLock<HashMap<(usize, u64), f64>>),
    Bounded(Mutex<Lru>),
}

impl ScoreCache {
    pub fn unbounded() -> Self {
        Self::with_store(Store::Unbounded(RwLock::new(HashMap::new())))
    }

    /// Least-recently-used eviction once `capacity` entries are stored.
    pub fn bounded(capacity: usize) -> Self {
        Self::with_store(Store::Bounded(Mutex::new(Lru::new(capacity.max(1)))))
    }

    pub fn disabled() -> Self {
        Self::with_store(Store::Disabled)
    }

    pub fn from_config(cfg: &ScoreConfig) -> Self {
        match cfg.cache_capacity {
            Some(cap) => Self::bounded(cap),
            None => Self::unbounded(),
        }
    }

    fn with_store(store: Store) -> Self {
        Self {
            store,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn len(&self) -> usize {
        match &self.store {
            Store::Disabled => 0,
            Store::Unbounded(map) => map.read().len(),
            Store::Bounded(lru) => lru.lock().map.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(hits, misses)` since construction.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    fn get(&self, key: (usize, u64)) -> Option<f64> {
        let found = match &self.store {
            Store::Disabled => None,
            Store::Unbounded(map) => map.read().get(&key).copied(),
            Store::Bounded(lru) => lru.lock().get(key),
        };
        match found {
            Some(_) => self.hits.fetch_add(1, Ordering::Relaxed),
            None => self.misses.fetch_add(1, Ordering::Relaxed),
        };
        found
    }

    fn insert(&self, key: (usize, u64), value: f64) {
        match &self.store {
            Store::Disabled => {}
            Store::Unbounded(map) => {
                map.write().insert(key, value);
            }
            Store::Bounded(lru) => lru.lock().insert(key, value),
        }
    }

    fn enabled(&self) -> bool {
        !matches!(self.store, Store::Disabled)
    }
}

impl Default for ScoreCache {
    fn default() -> Self {
        Self::unbounded()
    }
}

/// Minimal LRU: a tick-stamped map with linear-scan eviction in batches.
struct Lru {
    capacity: usize,
    tick: u64,
    map: HashMap<(usize, u64), (f64, u64)>,
}

impl Lru {
    fn new(capacity: usize) -> Self {
        Self {
            capacity,
            tick: 0,
            map: HashMap::new(),
        }
    }

    fn get(&mut self, key: (usize, u64)) -> Option<f64> {
        self.tick += 1;
        let tick = self.tick;
        self.map.get_mut(&key).map(|entry| {
            entry.1 = tick;
            entry.0
        })
    }

    fn insert(&mut self, key: (usize, u64), value: f64) {
        self.tick += 1;
        if self.map.len() >= self.capacity && !self.map.contains_key(&key) {
            // Evict the oldest eighth (at least one) so eviction cost amortizes.
            let drop = (self.capacity / 8).max(1);
            let mut stamps: Vec<u64> = self.map.values().map(|e| e.1).collect();
            stamps.sort_unstable();
            let cutoff = stamps[drop - 1];
            self.map.retain(|_, e| e.1 > cutoff);
        }
        self.map.insert(key, (value, self.tick));
    }
}

/// Per-node SSR through the cache.
pub fn cached_ssr(
    data: &Dataset,
    node: usize,
    dag: &Dag,
    regressor: &Regressor,
    cache: &ScoreCache,
) -> Result<f64> {
    let key = dag.parent_mask(node).filter(|_| cache.enabled());
    if let Some(mask) = key {
        if let Some(v) = cache.get((node, mask)) {
            return Ok(v);
        }
    }
    let value = ssr(data, node, &dag.parents(node), regressor)?;
    if let Some(mask) = key {
        cache.insert((node, mask), value);
    }
    Ok(value)
}

/// Combines per-node SSR values and the edge count into a score.
pub fn combine(kind: ScoreKind, ssrs: &[f64], edges: usize, n: usize, cfg: &ScoreConfig) -> f64 {
    let n_f = n as f64;
    let d_f = ssrs.len() as f64;
    let penalty = edges as f64 * n_f.ln();
    match kind {
        ScoreKind::BicNv => {
            let fit: f64 = ssrs
                .iter()
                .map(|&s| (s.max(cfg.ssr_floor) / n_f).ln())
                .sum();
            -(n_f * fit + penalty)
        }
        ScoreKind::BicEv => {
            let total: f64 = ssrs.iter().map(|&s| s.max(cfg.ssr_floor)).sum();
            -(n_f * d_f * (total / (n_f * d_f)).ln() + penalty)
        }
        ScoreKind::Ls => -(ssrs.iter().sum::<f64>() + cfg.lambda0 * edges as f64),
    }
}

/// Score of `dag` on `data`. Pass [`ScoreCache::disabled`] to bypass memoization.
pub fn score(data: &Dataset, dag: &Dag, cfg: &ScoreConfig, cache: &ScoreCache) -> Result<f64> {
    if dag.d() != data.d() {
        return Err(Error::Shape(format!(
            "graph has {} nodes but data has {} variables",
            dag.d(),
            data.d()
        )));
    }
    let ssrs = (0..dag.d())
        .map(|node| cached_ssr(data, node, dag, &cfg.regressor, cache))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(cfg.kind, &ssrs, dag.edge_count(), data.n(), cfg))
}

/// Score of the decoded graph scaled by `1 / (n d)`.
pub fn reward(data: &Dataset, z: &PotentialVec, cfg: &ScoreConfig, cache: &ScoreCache) -> Result<f64> {
    let s = score(data, &vec_to_dag(z), cfg, cache)?;
    Ok(s / (data.n() * data.d()) as f64)
}

/// Bundles a dataset, score configuration and cache for repeated evaluation.
pub struct Scorer<'a> {
    data: &'a Dataset,
    cfg: ScoreConfig,
    cache: ScoreCache,
}

impl<'a> Scorer<'a> {
    pub fn new(data: &'a Dataset, cfg: ScoreConfig) -> Result<Self> {
        cfg.validate()?;
        let cache = if data.d() > 64 {
            ScoreCache::disabled()
        } else {
            ScoreCache::from_config(&cfg)
        };
        Ok(Self { data, cfg, cache })
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn config(&self) -> &ScoreConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    pub fn score(&self, dag: &Dag) -> Result<f64> {
        score(self.data, dag, &self.cfg, &self.cache)
    }

    /// `score / (n d)`.
    pub fn scaled_score(&self, dag: &Dag) -> Result<f64> {
        Ok(self.score(dag)? / (self.data.n() * self.data.d()) as f64)
    }

    pub fn reward(&self, z: &PotentialVec) -> Result<f64> {
        self.scaled_score(&vec_to_dag(z))
    }
}
