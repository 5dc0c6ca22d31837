//! Post-processing of a discovered DAG: weight thresholding and conditional-independence
//! pruning with Fisher's z test on partial correlations.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dag::{Dag, WeightedGraph};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::ols;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum PruneConfig {
    Threshold { delta: f64 },
    Ci { alpha: f64 },
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig::Threshold { delta: 0.3 }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PruneConfig::Threshold { delta } if !(delta >= 0.0) => Err(Error::InvalidArgument(format!(
                "pruning threshold must be >= 0, got {delta}"
            ))),
            PruneConfig::Ci { alpha } if !(alpha > 0.0 && alpha < 1.0) => Err(Error::InvalidArgument(
                format!("CI level must lie in (0, 1), got {alpha}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, data: &Dataset, g: &Dag) -> Result<Dag> {
        self.validate()?;
        Ok(match *self {
            PruneConfig::Threshold { delta } => prune_threshold(&estimate_weights(data, g), delta),
            PruneConfig::Ci { alpha } => prune_ci(data, g, alpha),
        })
    }
}

/// OLS coefficients of every node on its parents in `g`.
pub fn estimate_weights(data: &Dataset, g: &Dag) -> WeightedGraph {
    assert_eq!(data.d(), g.d(), "estimate_weights: size mismatch");
    let d = g.d();
    let columns: Vec<(Vec<usize>, Vec<f64>)> = (0..d)
        .into_par_iter()
        .map(|j| {
            let parents = g.parents(j);
            let coefs = ols(data.x(), j, &parents).coefficients;
            (parents, coefs)
        })
        .collect();
    let mut w = DMatrix::zeros(d, d);
    for (j, (parents, coefs)) in columns.into_iter().enumerate() {
        for (p, c) in parents.into_iter().zip(coefs) {
            w[(p, j)] = c;
        }
    }
    WeightedGraph::new(w).expect("weights live on an acyclic support")
}

/// Keeps edges with `|w| >= delta`.
pub fn prune_threshold(w: &WeightedGraph, delta: f64) -> Dag {
    let d = w.d();
    let adj = (0..d * d)
        .map(|idx| {
            let v = w.weight(idx / d, idx % d);
            v != 0.0 && v.abs() >= delta
        })
        .collect();
    Dag::from_adjacency(d, adj).expect("subgraph of an acyclic graph")
}

fn residual(x: &DMatrix<f64>, target: usize, cond: &[usize]) -> DVector<f64> {
    let fit = ols(x, target, cond);
    let mut r = x.column(target).add_scalar(-fit.intercept);
    for (&c, b) in cond.iter().zip(&fit.coefficients) {
        r.axpy(-b, &x.column(c), 1.0);
    }
    r
}

/// Sample partial correlation of columns `i` and `j` given `cond`.
pub fn partial_correlation(data: &Dataset, i: usize, j: usize, cond: &[usize]) -> f64 {
    let ri = residual(data.x(), i, cond);
    let rj = residual(data.x(), j, cond);
    let denom = (ri.norm_squared() * rj.norm_squared()).sqrt();
    if denom == 0.0 {
        // A deterministic variable; report perfect dependence so the edge is kept.
        return 1.0;
    }
    (ri.dot(&rj) / denom).clamp(-1.0, 1.0)
}

/// Two-sided p-value of Fisher's z test for a partial correlation `r` estimated from `n`
/// samples with `cond_size` conditioning variables. `None` when the test is undefined
/// (`|r| >= 1` or fewer than one residual degree of freedom).
pub fn fisher_z_pvalue(r: f64, n: usize, cond_size: usize) -> Option<f64> {
    if !r.is_finite() || r.abs() >= 1.0 || n < cond_size + 4 {
        return None;
    }
    let z = 0.5 * ((n - cond_size - 3) as f64).sqrt() * ((1.0 + r) / (1.0 - r)).ln();
    let std = Normal::standard();
    Some((2.0 * (1.0 - std.cdf(z.abs()))).clamp(0.0, 1.0))
}

/// Removes `j -> i` when `X_i` and `X_j` test independent given the other parents of `i`
/// at level `alpha`. Every test conditions on the parent set of the input graph.
pub fn prune_ci(data: &Dataset, g: &Dag, alpha: f64) -> Dag {
    assert_eq!(data.d(), g.d(), "prune_ci: size mismatch");
    let d = g.d();
    let n = data.n();
    let removed: Vec<Vec<usize>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let parents = g.parents(i);
            parents
                .iter()
                .copied()
                .filter(|&j| {
                    let cond: Vec<usize> = parents.iter().copied().filter(|&p| p != j).collect();
                    let r = partial_correlation(data, i, j, &cond);
                    fisher_z_pvalue(r, n, cond.len()).is_some_and(|p| p > alpha)
                })
                .collect()
        })
        .collect();
    let mut adj = g.adjacency().to_vec();
    for (i, drop) in removed.into_iter().enumerate() {
        for j in drop {
            adj[j * d + i] = false;
        }
    }
    Dag::from_adjacency(d, adj).expect("subgraph of an acyclic graph")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        rng.sample(StandardNormal)
    }

    fn pair(n: usize, w: f64, noise: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let a = normal(&mut rng);
                vec![a, w * a + noise * normal(&mut rng)]
            })
            .collect();
        Dataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn estimates_single_coefficient() {
        let ds = pair(1000, 2.0, 0.1, 0);
        let g = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let w = estimate_weights(&ds, &g);
        assert!((w.weight(0, 1) - 2.0).abs() < 0.05);
        assert_eq!(estimate_weights(&ds, &Dag::empty(2)).weights().abs().max(), 0.0);
    }

    #[test]
    fn null_parent_has_small_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..1000)
            .map(|_| {
                let a = normal(&mut rng);
                let b = normal(&mut rng);
                vec![a, b, a + normal(&mut rng)]
            })
            .collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        let g = Dag::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        assert!(estimate_weights(&ds, &g).weight(1, 2).abs() < 0.1);
    }

    #[test]
    fn threshold_examples() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 2.0;
        m[(1, 2)] = 0.1;
        let w = WeightedGraph::new(m).unwrap();
        assert_eq!(prune_threshold(&w, 0.0), w.support());
        assert_eq!(prune_threshold(&w, f64::INFINITY).edge_count(), 0);
        assert_eq!(prune_threshold(&w, 0.3).edges(), vec![(0, 1)]);
    }

    #[test]
    fn fisher_z_values() {
        assert_eq!(fisher_z_pvalue(0.0, 100, 0), Some(1.0));
        assert_eq!(fisher_z_pvalue(1.0, 100, 0), None);
        assert_eq!(fisher_z_pvalue(0.2, 4, 1), None);
        // r = 0.2, n = 100: z = 0.5 * sqrt(97) * ln(1.5) = 1.9966, p = 0.0459
        let p = fisher_z_pvalue(0.2, 100, 0).unwrap();
        assert!((p - 0.045_9).abs() < 2e-4, "{p}");
    }

    #[test]
    fn strong_edge_survives_ci_pruning() {
        let ds = pair(1000, 2.0, 1.0, 4);
        let g = Dag::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(prune_ci(&ds, &g, 0.05), g);
    }

    #[test]
    fn collinear_edge_is_kept() {
        let ds = pair(100, 3.0, 0.0, 2);
        let g = Dag::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(prune_ci(&ds, &g, 0.05), g);
    }

    #[test]
    fn config_validation() {
        assert!(PruneConfig::Threshold { delta: -1.0 }.validate().is_err());
        assert!(PruneConfig::Ci { alpha: 1.0 }.validate().is_err());
        assert!(PruneConfig::default().validate().is_ok());
    }
}
