//! Graph-recovery metrics, varsortability, and the sort-and-regress baseline.

use serde::{Deserialize, Serialize};

use crate::dag::Dag;
use crate::data::Dataset;
use crate::linalg::ols;

/// Comparison of a predicted DAG against the ground truth.
///
/// Reversed edges count once toward SHD and as false discoveries. Ratios with an empty
/// denominator follow these conventions: FDR is `None`, TPR and skeleton recall are 1
/// when the truth has no edges, skeleton precision is 1 when nothing is predicted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub shd: usize,
    pub fdr: Option<f64>,
    pub tpr: f64,
    pub skeleton_precision: f64,
    pub skeleton_recall: f64,
    pub skeleton_f1: f64,
    pub predicted: usize,
    pub correct: usize,
    pub reversed: usize,
    pub extra: usize,
    pub missing: usize,
}

pub fn evaluate(predicted: &Dag, truth: &Dag) -> EvalResult {
    assert_eq!(predicted.d(), truth.d(), "evaluate: graphs differ in size");
    let d = truth.d();
    let (mut correct, mut reversed, mut extra, mut missing) = (0, 0, 0, 0);
    let mut skeleton_hits = 0;
    for i in 0..d {
        for j in i + 1..d {
            let t = (truth.has_edge(i, j), truth.has_edge(j, i));
            let p = (predicted.has_edge(i, j), predicted.has_edge(j, i));
            let t_any = t.0 || t.1;
            let p_any = p.0 || p.1;
            if t_any && p_any {
                skeleton_hits += 1;
                if t == p {
                    correct += 1;
                } else {
                    reversed += 1;
                }
            } else if t_any {
                missing += 1;
            } else if p_any {
                extra += 1;
            }
        }
    }
    let n_pred = predicted.edge_count();
    let n_true = truth.edge_count();
    let ratio = |num: usize, den: usize, empty: f64| {
        if den == 0 {
            empty
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(skeleton_hits, n_pred, 1.0);
    let recall = ratio(skeleton_hits, n_true, 1.0);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    EvalResult {
        shd: missing + extra + reversed,
        fdr: (n_pred > 0).then(|| (reversed + extra) as f64 / n_pred as f64),
        tpr: ratio(correct, n_true, 1.0),
        skeleton_precision: precision,
        skeleton_recall: recall,
        skeleton_f1: f1,
        predicted: n_pred,
        correct,
        reversed,
        extra,
        missing,
    }
}

/// Structural Hamming distance.
pub fn shd(predicted: &Dag, truth: &Dag) -> usize {
    evaluate(predicted, truth).shd
}

/// Fraction of ancestor-descendant pairs `i ~> j` with `Var(X_j) > Var(X_i)`; ties
/// count one half. `None` when the graph has no directed path.
pub fn varsortability(truth: &Dag, data: &Dataset) -> Option<f64> {
    assert_eq!(truth.d(), data.d(), "varsortability: size mismatch");
    let d = truth.d();
    let var = data.variances();
    let reach = truth.reachability();
    let (mut paths, mut sorted) = (0usize, 0.0);
    for i in 0..d {
        for j in 0..d {
            if reach[i * d + j] {
                paths += 1;
                if var[j] > var[i] {
                    sorted += 1.0;
                } else if var[j] == var[i] {
                    sorted += 0.5;
                }
            }
        }
    }
    (paths > 0).then(|| sorted / paths as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortDirection {
    Increasing,
    Decreasing,
}

/// Orders variables by marginal variance, regresses each on all its predecessors, and
/// keeps coefficients with magnitude at least `threshold`.
pub fn sortnregress(data: &Dataset, direction: SortDirection, threshold: f64) -> Dag {
    let d = data.d();
    let var = data.variances();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| var[a].total_cmp(&var[b]).then(a.cmp(&b)));
    if direction == SortDirection::Decreasing {
        order.reverse();
    }
    let mut adj = vec![false; d * d];
    for (pos, &node) in order.iter().enumerate() {
        let preds = &order[..pos];
        if preds.is_empty() {
            continue;
        }
        let fit = ols(data.x(), node, preds);
        for (&p, coef) in preds.iter().zip(&fit.coefficients) {
            if coef.abs() >= threshold {
                adj[p * d + node] = true;
            }
        }
    }
    Dag::from_adjacency(d, adj).expect("edges follow a total order")
}
