use dagforge_core::dag::{edge_slot, potential_len};
use dagforge_core::metrics::EvalResult;
use dagforge_core::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn potential(d: usize) -> impl Strategy<Value = PotentialVec> {
    prop::collection::vec(-10.0f64..10.0, potential_len(d)).prop_map(move |v| PotentialVec::new(d, v).unwrap())
}

fn sized_potential(max_d: usize) -> impl Strategy<Value = PotentialVec> {
    (1..=max_d).prop_flat_map(potential)
}

fn dag(d: usize) -> impl Strategy<Value = Dag> {
    potential(d).prop_map(|z| vec_to_dag(&z))
}

/// Edge-by-edge reference for `evaluate`.
fn reference_eval(pred: &Dag, truth: &Dag) -> (usize, usize, usize, usize) {
    let d = truth.d();
    let (mut correct, mut reversed, mut extra, mut missing) = (0, 0, 0, 0);
    for i in 0..d {
        for j in 0..d {
            if truth.has_edge(i, j) {
                if pred.has_edge(i, j) {
                    correct += 1;
                } else if pred.has_edge(j, i) {
                    reversed += 1;
                } else {
                    missing += 1;
                }
            } else if pred.has_edge(i, j) && !truth.has_edge(j, i) {
                extra += 1;
            }
        }
    }
    (correct, reversed, extra, missing)
}

fn random_dataset(d: usize, n: usize, seed: u64) -> Dataset {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let x = DMatrix::from_fn(n, d, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    });
    Dataset::new(x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn decoded_graphs_are_acyclic(z in sized_potential(9)) {
        let g = vec_to_dag(&z);
        prop_assert!(is_acyclic(g.d(), g.adjacency()));
        prop_assert_eq!(g.topological_order().len(), g.d());
    }

    #[test]
    fn invariant_under_positive_scaling_and_small_shifts(
        z in sized_potential(8),
        log_alpha in -4.0f64..4.0,
        fractions in prop::collection::vec(-0.99f64..0.99, potential_len(8)),
    ) {
        let d = z.d();
        let p = z.node_potentials();
        let mut v = z.values().to_vec();
        for i in 0..d {
            let gap = (0..d).filter(|&j| j != i).map(|j| (p[i] - p[j]).abs()).fold(f64::INFINITY, f64::min);
            if gap.is_finite() {
                v[i] += 0.5 * gap * fractions[i];
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                let s = edge_slot(d, i, j);
                v[s] += z.values()[s].abs() * fractions[s];
            }
        }
        let alpha = log_alpha.exp();
        let moved = PotentialVec::new(d, v.into_iter().map(|x| alpha * x).collect()).unwrap();
        prop_assert_eq!(vec_to_dag(&z), vec_to_dag(&moved));
    }

    #[test]
    fn every_dag_has_a_nearby_preimage(z in potential(6), target in dag(6), eps in 0.01f64..10.0) {
        let pre = dag_to_vec(&target, eps).unwrap();
        prop_assert_eq!(vec_to_dag(&pre), target);
        prop_assert!(pre.max_abs() <= eps / 2.0);
        let dist = pre.values().iter().zip(z.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(dist <= z.max_abs() + eps);
    }

    #[test]
    fn shd_is_symmetric_and_satisfies_triangle(a in dag(6), b in dag(6), c in dag(6)) {
        prop_assert_eq!(shd(&a, &b), shd(&b, &a));
        prop_assert!(shd(&a, &c) <= shd(&a, &b) + shd(&b, &c));
        prop_assert_eq!(shd(&a, &a), 0);
    }

    #[test]
    fn evaluate_matches_reference(pred in dag(4), truth in dag(4)) {
        let r: EvalResult = evaluate(&pred, &truth);
        let (correct, reversed, extra, missing) = reference_eval(&pred, &truth);
        prop_assert_eq!((r.correct, r.reversed, r.extra, r.missing), (correct, reversed, extra, missing));
        prop_assert_eq!(r.shd, missing + extra + reversed);
        prop_assert_eq!(r.predicted, pred.edge_count());
    }

    #[test]
    fn pruning_only_removes_edges(g in dag(5), seed in 0u64..1000, delta in 0.0f64..1.0) {
        let data = random_dataset(5, 40, seed);
        for pruned in [
            prune_threshold(&estimate_weights(&data, &g), delta),
            prune_ci(&data, &g, 0.05),
        ] {
            for (i, j) in pruned.edges() {
                prop_assert!(g.has_edge(i, j));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cached_scores_match_uncached(g in dag(6), seed in 0u64..10_000) {
        let data = random_dataset(6, 30, seed);
        for kind in [ScoreKind::BicEv, ScoreKind::BicNv, ScoreKind::Ls] {
            let cfg = ScoreConfig::new(kind);
            let cache = ScoreCache::unbounded();
            let first = score(&data, &g, &cfg, &cache).unwrap();
            let again = score(&data, &g, &cfg, &cache).unwrap();
            let fresh = score(&data, &g, &cfg, &ScoreCache::disabled()).unwrap();
            prop_assert_eq!(first.to_bits(), fresh.to_bits());
            prop_assert_eq!(again.to_bits(), fresh.to_bits());
        }
    }
}

#[test]
fn zero_coefficient_edge_costs_exactly_the_penalty() {
    // Orthogonal, centered columns: the OLS slope of X2 on X1 is exactly zero.
    let data = Dataset::from_columns(&[vec![1.0, -1.0, 1.0, -1.0], vec![1.0, 1.0, -1.0, -1.0]]).unwrap();
    let empty = Dag::empty(2);
    let edge = Dag::from_edges(2, &[(0, 1)]).unwrap();
    let ln_n = 4f64.ln();
    let cache = ScoreCache::disabled();
    for kind in [ScoreKind::BicEv, ScoreKind::BicNv] {
        let cfg = ScoreConfig::new(kind);
        let drop = score(&data, &empty, &cfg, &cache).unwrap() - score(&data, &edge, &cfg, &cache).unwrap();
        assert!((drop - ln_n).abs() < 1e-12, "{kind:?}: {drop}");
    }
    let mut ls = ScoreConfig::new(ScoreKind::Ls);
    ls.lambda0 = 0.5;
    let drop = score(&data, &empty, &ls, &cache).unwrap() - score(&data, &edge, &ls, &cache).unwrap();
    assert!((drop - 0.5).abs() < 1e-12);
}
