use dagforge_core::policy::{sample_actions, train_a2c, train_ppo, train_vpg};
use dagforge_core::synth::{generate, with_hidden_confounders, GraphModel, GraphSpec, SemSpec, WeightRange};
use dagforge_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn truth_of(data: &Dataset) -> Dag {
    data.meta.as_ref().and_then(|m| m.graph.clone()).unwrap()
}

fn config(algorithm: Algorithm, steps: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        algorithm,
        total_steps: steps,
        seed,
        ..TrainConfig::default()
    }
}

fn strong_pair(n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            vec![a, 2.0 * a + 0.1 * e]
        })
        .collect();
    Dataset::from_rows(&rows).unwrap()
}

#[test]
fn vpg_orients_a_strong_pair() {
    let data = strong_pair(500);
    let out = train_vpg(&data, &config(Algorithm::Vpg, 2000, 1), &ScoreConfig::new(ScoreKind::BicEv)).unwrap();
    assert_eq!(out.best_dag.edges(), vec![(0, 1)]);
}

#[test]
fn constant_data_prefers_the_empty_graph() {
    let data = Dataset::from_columns(&[vec![1.0; 20], vec![2.0; 20], vec![-3.0; 20]]).unwrap();
    let mut ls = ScoreConfig::new(ScoreKind::Ls);
    ls.lambda0 = 0.1;
    let out = train_ppo(&data, &config(Algorithm::Ppo, 50, 3), &ls).unwrap();
    assert_eq!(out.best_dag.edge_count(), 0);
}

#[test]
fn traces_are_deterministic() {
    let data = generate(&GraphSpec::new(5, GraphModel::Er, 1, 4), &SemSpec::linear(200)).unwrap();
    let score_cfg = ScoreConfig::new(ScoreKind::BicEv);
    for alg in [Algorithm::Vpg, Algorithm::A2c, Algorithm::Ppo] {
        let a = train(&data, &config(alg, 100, 9), &score_cfg).unwrap();
        let b = train(&data, &config(alg, 100, 9), &score_cfg).unwrap();
        assert_eq!(a.params, b.params, "{alg:?}");
        let bits = |o: &TrainOutput| -> Vec<(u64, u64)> {
            o.trace.iter().map(|r| (r.mean_reward.to_bits(), r.best_reward.to_bits())).collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.trace.len(), 100);
        assert!(a.trace.iter().all(|r| r.best_shd.is_some()));
    }
}

#[test]
fn entropy_bonus_widens_the_policy() {
    let data = generate(&GraphSpec::new(4, GraphModel::Er, 1, 2), &SemSpec::linear(100)).unwrap();
    let mut cfg = config(Algorithm::A2c, 100, 0);
    cfg.entropy_coef = 1.0;
    let out = train_a2c(&data, &cfg, &ScoreConfig::new(ScoreKind::BicEv)).unwrap();
    let mean_log_sigma = out.params.log_sigma.iter().sum::<f64>() / out.params.dim() as f64;
    assert!(mean_log_sigma > 0.0, "{mean_log_sigma}");
}

#[test]
fn single_sample_batches_run() {
    let data = generate(&GraphSpec::new(3, GraphModel::Er, 1, 0), &SemSpec::linear(50)).unwrap();
    let mut cfg = config(Algorithm::A2c, 30, 0);
    cfg.batch_size = 1;
    assert_eq!(train(&data, &cfg, &ScoreConfig::new(ScoreKind::BicEv)).unwrap().steps_run, 30);
}

#[test]
fn reward_argmax_is_the_truth_and_ppo_finds_it() {
    let dags = enumerate_dags(3).unwrap();
    let score_cfg = ScoreConfig::new(ScoreKind::BicEv);
    let mut found = 0;
    for seed in 0..5 {
        let data = generate(&GraphSpec::new(3, GraphModel::Er, 1, seed), &SemSpec::linear(10_000)).unwrap();
        let truth = truth_of(&data);
        let cache = ScoreCache::unbounded();
        let argmax = dags
            .iter()
            .max_by(|a, b| {
                let sa = score(&data, a, &score_cfg, &cache).unwrap();
                let sb = score(&data, b, &score_cfg, &cache).unwrap();
                sa.total_cmp(&sb)
            })
            .unwrap();
        assert_eq!(*argmax, truth, "seed {seed}");
        let out = train_ppo(&data, &config(Algorithm::Ppo, 5000, seed), &score_cfg).unwrap();
        if out.best_dag == truth {
            found += 1;
        }
    }
    assert!(found >= 4, "{found}/5");
}

#[test]
fn clamping_is_transparent_inside_the_box() {
    let mut params = PolicyParams::new(6);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (m, s) in params.mu.iter_mut().zip(params.log_sigma.iter_mut()) {
        *m = rng.random_range(-4.0..4.0);
        *s = rng.random_range(-2.0..0.0);
    }
    assert!(params.mu.iter().zip(params.sigma()).all(|(m, s)| m.abs() + 5.0 * s < params.gamma_clip));
    let batch = sample_actions(&params, 10_000, &mut rng);
    let clamped = batch.iter().filter(|a| a.raw.as_slice() != a.clamped.values()).count();
    assert!(clamped as f64 / 10_000.0 <= 0.01, "{clamped}");
}

#[test]
fn true_edges_survive_threshold_pruning() {
    let mut kept = 0;
    let mut total = 0;
    let mut seed = 0;
    while total < 1000 {
        let sem = SemSpec::linear(1000).with_weights(WeightRange::regular());
        let data = generate(&GraphSpec::new(10, GraphModel::Er, 2, 100 + seed), &sem).unwrap();
        let truth = truth_of(&data);
        let pruned = prune_threshold(&estimate_weights(&data, &truth), 0.3);
        for (i, j) in truth.edges() {
            total += 1;
            if pruned.has_edge(i, j) {
                kept += 1;
            }
        }
        seed += 1;
    }
    assert!(kept as f64 / total as f64 >= 0.99, "{kept}/{total}");
}

#[test]
fn sortnregress_on_a_pair_and_on_dense_graphs() {
    let data = strong_pair(1000);
    assert_eq!(sortnregress(&data, SortDirection::Increasing, 0.3).edges(), vec![(0, 1)]);
    let dense = generate(&GraphSpec::new(30, GraphModel::Er, 8, 0), &SemSpec::linear(1000)).unwrap();
    assert!(shd(&sortnregress(&dense, SortDirection::Increasing, 0.3), &truth_of(&dense)) >= 20);
}

#[test]
fn varsortability_of_sparse_graphs_is_high() {
    let values: Vec<f64> = (0..20)
        .filter_map(|seed| {
            let data = generate(&GraphSpec::new(30, GraphModel::Er, 1, seed), &SemSpec::linear(1000)).unwrap();
            varsortability(&truth_of(&data), &data)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    assert!((mean - 0.97).abs() <= 0.05, "{mean}");
}

#[test]
fn hidden_confounders_return_the_induced_subgraph() {
    let spec = GraphSpec::new(8, GraphModel::Er, 2, 11);
    let sem = SemSpec::linear(200);
    let (data, sub) = with_hidden_confounders(&spec, &sem, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    // Regenerate the full graph from the same stream and compare the restriction.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let full = synth::gen_graph(&GraphSpec { d: 10, ..spec }, &mut rng).unwrap();
    let keep_candidates: Vec<Vec<usize>> = combinations(10, 8);
    assert!(keep_candidates.iter().any(|keep| full.induced_subgraph(keep) == sub));
    assert_eq!(data.d(), 8);
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

#[test]
fn pipeline_on_a_small_graph() {
    let data = generate(&GraphSpec::new(6, GraphModel::Sf, 1, 7), &SemSpec::linear(1000)).unwrap();
    let out = train(&data, &config(Algorithm::Ppo, 2000, 0), &ScoreConfig::new(ScoreKind::BicEv)).unwrap();
    let pruned = PruneConfig::default().apply(&data, &out.best_dag).unwrap();
    let eval = evaluate(&pruned, &truth_of(&data));
    assert_eq!(eval.shd, 0, "{eval:?}");
    let mut csv = Vec::new();
    out.write_trace_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("step,mean_reward,best_reward,best_shd"));
    assert_eq!(text.lines().count(), 2001);
}
