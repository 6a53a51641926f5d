use std::f64::consts::LN_2;

use super::*;
use crate::graph::{Graph, LabelTable};
use crate::model::{sigmoid, LossMode};
use crate::sampler::{NegativeSampling, WalkStart};

fn triangle() -> Graph {
    Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)])
}

fn path3() -> Graph {
    Graph::from_edges(3, [(0, 1), (1, 2)])
}

fn k2() -> Graph {
    Graph::from_edges(2, [(0, 1)])
}

fn zero_params(n: usize, d: usize, l: usize) -> ParamStore {
    let mut p = ParamStore::new(n, d, l, 0);
    p.embeddings.iter_mut().for_each(|x| *x = 0.0);
    p
}

fn random_params(n: usize, d: usize, seed: u64) -> ParamStore {
    let mut p = ParamStore::new(n, d, 0, seed);
    // larger than the default init so gradients are far from zero
    p.embeddings.iter_mut().for_each(|x| *x *= 2.0 * d as f64);
    p
}

fn psample(p: f64) -> SamplerConfig {
    SamplerConfig::p_sampling(p, NegativeSampling::Induced)
}

fn mc(dataset: &Dataset, params: &ParamStore, cfg: &SamplerConfig, n: usize, seed: u64) -> RiskEstimate {
    let mut rng = rng::stream(seed, 0);
    monte_carlo_risk(dataset, params, cfg, LossConfig::default(), n, &mut rng).unwrap()
}

#[test]
fn deterministic_sampler_has_zero_standard_error() {
    let ds = Dataset::new(triangle());
    let est = mc(&ds, &zero_params(3, 4, 0), &psample(1.0), 50, 1);
    assert!((est.mean - 3.0 * LN_2).abs() < 1e-12);
    assert_eq!(est.std_error, 0.0);
}

#[test]
fn path_psample_risk_from_subset_table() {
    let ds = Dataset::new(path3());
    let params = zero_params(3, 2, 0);
    // pair counts by retained set, including the isolated deletion for {0,2}
    let mut expected = 0.0;
    for mask in 0u32..8 {
        let pairs = match mask {
            0b011 | 0b110 => 1.0,
            0b111 => 3.0,
            _ => 0.0,
        };
        expected += pairs / 8.0 * LN_2;
    }
    assert!((expected - 5.0 / 8.0 * LN_2).abs() < 1e-15);
    let exact = exact_risk_psample(&ds, &params, 0.5, LossConfig::default()).unwrap();
    assert!((exact - expected).abs() < 1e-12, "{exact}");
    assert!((exact - 0.4332).abs() < 1e-4);
    let est = mc(&ds, &params, &psample(0.5), 100_000, 2);
    assert!((est.mean - exact).abs() < 3.0 * est.std_error, "{est:?}");
}

#[test]
fn single_sample_estimate_is_that_draws_loss() {
    let ds = Dataset::new(path3());
    let params = random_params(3, 3, 4);
    let sampler = Sampler::new(&ds.graph, psample(0.6)).unwrap();
    let obj = ds.objective(LossConfig::default());
    let est = estimate_risk(&sampler, &obj, &params, 1, &mut rng::stream(9, 0)).unwrap();
    let draw = sampler.draw(&mut rng::stream(9, 0));
    assert_eq!(est.mean, obj.loss(&draw, &params).unwrap());
    assert_eq!(est.std_error, 0.0);
    assert!(estimate_risk(&sampler, &obj, &params, 0, &mut rng::stream(9, 0)).is_err());
}

#[test]
fn psample_extremes() {
    let g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2)]);
    let ds = Dataset::new(g);
    let params = random_params(5, 3, 6);
    let full = exact_risk_psample(&ds, &params, 1.0, LossConfig::default()).unwrap();
    let whole = SampledSubgraph {
        vertices: vec![0, 1, 2],
        positive_pairs: vec![(0, 1), (1, 2), (0, 2)],
        negative_pairs: vec![],
        positive_vertex_count: 3,
        source: psample(1.0).source(),
    };
    let direct = ds.objective(LossConfig::default()).loss(&whole, &params).unwrap();
    assert!((full - direct).abs() < 1e-12);
    assert_eq!(exact_risk_psample(&ds, &params, 0.0, LossConfig::default()).unwrap(), 0.0);
}

#[test]
fn oversized_graph_is_refused() {
    let n = MAX_ENUMERATED_VERTICES + 1;
    let ds = Dataset::new(Graph::from_edges(n, (1..n).map(|v| (v - 1, v))));
    let params = zero_params(n, 2, 0);
    let err = exact_risk_psample(&ds, &params, 0.5, LossConfig::default()).unwrap_err();
    assert!(matches!(err, Error::TooLarge(_)));
    let err = exact_risk_walk(&ds, &params, 40, WalkStart::UniformVertex, LossConfig::default()).unwrap_err();
    assert!(matches!(err, Error::TooLarge(_)));
}

#[test]
fn unigram_negatives_are_not_enumerated() {
    let ds = Dataset::new(path3());
    let cfg = SamplerConfig::p_sampling(0.5, NegativeSampling::Unigram);
    assert!(exact_risk(&ds, &zero_params(3, 2, 0), &cfg, LossConfig::default()).is_err());
}

#[test]
fn walk_risk_on_k2_is_ln2() {
    let ds = Dataset::new(k2());
    for r in 1..6 {
        for start in [WalkStart::UniformVertex, WalkStart::DegreeProportional] {
            let risk = exact_risk_walk(&ds, &zero_params(2, 3, 0), r, start, LossConfig::default()).unwrap();
            assert!((risk - LN_2).abs() < 1e-12);
        }
    }
}

#[test]
fn walk_risk_on_path_single_step() {
    let ds = Dataset::new(path3());
    let risk = exact_risk_walk(&ds, &zero_params(3, 2, 0), 1, WalkStart::UniformVertex, LossConfig::default()).unwrap();
    assert!((risk - LN_2).abs() < 1e-12);
}

#[test]
fn walk_probabilities_sum_to_one() {
    // with zero embeddings every walk on K3 induces at least one pair; count
    // the loss per pair through a unit-cost check on a star instead
    let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]);
    let ds = Dataset::new(g);
    let cfg = SamplerConfig::uniform_edge(1, NegativeSampling::None);
    let risk = exact_risk(&ds, &zero_params(4, 2, 0), &cfg, LossConfig::default()).unwrap();
    assert!((risk - LN_2).abs() < 1e-12);
    let walk = exact_risk_walk(&ds, &zero_params(4, 2, 0), 1, WalkStart::DegreeProportional, LossConfig::default()).unwrap();
    assert!((walk - LN_2).abs() < 1e-12);
}

#[test]
fn triangle_walk_risk_matches_monte_carlo() {
    let ds = Dataset::new(triangle());
    let params = random_params(3, 2, 11);
    let cfg = SamplerConfig::rw_induced(2, NegativeSampling::None);
    let exact = exact_risk(&ds, &params, &cfg, LossConfig::default()).unwrap();
    let est = mc(&ds, &params, &cfg, 200_000, 12);
    assert!((est.mean - exact).abs() < 3.0 * est.std_error, "{exact} {est:?}");
}

#[test]
fn skipgram_risk_matches_monte_carlo() {
    let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)]);
    let ds = Dataset::new(g);
    let params = random_params(5, 2, 13);
    let cfg = SamplerConfig::rw_skipgram(4, 3, NegativeSampling::Induced);
    let exact = exact_risk(&ds, &params, &cfg, LossConfig::default()).unwrap();
    let est = mc(&ds, &params, &cfg, 200_000, 14);
    assert!((est.mean - exact).abs() < 3.0 * est.std_error, "{exact} {est:?}");
}

#[test]
fn zero_gradient_leaves_params_unchanged() {
    let mut p = random_params(3, 2, 1);
    let before = p.clone();
    let mut g = SparseGradient::zeros(2, 0);
    g.vertices = vec![0, 2];
    g.vertex_grads = vec![0.0; 4];
    sgd_step(&mut p, &g, 0.5);
    assert_eq!(p.embeddings, before.embeddings);
}

#[test]
fn single_coordinate_step() {
    let mut p = random_params(3, 2, 1);
    let before = p.clone();
    let mut g = SparseGradient::zeros(2, 0);
    g.vertices = vec![1];
    g.vertex_grads = vec![0.0, 3.0];
    sgd_step(&mut p, &g, 0.1);
    for i in 0..p.embeddings.len() {
        let shift = if i == 3 { 0.3 } else { 0.0 };
        assert!((before.embeddings[i] - shift - p.embeddings[i]).abs() < 1e-15);
    }
}

#[test]
fn repeated_steps_on_one_pair_do_not_increase_loss() {
    let mut p = random_params(2, 3, 2);
    let ds = Dataset::new(k2());
    let obj = ds.objective(LossConfig::default());
    let s = Sampler::new(&ds.graph, psample(1.0)).unwrap().draw(&mut rng::stream(0, 0));
    let mut last = obj.loss(&s, &p).unwrap();
    for _ in 0..2 {
        let g = obj.gradient(&s, &p).unwrap();
        sgd_step(&mut p, &g, 0.01);
        let now = obj.loss(&s, &p).unwrap();
        assert!(now <= last);
        last = now;
    }
}

fn k2_config() -> TrainConfig {
    TrainConfig {
        sampler: psample(1.0),
        steps: 500,
        learning_rate: LearningRate::Constant { rate: 0.1 },
        embedding_dim: 8,
        seed: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn k2_learns_its_edge() {
    let ds = Dataset::new(k2());
    let out = train(&ds, &k2_config()).unwrap();
    let x: f64 = out.params.embedding(0).iter().zip(out.params.embedding(1)).map(|(a, b)| a * b).sum();
    assert!(sigmoid(x) >= 0.9, "{}", sigmoid(x));
    assert_eq!(out.trace.len(), 2);
    assert_eq!(out.trace[1].step, 500);
    assert!(out.trace[1].risk_mean < out.trace[0].risk_mean);
}

/// Embeddings fixed at a separable layout; only the logistic layer trains.
fn separable_dataset() -> (Dataset, ParamStore) {
    let n = 6;
    let g = Graph::from_edges(n, (1..n).map(|v| (v - 1, v)));
    let mut labels = LabelTable::new(n, 1);
    let mut params = ParamStore::new(n, 2, 1, 0);
    for v in 0..n {
        let side = if v % 2 == 0 { 1.0 } else { -1.0 };
        labels.set(v, 0, v % 2 == 0);
        params.embedding_mut(v).copy_from_slice(&[side, 0.3 * v as f64]);
    }
    (Dataset::new(g).with_labels(labels), params)
}

#[test]
fn logistic_layer_fits_separable_labels() {
    let (ds, params) = separable_dataset();
    let cfg = TrainConfig {
        sampler: psample(1.0),
        loss: LossConfig::node_classification(1.0),
        steps: 2000,
        learning_rate: LearningRate::Constant { rate: 0.5 },
        embedding_dim: 2,
        train_embeddings: false,
        eval_every: 200,
        ..TrainConfig::default()
    };
    let out = train_from(&ds, params.clone(), &cfg).unwrap();
    assert_eq!(out.params.embeddings, params.embeddings);
    let s = Sampler::new(&ds.graph, psample(1.0)).unwrap().draw(&mut rng::stream(0, 0));
    let label = ds.objective(cfg.loss).label_loss(&s, &out.params).unwrap();
    assert!(label < 0.05, "{label}");
    // deterministic sampler and convex objective: the trace is monotone
    for w in out.trace.windows(2) {
        assert!(w[1].risk_mean <= w[0].risk_mean + 1e-12);
    }
    assert_eq!(out.trace.len(), 11);
}

#[test]
fn zero_steps_returns_initialization() {
    let ds = Dataset::new(triangle());
    let cfg = TrainConfig {
        steps: 0,
        embedding_dim: 4,
        ..k2_config()
    };
    let out = train(&ds, &cfg).unwrap();
    assert_eq!(out.params.embeddings, init_params(&ds, &cfg).embeddings);
    assert_eq!(out.trace.len(), 1);
    assert_eq!(out.trace[0].step, 0);
}

#[test]
fn invalid_config_is_rejected_with_all_violations() {
    let ds = Dataset::new(triangle());
    let cfg = TrainConfig {
        workers: 0,
        embedding_dim: 0,
        ..k2_config()
    };
    let msg = train(&ds, &cfg).unwrap_err().to_string();
    assert!(msg.contains("workers") && msg.contains("embedding_dim"), "{msg}");
}

#[test]
fn non_finite_parameters_abort() {
    let ds = Dataset::new(k2());
    let cfg = k2_config();
    let mut params = init_params(&ds, &cfg);
    params.embedding_mut(0)[0] = f64::NAN;
    assert!(train_from(&ds, params, &cfg).is_err());
}

fn walk_config(workers: usize) -> TrainConfig {
    TrainConfig {
        sampler: SamplerConfig::rw_skipgram(10, 3, NegativeSampling::Unigram),
        steps: 300,
        embedding_dim: 6,
        workers,
        eval_every: 100,
        eval_samples: 20,
        seed: 17,
        ..TrainConfig::default()
    }
}

fn ring(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)).chain([(0, n / 2)]))
}

#[test]
fn serial_training_is_reproducible() {
    let ds = Dataset::new(ring(12));
    let a = train(&ds, &walk_config(1)).unwrap();
    let b = train(&ds, &walk_config(1)).unwrap();
    assert_eq!(a.params.embeddings, b.params.embeddings);
    assert_eq!(a.params.weights, b.params.weights);
    let risks = |o: &TrainOutcome| o.trace.iter().map(|t| (t.step, t.risk_mean)).collect::<Vec<_>>();
    assert_eq!(risks(&a), risks(&b));
    let c = train(&ds, &TrainConfig { seed: 18, ..walk_config(1) }).unwrap();
    assert_ne!(a.params.embeddings, c.params.embeddings);
}

#[test]
fn pipelined_training_is_reproducible() {
    let ds = Dataset::new(ring(12));
    let a = train(&ds, &walk_config(3)).unwrap();
    let b = train(&ds, &walk_config(3)).unwrap();
    assert_eq!(a.params.embeddings, b.params.embeddings);
    assert_eq!(a.trace.len(), 4);
}

#[test]
fn concurrent_updates_reduce_risk() {
    let ds = Dataset::new(ring(12));
    let cfg = TrainConfig {
        concurrent_updates: true,
        steps: 2000,
        learning_rate: LearningRate::Constant { rate: 0.05 },
        eval_every: 500,
        eval_samples: 200,
        ..walk_config(4)
    };
    let out = train(&ds, &cfg).unwrap();
    assert!(out.params.check_finite().is_ok());
    assert_eq!(out.trace.last().unwrap().step, 2000);
    assert!(out.trace.last().unwrap().risk_mean < out.trace[0].risk_mean);
}

#[test]
fn learning_rate_schedule() {
    let lr = LearningRate::default();
    assert_eq!(lr.at(0, 100), 0.025);
    assert!((lr.at(99, 100) - 1e-4).abs() < 1e-15);
    assert_eq!(lr.at(0, 1), 0.025);
    assert_eq!(LearningRate::Constant { rate: 0.3 }.at(7, 10), 0.3);
}

#[test]
fn deterministic_sampler_gradient_is_exact() {
    let ds = Dataset::new(path3());
    let params = random_params(3, 2, 21);
    let report = check_unbiasedness(&ds, &params, &psample(1.0), LossConfig::default(), 10, &mut rng::stream(1, 0)).unwrap();
    assert_eq!(report.max_abs_z, 0.0);
}

#[test]
fn psample_gradient_is_unbiased() {
    let ds = Dataset::new(path3());
    let params = random_params(3, 2, 22);
    let report = check_unbiasedness(&ds, &params, &psample(0.5), LossConfig::default(), 100_000, &mut rng::stream(2, 0)).unwrap();
    assert!(report.passes(4.0), "{report:?}");
}

#[test]
fn walk_gradient_is_unbiased() {
    let ds = Dataset::new(triangle());
    let params = random_params(3, 2, 23);
    let cfg = SamplerConfig::rw_induced(2, NegativeSampling::None);
    let report = check_unbiasedness(&ds, &params, &cfg, LossConfig::default(), 100_000, &mut rng::stream(3, 0)).unwrap();
    assert!(report.passes(4.0), "{report:?}");
}

#[test]
fn labelled_gradient_is_unbiased() {
    let (ds, params) = separable_dataset();
    let cfg = psample(0.5);
    let loss = LossConfig::node_classification(0.4);
    assert_eq!(loss.mode, LossMode::NodeClassification);
    let report = check_unbiasedness(&ds, &params, &cfg, loss, 100_000, &mut rng::stream(4, 0)).unwrap();
    assert!(report.passes(4.0), "{report:?}");
}
