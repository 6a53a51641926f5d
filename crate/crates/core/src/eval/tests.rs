use super::*;
use crate::model::LossConfig;
use crate::sampler::NegativeSampling;
use crate::trainer::LearningRate;

fn planted() -> Dataset {
    synthetic::planted_partition(4, 40, 0.3, 0.01, &mut rng::stream(5, 0)).unwrap()
}

fn config() -> TrainConfig {
    TrainConfig {
        sampler: SamplerConfig::p_sampling(0.15, NegativeSampling::Unigram),
        steps: 3000,
        embedding_dim: 16,
        seed: 7,
        ..TrainConfig::default()
    }
}

#[test]
fn planted_labels_are_recovered_by_two_stage() {
    let ds = planted();
    let split = make_split(&ds.graph, 0.5, TestScheme::UniformVertex, &mut rng::stream(1, rng::SPLIT_STREAM)).unwrap();
    let out = two_stage_eval(&ds, &split, &config(), &EvalOptions::default()).unwrap();
    assert!(out.macro_f1 > 0.9, "{}", out.macro_f1);
    let top = EvalOptions {
        predict: PredictMode::TopK,
        ..EvalOptions::default()
    };
    let out = two_stage_eval(&ds, &split, &config(), &top).unwrap();
    assert!(out.macro_f1 > 0.9, "{}", out.macro_f1);
}

#[test]
fn simultaneous_without_label_weight_predicts_nothing() {
    let ds = planted();
    let split = make_split(&ds.graph, 0.5, TestScheme::UniformVertex, &mut rng::stream(1, rng::SPLIT_STREAM)).unwrap();
    let cfg = TrainConfig {
        loss: LossConfig::node_classification(0.0),
        steps: 200,
        ..config()
    };
    let out = simultaneous_eval(&ds, &split, &cfg, &EvalOptions::default()).unwrap();
    assert!(out.params.weights().iter().chain(out.params.bias()).all(|&x| x == 0.0));
    assert_eq!(out.macro_f1, 0.0);
}

#[test]
fn simultaneous_learns_planted_labels() {
    let ds = planted();
    let split = make_split(&ds.graph, 0.5, TestScheme::UniformVertex, &mut rng::stream(2, rng::SPLIT_STREAM)).unwrap();
    let cfg = TrainConfig {
        loss: LossConfig::node_classification(0.3),
        steps: 6000,
        learning_rate: LearningRate::Linear { start: 0.05, end: 1e-3 },
        ..config()
    };
    let out = simultaneous_eval(&ds, &split, &cfg, &EvalOptions::default()).unwrap();
    assert!(out.macro_f1 > 0.7, "{}", out.macro_f1);
}

#[test]
fn simultaneous_requires_label_mode() {
    let ds = planted();
    let split = make_split(&ds.graph, 0.5, TestScheme::UniformVertex, &mut rng::stream(1, 0)).unwrap();
    assert!(simultaneous_eval(&ds, &split, &config(), &EvalOptions::default()).is_err());
    let unlabelled = Dataset::new(ds.graph.clone());
    assert!(two_stage_eval(&unlabelled, &split, &config(), &EvalOptions::default()).is_err());
}

#[test]
fn protocol_rows_are_reproducible() {
    let ds = planted();
    let protocol = Protocol {
        schemes: TestScheme::ALL.to_vec(),
        seeds: 2,
        ..Protocol::default()
    };
    let cfg = TrainConfig { steps: 300, ..config() };
    let a = run_protocol(&ds, "planted", &cfg, &protocol).unwrap();
    let b = run_protocol(&ds, "planted", &cfg, &protocol).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 3);
    assert_eq!(a[0].sampler, "p_sampling+unigram");
    let mut out = Vec::new();
    write_results(&a, cfg.seed, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# seed=7");
    assert_eq!(lines[1], "sampler,dataset,test_scheme,score");
    assert!(lines[2].starts_with("p_sampling+unigram,planted,uniform_vertex,"));
    assert_eq!(lines.len(), 5);
}
