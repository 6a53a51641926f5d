use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use rerm_core::eval::synthetic::{overlapping_communities, CommunityConfig};
use rerm_core::graphex::{sample_graphex, GraphonSpec};
use rerm_core::sampler::NegativeSampling;
use rerm_core::trainer::init_params;
use rerm_core::{rng, Dataset, LossConfig, Sampler, SamplerConfig, TrainConfig};

fn community_graph() -> Dataset {
    overlapping_communities(&CommunityConfig::default(), &mut rng::stream(1, 0)).unwrap()
}

fn samplers(c: &mut Criterion) {
    let ds = community_graph();
    let configs = [
        ("p_sampling+induced", SamplerConfig::p_sampling(0.08, NegativeSampling::Induced)),
        ("rw_induced+unigram", SamplerConfig::rw_induced(80, NegativeSampling::Unigram)),
        ("rw_skipgram+unigram", SamplerConfig::rw_skipgram(80, 10, NegativeSampling::Unigram)),
        ("uniform_edge+unigram", SamplerConfig::uniform_edge(100, NegativeSampling::Unigram)),
    ];
    let mut group = c.benchmark_group("draw");
    for (name, cfg) in configs {
        let sampler = Sampler::new(&ds.graph, cfg).unwrap();
        let mut r = rng::stream(2, 0);
        group.bench_function(name, |b| b.iter(|| black_box(sampler.draw(&mut r))));
    }
    group.finish();
}

fn gradients(c: &mut Criterion) {
    let ds = community_graph();
    let tc = TrainConfig {
        embedding_dim: 128,
        ..TrainConfig::default()
    };
    let params = init_params(&ds, &tc);
    let sampler = Sampler::new(&ds.graph, SamplerConfig::rw_skipgram(80, 10, NegativeSampling::Unigram)).unwrap();
    let mut r = rng::stream(3, 0);
    let mut group = c.benchmark_group("gradient");
    for (name, loss) in [
        ("edge_only", LossConfig::edge_only()),
        ("node_classification", LossConfig::node_classification(0.001)),
    ] {
        let objective = ds.objective(loss);
        group.bench_function(name, |b| {
            b.iter_batched(
                || sampler.draw(&mut r),
                |s| black_box(objective.gradient(&s, &params).unwrap()),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let ds = community_graph();
    let tc = TrainConfig {
        sampler: SamplerConfig::rw_skipgram(80, 10, NegativeSampling::Unigram),
        embedding_dim: 64,
        steps: 200,
        eval_samples: 1,
        ..TrainConfig::default()
    };
    c.bench_function("train_200_steps", |b| b.iter(|| black_box(rerm_core::train(&ds, &tc).unwrap())));
}

fn graphex(c: &mut Criterion) {
    let spec = GraphonSpec::exponential();
    let mut group = c.benchmark_group("graphex");
    group.sample_size(10);
    for n in [50.0, 100.0, 200.0] {
        let mut r = rng::stream(4, 0);
        group.bench_function(format!("n={n}"), |b| b.iter(|| black_box(sample_graphex(&spec, n, &mut r).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, samplers, gradients, training, graphex);
criterion_main!(benches);
