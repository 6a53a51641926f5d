//! Exhaustive evaluation of the relational empirical risk on small graphs.
//!
//! Every outcome of the sampler is enumerated with its exact probability and
//! the sampled subgraph is rebuilt directly from the definition of the
//! algorithm (pair-by-pair adjacency tests), independently of the samplers'
//! own construction code.

use serde::Serialize;

use super::estimate_risk;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Graph, Pair, Vertex};
use crate::model::{LossConfig, ParamStore};
use crate::rng::Rng;
use crate::sampler::{Algorithm, NegativeSampling, SampleSource, SampledSubgraph, Sampler, SamplerConfig, WalkStart};

/// Largest graph whose retention subsets are enumerated.
pub const MAX_ENUMERATED_VERTICES: usize = 20;
/// Largest number of walks (or edge tuples) enumerated.
pub const MAX_ENUMERATED_WALKS: usize = 1_000_000;

fn distinct(seq: &[Vertex]) -> Vec<Vertex> {
    let mut out: Vec<Vertex> = Vec::new();
    for &v in seq {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn all_pairs(graph: &Graph, vertices: &[Vertex]) -> (Vec<Pair>, Vec<Pair>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            let (a, b) = (vertices[i], vertices[j]);
            if graph.neighbors(a).contains(&b) {
                pos.push((a, b));
            } else {
                neg.push((a, b));
            }
        }
    }
    (pos, neg)
}

fn outcome(vertices: Vec<Vertex>, positive: Vec<Pair>, negative: Vec<Pair>, source: SampleSource) -> SampledSubgraph {
    SampledSubgraph {
        positive_vertex_count: vertices.len(),
        vertices,
        positive_pairs: positive,
        negative_pairs: negative,
        source,
    }
}

/// Visit every outcome of `config` on `graph` with its probability.
fn for_each_outcome(
    graph: &Graph,
    config: &SamplerConfig,
    mut visit: impl FnMut(f64, &SampledSubgraph) -> Result<()>,
) -> Result<()> {
    let source = config.source();
    match config.negative {
        NegativeSampling::Unigram => {
            return Err(Error::config("exact risk does not cover unigram negative sampling"));
        }
        NegativeSampling::None | NegativeSampling::Induced => {}
    }
    let induced_negatives = config.negative == NegativeSampling::Induced;
    match config.algorithm {
        Algorithm::PSampling => {
            let n = graph.vertex_count();
            if n > MAX_ENUMERATED_VERTICES {
                return Err(Error::TooLarge(format!(
                    "{n} vertices; subset enumeration is limited to {MAX_ENUMERATED_VERTICES}"
                )));
            }
            let p = config.retention;
            for mask in 0u64..(1u64 << n) {
                let kept = mask.count_ones() as i32;
                let prob = p.powi(kept) * (1.0 - p).powi(n as i32 - kept);
                if prob == 0.0 {
                    continue;
                }
                let inside = |v: Vertex| mask >> v & 1 == 1;
                let positive: Vec<Pair> = graph.edges().iter().copied().filter(|&(u, v)| inside(u) && inside(v)).collect();
                let survivors: Vec<Vertex> = (0..n)
                    .filter(|&v| positive.iter().any(|&(a, b)| a == v || b == v))
                    .collect();
                // p-sampling reports induced non-edges among survivors unless
                // a unigram pass replaces them
                let (_, negative) = all_pairs(graph, &survivors);
                visit(prob, &outcome(survivors, positive, negative, source))?;
            }
        }
        Algorithm::RwInduced | Algorithm::RwSkipgram => {
            let count = count_walks(graph, config.walk_length, config.walk_start);
            if count > MAX_ENUMERATED_WALKS as f64 {
                return Err(Error::TooLarge(format!(
                    "{count} walks; enumeration is limited to {MAX_ENUMERATED_WALKS}"
                )));
            }
            let starts = start_distribution(graph, config.walk_start);
            let mut path = Vec::with_capacity(config.walk_length + 1);
            for (v, &p0) in starts.iter().enumerate() {
                if p0 == 0.0 {
                    continue;
                }
                path.clear();
                path.push(v);
                walk_dfs(graph, config, induced_negatives, p0, &mut path, &mut visit)?;
            }
        }
        Algorithm::UniformEdge => {
            let m = graph.edge_count();
            let k = config.edge_count as u32;
            let total = (m as f64).powi(k as i32);
            if total > MAX_ENUMERATED_WALKS as f64 {
                return Err(Error::TooLarge(format!("{total} edge tuples")));
            }
            let prob = 1.0 / total;
            for code in 0..total as usize {
                let mut c = code;
                let mut picked = Vec::with_capacity(k as usize);
                for _ in 0..k {
                    picked.push(graph.edges()[c % m]);
                    c /= m;
                }
                let ends: Vec<Vertex> = picked.iter().flat_map(|&(u, v)| [u, v]).collect();
                let vertices = distinct(&ends);
                let s = if induced_negatives {
                    let (pos, neg) = all_pairs(graph, &vertices);
                    outcome(vertices, pos, neg, source)
                } else {
                    outcome(vertices, picked, Vec::new(), source)
                };
                visit(prob, &s)?;
            }
        }
    }
    Ok(())
}

fn start_distribution(graph: &Graph, start: WalkStart) -> Vec<f64> {
    let n = graph.vertex_count();
    match start {
        WalkStart::UniformVertex => {
            let active = (0..n).filter(|&v| !graph.is_isolated(v)).count() as f64;
            (0..n)
                .map(|v| if graph.is_isolated(v) { 0.0 } else { 1.0 / active })
                .collect()
        }
        WalkStart::DegreeProportional => {
            let two_m = 2.0 * graph.edge_count() as f64;
            (0..n).map(|v| graph.degree(v) as f64 / two_m).collect()
        }
    }
}

fn count_walks(graph: &Graph, steps: usize, start: WalkStart) -> f64 {
    let starts = start_distribution(graph, start);
    let mut paths: Vec<f64> = (0..graph.vertex_count()).map(|_| 1.0).collect();
    for _ in 0..steps {
        paths = (0..graph.vertex_count())
            .map(|v| graph.neighbors(v).iter().map(|&u| paths[u]).sum())
            .collect();
    }
    paths.iter().zip(&starts).filter(|(_, &p)| p > 0.0).map(|(c, _)| c).sum()
}

fn walk_dfs(
    graph: &Graph,
    config: &SamplerConfig,
    induced_negatives: bool,
    prob: f64,
    path: &mut Vec<Vertex>,
    visit: &mut impl FnMut(f64, &SampledSubgraph) -> Result<()>,
) -> Result<()> {
    if path.len() == config.walk_length + 1 {
        let vertices = distinct(path);
        let source = config.source();
        let s = if induced_negatives {
            let (pos, neg) = all_pairs(graph, &vertices);
            outcome(vertices, pos, neg, source)
        } else if config.algorithm == Algorithm::RwInduced {
            let (pos, _) = all_pairs(graph, &vertices);
            outcome(vertices, pos, Vec::new(), source)
        } else {
            let mut pos = Vec::new();
            for i in 0..path.len() {
                for j in i + 1..path.len() {
                    if j - i < config.window && path[i] != path[j] {
                        pos.push((path[i], path[j]));
                    }
                }
            }
            outcome(vertices, pos, Vec::new(), source)
        };
        return visit(prob, &s);
    }
    let v = *path.last().unwrap();
    let step = prob / graph.degree(v) as f64;
    for &u in graph.neighbors(v) {
        path.push(u);
        walk_dfs(graph, config, induced_negatives, step, path, visit)?;
        path.pop();
    }
    Ok(())
}

/// Exact relational empirical risk: expected loss over all sampler outcomes.
pub fn exact_risk(dataset: &Dataset, params: &ParamStore, sampler: &SamplerConfig, loss: LossConfig) -> Result<f64> {
    let objective = dataset.objective(loss);
    let mut risk = 0.0;
    for_each_outcome(&dataset.graph, sampler, |p, s| {
        risk += p * objective.loss(s, params)?;
        Ok(())
    })?;
    Ok(risk)
}

/// Exact risk under p-sampling, by enumeration of all `2^V` retention sets.
pub fn exact_risk_psample(dataset: &Dataset, params: &ParamStore, p: f64, loss: LossConfig) -> Result<f64> {
    exact_risk(dataset, params, &SamplerConfig::p_sampling(p, NegativeSampling::Induced), loss)
}

/// Exact risk under the induced random-walk sampler, by enumeration of all walks.
pub fn exact_risk_walk(
    dataset: &Dataset,
    params: &ParamStore,
    steps: usize,
    start: WalkStart,
    loss: LossConfig,
) -> Result<f64> {
    let cfg = SamplerConfig {
        walk_start: start,
        ..SamplerConfig::rw_induced(steps, NegativeSampling::None)
    };
    exact_risk(dataset, params, &cfg, loss)
}

/// Gradient of the exact risk, flattened in [`ParamStore::layout`] order.
pub fn exact_gradient(
    dataset: &Dataset,
    params: &ParamStore,
    sampler: &SamplerConfig,
    loss: LossConfig,
) -> Result<Vec<f64>> {
    let objective = dataset.objective(loss);
    let layout = params.layout();
    let mut grad = vec![0.0; layout.len()];
    for_each_outcome(&dataset.graph, sampler, |p, s| {
        objective.gradient(s, params)?.add_to_flat(&layout, p, &mut grad);
        Ok(())
    })?;
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoordinateCheck {
    pub index: usize,
    pub exact: f64,
    pub mean: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnbiasednessReport {
    pub n_samples: usize,
    pub coordinates: Vec<CoordinateCheck>,
    pub max_abs_z: f64,
}

impl UnbiasednessReport {
    pub fn passes(&self, z_limit: f64) -> bool {
        self.max_abs_z < z_limit
    }
}

/// Compare the mean of `n` stochastic gradients with the exact risk gradient.
///
/// Coordinates with zero sample variance must agree with the exact value to
/// `1e-9` relative; they get `z = 0` when they do and `z = inf` otherwise.
pub fn check_unbiasedness(
    dataset: &Dataset,
    params: &ParamStore,
    sampler: &SamplerConfig,
    loss: LossConfig,
    n: usize,
    rng: &mut Rng,
) -> Result<UnbiasednessReport> {
    if n < 2 {
        return Err(Error::config("unbiasedness check needs at least two samples"));
    }
    let exact = exact_gradient(dataset, params, sampler, loss)?;
    let objective = dataset.objective(loss);
    let draw = Sampler::new(&dataset.graph, sampler.clone())?;
    let layout = params.layout();
    let mut mean = vec![0.0; layout.len()];
    let mut m2 = vec![0.0; layout.len()];
    let mut g = vec![0.0; layout.len()];
    for i in 0..n {
        g.iter_mut().for_each(|x| *x = 0.0);
        objective.gradient(&draw.draw(rng), params)?.add_to_flat(&layout, 1.0, &mut g);
        let count = (i + 1) as f64;
        for k in 0..g.len() {
            let delta = g[k] - mean[k];
            mean[k] += delta / count;
            m2[k] += delta * (g[k] - mean[k]);
        }
    }
    let coordinates: Vec<CoordinateCheck> = (0..layout.len())
        .map(|k| {
            let std_error = (m2[k] / (n - 1) as f64 / n as f64).sqrt();
            let diff = mean[k] - exact[k];
            let z = if std_error > 0.0 {
                diff / std_error
            } else if diff.abs() <= 1e-9 * exact[k].abs().max(1.0) {
                0.0
            } else {
                f64::INFINITY
            };
            CoordinateCheck {
                index: k,
                exact: exact[k],
                mean: mean[k],
                std_error,
                z,
            }
        })
        .collect();
    let max_abs_z = coordinates.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
    Ok(UnbiasednessReport {
        n_samples: n,
        coordinates,
        max_abs_z,
    })
}

/// Monte-Carlo risk at the configured sampler, for comparison with [`exact_risk`].
pub fn monte_carlo_risk(
    dataset: &Dataset,
    params: &ParamStore,
    sampler: &SamplerConfig,
    loss: LossConfig,
    n: usize,
    rng: &mut Rng,
) -> Result<super::RiskEstimate> {
    let s = Sampler::new(&dataset.graph, sampler.clone())?;
    estimate_risk(&s, &dataset.objective(loss), params, n, rng)
}
