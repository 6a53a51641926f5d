use rand::Rng as _;

use super::{distinct, Algorithm, NegativeSampling, SampleSource, SampledSubgraph};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::rng::Rng;

/// p-sampling: keep each vertex independently with probability `p`, take the
/// induced subgraph, delete isolated vertices. Induced non-edges among the
/// surviving vertices are reported as negatives.
pub fn p_sample(graph: &Graph, p: f64, rng: &mut Rng) -> SampledSubgraph {
    p_sample_impl(graph, p, true, rng).expect("p-sampling cannot fail")
}

pub(super) fn p_sample_impl(graph: &Graph, p: f64, with_negatives: bool, rng: &mut Rng) -> Result<SampledSubgraph> {
    let n = graph.vertex_count();
    let mut retained = vec![false; n];
    let mut kept = Vec::new();
    for (v, slot) in retained.iter_mut().enumerate() {
        if rng.random::<f64>() < p {
            *slot = true;
            kept.push(v);
        }
    }
    Ok(from_retained(graph, &kept, &retained, with_negatives))
}

fn from_retained(graph: &Graph, kept: &[Vertex], retained: &[bool], with_negatives: bool) -> SampledSubgraph {
    let mut positive_pairs = Vec::new();
    let mut survives = Vec::with_capacity(kept.len());
    for &u in kept {
        let mut any = false;
        for &v in graph.neighbors(u) {
            if retained[v] {
                any = true;
                if u < v {
                    positive_pairs.push((u, v));
                }
            }
        }
        if any {
            survives.push(u);
        }
    }
    let mut negative_pairs = Vec::new();
    if with_negatives {
        for (i, &a) in survives.iter().enumerate() {
            for &b in &survives[i + 1..] {
                if !graph.has_edge(a, b) {
                    negative_pairs.push((a, b));
                }
            }
        }
    }
    SampledSubgraph {
        positive_vertex_count: survives.len(),
        vertices: survives,
        positive_pairs,
        negative_pairs,
        source: SampleSource {
            algorithm: Algorithm::PSampling,
            negative: NegativeSampling::Induced,
        },
    }
}

/// `k` edges drawn uniformly with replacement; the vertices are their endpoints.
pub fn uniform_edge_sample(graph: &Graph, k: usize, rng: &mut Rng) -> Result<SampledSubgraph> {
    let edges = graph.edges();
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let positive_pairs: Vec<_> = (0..k).map(|_| edges[rng.random_range(0..edges.len())]).collect();
    let endpoints: Vec<Vertex> = positive_pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    let vertices = distinct(&endpoints);
    Ok(SampledSubgraph {
        positive_vertex_count: vertices.len(),
        vertices,
        positive_pairs,
        negative_pairs: Vec::new(),
        source: SampleSource {
            algorithm: Algorithm::UniformEdge,
            negative: NegativeSampling::None,
        },
    })
}
