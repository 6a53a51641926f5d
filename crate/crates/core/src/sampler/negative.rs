use std::collections::HashSet;

use rand::distr::Distribution;
use rand_distr::weighted::WeightedAliasIndex;

use super::SampledSubgraph;
use crate::error::{Error, Result};
use crate::graph::{induced_pairs, Graph, Vertex};
use crate::rng::Rng;

/// Induced negative sampling: report the subgraph of the full graph induced
/// by the sample's vertices, edges as positives and non-edges as negatives.
pub fn negative_induced(graph: &Graph, sample: &SampledSubgraph) -> SampledSubgraph {
    let (positive_pairs, negative_pairs) = induced_pairs(graph, &sample.vertices);
    SampledSubgraph {
        vertices: sample.vertices.clone(),
        positive_vertex_count: sample.vertices.len(),
        positive_pairs,
        negative_pairs,
        source: sample.source,
    }
}

/// Degree-based unigram distribution raised to a power, `P(v) ∝ d(v)^τ`,
/// with an alias table for constant-time draws.
#[derive(Debug, Clone)]
pub struct UnigramTable {
    probabilities: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

impl UnigramTable {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample(&self, rng: &mut Rng) -> Vertex {
        self.alias.sample(rng)
    }
}

pub fn build_unigram(graph: &Graph, power: f64) -> Result<UnigramTable> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::config(format!("unigram power must be > 0, got {power}")));
    }
    let weights: Vec<f64> = graph
        .degrees()
        .map(|d| if d == 0 { 0.0 } else { (d as f64).powf(power) })
        .collect();
    let z: f64 = weights.iter().sum();
    if z <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let probabilities = weights.iter().map(|w| w / z).collect();
    let alias = WeightedAliasIndex::new(weights).map_err(|e| Error::config(format!("unigram table: {e}")))?;
    Ok(UnigramTable { probabilities, alias })
}

/// Unigram negative sampling: for each sampled vertex `v`, draw `k`
/// candidates from `table`; every candidate `u != v` with `(v, u)` a non-edge
/// of the full graph becomes a negative pair, and `u` joins the vertex list.
pub fn negative_unigram(
    graph: &Graph,
    sample: &SampledSubgraph,
    table: &UnigramTable,
    k: usize,
    rng: &mut Rng,
) -> SampledSubgraph {
    let mut out = sample.clone();
    let mut present: HashSet<Vertex> = sample.vertices.iter().copied().collect();
    for &v in &sample.vertices {
        for _ in 0..k {
            let u = table.sample(rng);
            if u != v && !graph.has_edge(v, u) {
                out.negative_pairs.push((v, u));
                if present.insert(u) {
                    out.vertices.push(u);
                }
            }
        }
    }
    out
}
