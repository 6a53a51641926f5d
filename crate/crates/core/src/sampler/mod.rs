//! Graph subsampling algorithms. A sampler configuration fixes the notion of
//! "example" that the relational empirical risk averages over.

mod negative;
mod psample;
mod walk;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Pair, Vertex};
use crate::rng::Rng;

pub use negative::{build_unigram, negative_induced, negative_unigram, UnigramTable};
pub use psample::{p_sample, uniform_edge_sample};
pub use walk::{random_walk, random_walk_from, rw_induced_sample, rw_skipgram_sample, skipgram_pairs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    RwSkipgram,
    RwInduced,
    PSampling,
    UniformEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeSampling {
    None,
    Induced,
    Unigram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkStart {
    UniformVertex,
    DegreeProportional,
}

macro_rules! name_table {
    ($ty:ty { $($variant:ident => $name:literal),* $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $(Self::$variant => $name),* }
            }
        }

        impl std::str::FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(Self::$variant),)*
                    other => Err(Error::config(format!(
                        "unknown {} {other:?} (expected one of: {})",
                        stringify!($ty),
                        [$($name),*].join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

name_table!(Algorithm {
    RwSkipgram => "rw_skipgram",
    RwInduced => "rw_induced",
    PSampling => "p_sampling",
    UniformEdge => "uniform_edge",
});
name_table!(NegativeSampling {
    None => "none",
    Induced => "induced",
    Unigram => "unigram",
});
name_table!(WalkStart {
    UniformVertex => "uniform_vertex",
    DegreeProportional => "degree_proportional",
});

/// Which sampler produced a subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSource {
    pub algorithm: Algorithm,
    pub negative: NegativeSampling,
}

impl fmt::Display for SampleSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.algorithm, self.negative)
    }
}

/// One draw of a subsampling algorithm.
///
/// `vertices[..positive_vertex_count]` are the vertices reported by the base
/// algorithm; any vertices after that were introduced as unigram negative
/// candidates. Pair lists are multisets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSubgraph {
    pub vertices: Vec<Vertex>,
    pub positive_pairs: Vec<Pair>,
    pub negative_pairs: Vec<Pair>,
    pub positive_vertex_count: usize,
    pub source: SampleSource,
}

impl SampledSubgraph {
    pub fn empty(source: SampleSource) -> SampledSubgraph {
        SampledSubgraph {
            vertices: Vec::new(),
            positive_pairs: Vec::new(),
            negative_pairs: Vec::new(),
            positive_vertex_count: 0,
            source,
        }
    }

    /// Vertices of the positive (base) sample.
    pub fn positive_vertices(&self) -> &[Vertex] {
        &self.vertices[..self.positive_vertex_count]
    }

    pub fn pair_count(&self) -> usize {
        self.positive_pairs.len() + self.negative_pairs.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    /// Random-walk steps; a walk visits `walk_length + 1` vertices.
    pub walk_length: usize,
    pub window: usize,
    /// Vertex retention probability for p-sampling.
    pub retention: f64,
    /// Edges drawn (with replacement) by uniform edge sampling.
    pub edge_count: usize,
    pub negative: NegativeSampling,
    pub unigram_power: f64,
    pub negatives_per_vertex: usize,
    pub walk_start: WalkStart,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            algorithm: Algorithm::RwSkipgram,
            walk_length: 80,
            window: 10,
            retention: 0.1,
            edge_count: 100,
            negative: NegativeSampling::Unigram,
            unigram_power: 0.75,
            negatives_per_vertex: 5,
            walk_start: WalkStart::UniformVertex,
        }
    }
}

impl SamplerConfig {
    pub fn p_sampling(retention: f64, negative: NegativeSampling) -> Self {
        SamplerConfig {
            algorithm: Algorithm::PSampling,
            retention,
            negative,
            ..Default::default()
        }
    }

    pub fn rw_induced(walk_length: usize, negative: NegativeSampling) -> Self {
        SamplerConfig {
            algorithm: Algorithm::RwInduced,
            walk_length,
            negative,
            ..Default::default()
        }
    }

    pub fn rw_skipgram(walk_length: usize, window: usize, negative: NegativeSampling) -> Self {
        SamplerConfig {
            algorithm: Algorithm::RwSkipgram,
            walk_length,
            window,
            negative,
            ..Default::default()
        }
    }

    pub fn uniform_edge(edge_count: usize, negative: NegativeSampling) -> Self {
        SamplerConfig {
            algorithm: Algorithm::UniformEdge,
            edge_count,
            negative,
            ..Default::default()
        }
    }

    pub fn source(&self) -> SampleSource {
        SampleSource {
            algorithm: self.algorithm,
            negative: self.negative,
        }
    }

    /// Every violated constraint, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.retention) {
            v.push(format!("sampler.retention must lie in [0, 1], got {}", self.retention));
        }
        if !(self.unigram_power > 0.0 && self.unigram_power.is_finite()) {
            v.push(format!("sampler.unigram_power must be > 0, got {}", self.unigram_power));
        }
        if self.walk_length < 1 {
            v.push("sampler.walk_length must be >= 1".into());
        }
        if self.window < 1 {
            v.push("sampler.window must be >= 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::config(v.join("; ")))
        }
    }
}

/// A validated sampler bound to one graph, with its unigram table prebuilt.
#[derive(Debug, Clone)]
pub struct Sampler<'g> {
    graph: &'g Graph,
    config: SamplerConfig,
    unigram: Option<UnigramTable>,
}

impl<'g> Sampler<'g> {
    pub fn new(graph: &'g Graph, config: SamplerConfig) -> Result<Sampler<'g>> {
        config.validate()?;
        if config.algorithm != Algorithm::PSampling && graph.edge_count() == 0 {
            return Err(Error::NoWalk);
        }
        let unigram = match config.negative {
            NegativeSampling::Unigram => Some(build_unigram(graph, config.unigram_power)?),
            _ => None,
        };
        Ok(Sampler {
            graph,
            config,
            unigram,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// Draw the base sample, then apply the configured negative sampler.
    pub fn draw(&self, rng: &mut Rng) -> SampledSubgraph {
        let g = self.graph;
        let c = &self.config;
        let mut sample = match c.algorithm {
            Algorithm::RwSkipgram => walk::rw_skipgram_sample(g, c.walk_length, c.window, c.walk_start, rng),
            Algorithm::RwInduced => walk::rw_induced_sample(g, c.walk_length, c.walk_start, rng),
            Algorithm::PSampling => {
                psample::p_sample_impl(g, c.retention, c.negative != NegativeSampling::Unigram, rng)
            }
            Algorithm::UniformEdge => psample::uniform_edge_sample(g, c.edge_count, rng),
        }
        .expect("graph checked non-empty at construction");
        sample = match c.negative {
            NegativeSampling::None => sample,
            NegativeSampling::Induced => negative_induced(g, &sample),
            NegativeSampling::Unigram => {
                sample.negative_pairs.clear();
                let table = self.unigram.as_ref().expect("unigram table built");
                negative_unigram(g, &sample, table, c.negatives_per_vertex, rng)
            }
        };
        sample.source = c.source();
        sample
    }
}

/// One-shot draw; builds the sampler (and unigram table) on every call.
pub fn draw(graph: &Graph, config: &SamplerConfig, rng: &mut Rng) -> Result<SampledSubgraph> {
    Ok(Sampler::new(graph, config.clone())?.draw(rng))
}

/// First-appearance deduplication.
pub(crate) fn distinct(seq: &[Vertex]) -> Vec<Vertex> {
    let mut seen = std::collections::HashSet::with_capacity(seq.len());
    seq.iter().copied().filter(|v| seen.insert(*v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)])
    }

    #[test]
    fn p_one_induced_on_triangle_is_whole_graph() {
        let g = triangle();
        let cfg = SamplerConfig::p_sampling(1.0, NegativeSampling::Induced);
        let s = draw(&g, &cfg, &mut rng::stream(1, 0)).unwrap();
        assert_eq!(s.vertices.len(), 3);
        assert_eq!(s.positive_pairs.len(), 3);
        assert!(s.negative_pairs.is_empty());
    }

    #[test]
    fn same_seed_same_sample() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]);
        for algorithm in [
            Algorithm::RwSkipgram,
            Algorithm::RwInduced,
            Algorithm::PSampling,
            Algorithm::UniformEdge,
        ] {
            for negative in [NegativeSampling::None, NegativeSampling::Induced, NegativeSampling::Unigram] {
                let cfg = SamplerConfig {
                    algorithm,
                    negative,
                    walk_length: 5,
                    window: 3,
                    retention: 0.6,
                    edge_count: 4,
                    ..Default::default()
                };
                let a = draw(&g, &cfg, &mut rng::stream(42, 3)).unwrap();
                let b = draw(&g, &cfg, &mut rng::stream(42, 3)).unwrap();
                assert_eq!(a, b, "{algorithm} {negative}");
            }
        }
    }

    #[test]
    fn rw_induced_with_unigram_on_path_is_valid() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]);
        let cfg = SamplerConfig {
            negatives_per_vertex: 2,
            ..SamplerConfig::rw_induced(2, NegativeSampling::Unigram)
        };
        let mut r = rng::stream(5, 0);
        for _ in 0..200 {
            let s = draw(&g, &cfg, &mut r).unwrap();
            for &(a, b) in &s.positive_pairs {
                assert!(g.has_edge(a, b));
            }
            for &(a, b) in &s.negative_pairs {
                assert!(a != b && !g.has_edge(a, b));
            }
            for &(a, b) in s.positive_pairs.iter().chain(&s.negative_pairs) {
                assert!(s.vertices.contains(&a) && s.vertices.contains(&b));
            }
        }
    }

    #[test]
    fn config_violations_are_all_listed() {
        let cfg = SamplerConfig {
            retention: 1.5,
            unigram_power: 0.0,
            walk_length: 0,
            window: 0,
            ..Default::default()
        };
        assert_eq!(cfg.violations().len(), 4);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for a in [Algorithm::RwSkipgram, Algorithm::PSampling] {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("forest_fire".parse::<Algorithm>().is_err());
    }
}
