use rand::Rng as _;

use super::{distinct, Algorithm, NegativeSampling, SampleSource, SampledSubgraph, WalkStart};
use crate::error::{Error, Result};
use crate::graph::{induced_pairs, Graph, Pair, Vertex};
use crate::rng::Rng;

fn start_vertex(graph: &Graph, start: WalkStart, rng: &mut Rng) -> Result<Vertex> {
    if graph.edge_count() == 0 {
        return Err(Error::NoWalk);
    }
    Ok(match start {
        // isolated vertices cannot start a walk; redraw
        WalkStart::UniformVertex => loop {
            let v = rng.random_range(0..graph.vertex_count());
            if !graph.is_isolated(v) {
                break v;
            }
        },
        // each endpoint slot of the adjacency block is hit w.p. 1/2E
        WalkStart::DegreeProportional => {
            let block = graph.neighbor_block();
            block[rng.random_range(0..block.len())]
        }
    })
}

/// Simple random walk of `steps` steps, returning `steps + 1` vertices.
pub fn random_walk(graph: &Graph, steps: usize, start: WalkStart, rng: &mut Rng) -> Result<Vec<Vertex>> {
    let s = start_vertex(graph, start, rng)?;
    random_walk_from(graph, s, steps, rng)
}

pub fn random_walk_from(graph: &Graph, start: Vertex, steps: usize, rng: &mut Rng) -> Result<Vec<Vertex>> {
    if graph.is_isolated(start) {
        return Err(Error::NoWalk);
    }
    let mut walk = Vec::with_capacity(steps + 1);
    let mut v = start;
    walk.push(v);
    for _ in 0..steps {
        let nbrs = graph.neighbors(v);
        v = nbrs[rng.random_range(0..nbrs.len())];
        walk.push(v);
    }
    Ok(walk)
}

/// All `(walk[i], walk[j])` with `i < j` and `j - i < window`, skipping
/// pairs where the walk revisited the same vertex.
pub fn skipgram_pairs(walk: &[Vertex], window: usize) -> Vec<Pair> {
    let mut pairs = Vec::new();
    for i in 0..walk.len() {
        for j in i + 1..walk.len().min(i + window) {
            if walk[i] != walk[j] {
                pairs.push((walk[i], walk[j]));
            }
        }
    }
    pairs
}

pub(super) fn skipgram_from_walk(walk: &[Vertex], window: usize) -> SampledSubgraph {
    let vertices = distinct(walk);
    SampledSubgraph {
        positive_vertex_count: vertices.len(),
        vertices,
        positive_pairs: skipgram_pairs(walk, window),
        negative_pairs: Vec::new(),
        source: SampleSource {
            algorithm: Algorithm::RwSkipgram,
            negative: NegativeSampling::None,
        },
    }
}

pub(super) fn induced_from_walk(graph: &Graph, walk: &[Vertex]) -> SampledSubgraph {
    let vertices = distinct(walk);
    let (positive_pairs, _) = induced_pairs(graph, &vertices);
    SampledSubgraph {
        positive_vertex_count: vertices.len(),
        vertices,
        positive_pairs,
        negative_pairs: Vec::new(),
        source: SampleSource {
            algorithm: Algorithm::RwInduced,
            negative: NegativeSampling::None,
        },
    }
}

/// Random walk plus skipgram augmentation. Positives at distance >= 2 need
/// not be edges of the graph.
pub fn rw_skipgram_sample(
    graph: &Graph,
    steps: usize,
    window: usize,
    start: WalkStart,
    rng: &mut Rng,
) -> Result<SampledSubgraph> {
    let walk = random_walk(graph, steps, start, rng)?;
    Ok(skipgram_from_walk(&walk, window))
}

/// Random walk reported as the vertex-induced subgraph of its vertices.
pub fn rw_induced_sample(graph: &Graph, steps: usize, start: WalkStart, rng: &mut Rng) -> Result<SampledSubgraph> {
    let walk = random_walk(graph, steps, start, rng)?;
    Ok(induced_from_walk(graph, &walk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)])
    }

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)])
    }

    #[test]
    fn k2_walk_alternates() {
        let g = Graph::from_edges(2, [(0, 1)]);
        let w = random_walk_from(&g, 0, 3, &mut rng::stream(0, 0)).unwrap();
        assert_eq!(w, vec![0, 1, 0, 1]);
    }

    #[test]
    fn walks_follow_edges() {
        let g = triangle();
        let mut r = rng::stream(3, 0);
        for _ in 0..100 {
            let w = random_walk(&g, 2, WalkStart::UniformVertex, &mut r).unwrap();
            assert_eq!(w.len(), 3);
            assert!(w.windows(2).all(|p| g.has_edge(p[0], p[1])));
        }
    }

    #[test]
    fn edgeless_graph_has_no_walk() {
        let g = Graph::from_edges(3, []);
        assert!(matches!(
            random_walk(&g, 2, WalkStart::UniformVertex, &mut rng::stream(0, 0)),
            Err(Error::NoWalk)
        ));
    }

    #[test]
    fn isolated_vertices_never_start() {
        let g = Graph::from_edges(5, [(3, 4)]);
        let mut r = rng::stream(9, 0);
        for _ in 0..200 {
            let w = random_walk(&g, 1, WalkStart::UniformVertex, &mut r).unwrap();
            assert!(w[0] >= 3);
        }
    }

    #[test]
    fn path_one_step_walk_probability() {
        // exact: start uniform over {0,1,2}, P(1 -> 0) = 1/3 * 1/2
        let g = path3();
        let n = 100_000;
        let mut r = rng::stream(11, 0);
        let hits = (0..n)
            .filter(|_| random_walk(&g, 1, WalkStart::UniformVertex, &mut r).unwrap() == [1, 0])
            .count();
        let p = 1.0 / 6.0;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((hits as f64 - n as f64 * p).abs() < 3.0 * sd, "hits {hits}");
    }

    #[test]
    fn skipgram_pair_examples() {
        assert_eq!(skipgram_pairs(&[0, 1, 2, 3, 4], 2), vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        let mut p = skipgram_pairs(&[0, 1, 2], 3);
        p.sort();
        assert_eq!(p, vec![(0, 1), (0, 2), (1, 2)]);
        // index pairs at distance 1: (0,1),(1,0),(0,1); none dropped
        assert_eq!(skipgram_pairs(&[0, 1, 0, 1], 2), vec![(0, 1), (1, 0), (0, 1)]);
        // distance-2 pairs are revisits and get dropped
        assert_eq!(skipgram_pairs(&[0, 1, 0, 1], 3).len(), 3);
    }

    #[test]
    fn skipgram_count_before_drops() {
        let walk: Vec<Vertex> = (0..10).collect();
        for w in 1..12 {
            let expected: usize = (1..w).map(|d| walk.len().saturating_sub(d)).sum();
            assert_eq!(skipgram_pairs(&walk, w).len(), expected);
        }
    }

    #[test]
    fn skipgram_reports_non_edges() {
        let s = skipgram_from_walk(&[0, 1, 2], 3);
        assert!(s.positive_pairs.contains(&(0, 2)));
        assert!(!path3().has_edge(0, 2));
    }

    #[test]
    fn skipgram_on_k2_and_triangle() {
        let k2 = Graph::from_edges(2, [(0, 1)]);
        let s = rw_skipgram_sample(&k2, 2, 2, WalkStart::UniformVertex, &mut rng::stream(1, 0)).unwrap();
        let mut p: Vec<_> = s.positive_pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        p.sort();
        assert_eq!(p, vec![(0, 1), (0, 1)]);

        let tri = triangle();
        let s = rw_skipgram_sample(&tri, 4, 2, WalkStart::UniformVertex, &mut rng::stream(2, 0)).unwrap();
        assert_eq!(s.positive_pairs.len(), 4);
        assert!(s.positive_pairs.iter().all(|&(a, b)| tri.has_edge(a, b)));
    }

    #[test]
    fn induced_walk_examples() {
        let s = induced_from_walk(&path3(), &[0, 1, 2]);
        assert_eq!(s.positive_pairs, vec![(0, 1), (1, 2)]);
        assert!(s.negative_pairs.is_empty());

        let k2 = Graph::from_edges(2, [(0, 1)]);
        let s = induced_from_walk(&k2, &[0, 1, 0]);
        assert_eq!(s.vertices, vec![0, 1]);
        assert_eq!(s.positive_pairs, vec![(0, 1)]);

        let s = induced_from_walk(&triangle(), &[2, 0, 1]);
        assert_eq!(s.positive_pairs.len(), 3);
    }
}
