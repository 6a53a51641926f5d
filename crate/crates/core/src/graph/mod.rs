//! Immutable undirected simple graphs in compressed adjacency form.

mod io;
mod labels;

use std::collections::HashSet;
use std::fmt;

pub use io::{
    load_edge_list, read_cache, read_id_map, write_cache, write_edge_list, write_id_map, IdMap,
    LoadOptions, Loaded,
};
pub use labels::{load_categories, load_labels, load_labels_mapped, CategoryMap, LabelTable};

/// Dense vertex index.
pub type Vertex = usize;

/// Unordered vertex pair, stored as reported by the producer.
pub type Pair = (Vertex, Vertex);

/// Undirected simple graph. Neighbor lists are sorted, the edge list holds
/// each edge once as `(u, v)` with `u < v`.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<Vertex>,
    edges: Vec<Pair>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("vertex_count", &self.vertex_count())
            .field("edge_count", &self.edge_count())
            .finish()
    }
}

impl Graph {
    /// Build from an undirected edge list over `vertex_count` vertices.
    /// Self-loops are dropped, duplicate and reversed edges merged.
    pub fn from_edges(vertex_count: usize, edges: impl IntoIterator<Item = Pair>) -> Graph {
        let mut list: Vec<Pair> = edges
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| if u < v { (u, v) } else { (v, u) })
            .inspect(|&(_, v)| assert!(v < vertex_count, "vertex {v} out of range"))
            .collect();
        list.sort_unstable();
        list.dedup();

        let mut degree = vec![0usize; vertex_count];
        for &(u, v) in &list {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..vertex_count].to_vec();
        let mut neighbors = vec![0; offsets[vertex_count]];
        for &(u, v) in &list {
            neighbors[cursor[u]] = v;
            cursor[u] += 1;
            neighbors[cursor[v]] = u;
            cursor[v] += 1;
        }
        for v in 0..vertex_count {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Graph {
            offsets,
            neighbors,
            edges: list,
        }
    }

    /// Assemble a graph from its storage without checking any invariant.
    /// Use [`validate`] on the result when the parts are untrusted.
    pub fn from_raw_parts(offsets: Vec<usize>, neighbors: Vec<Vertex>, edges: Vec<Pair>) -> Graph {
        Graph {
            offsets,
            neighbors,
            edges,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn edges(&self) -> &[Pair] {
        &self.edges
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn neighbor_block(&self) -> &[Vertex] {
        &self.neighbors
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn is_isolated(&self, v: Vertex) -> bool {
        self.degree(v) == 0
    }
}

/// Split all unordered pairs of `vertices` into edges and non-edges of `graph`.
/// Duplicate entries in `vertices` are ignored. Pairs are reported as
/// `(a, b)` following the order of first appearance in `vertices`.
pub fn induced_pairs(graph: &Graph, vertices: &[Vertex]) -> (Vec<Pair>, Vec<Pair>) {
    let mut seen = HashSet::with_capacity(vertices.len());
    let distinct: Vec<Vertex> = vertices.iter().copied().filter(|v| seen.insert(*v)).collect();
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for (i, &a) in distinct.iter().enumerate() {
        for &b in &distinct[i + 1..] {
            if graph.has_edge(a, b) {
                positive.push((a, b));
            } else {
                negative.push((a, b));
            }
        }
    }
    (positive, negative)
}

/// One violated structural invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MalformedOffsets,
    SelfLoop(Vertex),
    UnsortedNeighbors(Vertex),
    DuplicateNeighbor(Vertex, Vertex),
    NeighborOutOfRange(Vertex, Vertex),
    Asymmetric(Vertex, Vertex),
    DegreeSumMismatch { degree_sum: usize, edge_count: usize },
    EdgeListMismatch { listed: usize, adjacency: usize },
    EdgeNotOrdered(Pair),
    DuplicateEdge(Pair),
    EdgeMissingFromAdjacency(Pair),
}

/// Every invariant violation found in `graph`; empty iff the graph is valid.
pub fn validate(graph: &Graph) -> Vec<Violation> {
    let mut report = Vec::new();
    let n = graph.vertex_count();
    let offsets = &graph.offsets;
    if offsets.is_empty()
        || offsets[0] != 0
        || offsets.windows(2).any(|w| w[0] > w[1])
        || *offsets.last().unwrap() != graph.neighbors.len()
    {
        report.push(Violation::MalformedOffsets);
        return report;
    }

    for u in 0..n {
        let nbrs = graph.neighbors(u);
        for w in nbrs.windows(2) {
            if w[0] == w[1] {
                report.push(Violation::DuplicateNeighbor(u, w[0]));
            } else if w[0] > w[1] {
                report.push(Violation::UnsortedNeighbors(u));
            }
        }
        for &v in nbrs {
            if v >= n {
                report.push(Violation::NeighborOutOfRange(u, v));
            } else if v == u {
                report.push(Violation::SelfLoop(u));
            } else if !graph.neighbors(v).contains(&u) {
                report.push(Violation::Asymmetric(u, v));
            }
        }
    }

    let degree_sum = graph.neighbors.len();
    if degree_sum != 2 * graph.edges.len() {
        report.push(Violation::DegreeSumMismatch {
            degree_sum,
            edge_count: graph.edges.len(),
        });
    }

    let mut seen = HashSet::with_capacity(graph.edges.len());
    for &(u, v) in &graph.edges {
        if u >= v {
            report.push(Violation::EdgeNotOrdered((u, v)));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            report.push(Violation::DuplicateEdge((u, v)));
        }
        if u < n && v < n && !graph.neighbors(u).contains(&v) {
            report.push(Violation::EdgeMissingFromAdjacency((u, v)));
        }
    }
    let adjacency_edges = (0..n)
        .flat_map(|u| graph.neighbors(u).iter().filter(move |&&v| u < v))
        .count();
    if adjacency_edges != graph.edges.len() {
        report.push(Violation::EdgeListMismatch {
            listed: graph.edges.len(),
            adjacency: adjacency_edges,
        });
    }
    report
}
