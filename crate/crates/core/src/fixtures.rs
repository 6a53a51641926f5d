//! Small named graphs used by tests, benchmarks and the command line
//! (`fixture:<name>` in place of a graph path).

use crate::graph::Graph;

pub const NAMES: [&str; 10] = [
    "k2", "path3", "triangle", "star4", "path4", "cycle5", "bowtie", "house", "lollipop", "petersen",
];

pub fn named(name: &str) -> Option<Graph> {
    let (n, edges): (usize, Vec<(usize, usize)>) = match name {
        "k2" => (2, vec![(0, 1)]),
        "path3" => (3, vec![(0, 1), (1, 2)]),
        "triangle" => (3, vec![(0, 1), (1, 2), (0, 2)]),
        "star4" => (4, vec![(0, 1), (0, 2), (0, 3)]),
        "path4" => (4, vec![(0, 1), (1, 2), (2, 3)]),
        "cycle5" => (5, (0..5).map(|v| (v, (v + 1) % 5)).collect()),
        "bowtie" => (5, vec![(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]),
        "house" => (5, vec![(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (3, 4)]),
        // K4 with a three-edge tail and an isolated vertex
        "lollipop" => (
            8,
            vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4), (4, 5), (5, 6)],
        ),
        "petersen" => (
            10,
            (0..5)
                .flat_map(|i| [(i, (i + 1) % 5), (i, i + 5), (i + 5, (i + 2) % 5 + 5)])
                .collect(),
        ),
        _ => return None,
    };
    Some(Graph::from_edges(n, edges))
}

/// Every fixture, in [`NAMES`] order.
pub fn all() -> Vec<(&'static str, Graph)> {
    NAMES.iter().map(|&n| (n, named(n).unwrap())).collect()
}
