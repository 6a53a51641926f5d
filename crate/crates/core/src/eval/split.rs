use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::rng::Rng;
use crate::sampler::p_sample;

/// How test vertices are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestScheme {
    UniformVertex,
    PSampling,
    RandomWalk,
}

impl TestScheme {
    pub const ALL: [TestScheme; 3] = [TestScheme::UniformVertex, TestScheme::PSampling, TestScheme::RandomWalk];

    pub fn name(self) -> &'static str {
        match self {
            TestScheme::UniformVertex => "uniform_vertex",
            TestScheme::PSampling => "p_sampling",
            TestScheme::RandomWalk => "random_walk",
        }
    }
}

impl fmt::Display for TestScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestScheme::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::config(format!("unknown test scheme {s:?}")))
    }
}

/// Disjoint train and test vertex sets, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<Vertex>,
    pub test: Vec<Vertex>,
    pub scheme: TestScheme,
}

impl Split {
    fn from_test(n: usize, mut test: Vec<Vertex>, scheme: TestScheme) -> Split {
        test.sort_unstable();
        test.dedup();
        let mut in_test = vec![false; n];
        test.iter().for_each(|&v| in_test[v] = true);
        let train = (0..n).filter(|&v| !in_test[v]).collect();
        Split { train, test, scheme }
    }
}

/// Draw a test set of about `fraction` of the vertices; every other vertex
/// is a training vertex.
pub fn make_split(graph: &Graph, fraction: f64, scheme: TestScheme, rng: &mut Rng) -> Result<Split> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::config(format!("test fraction must lie in [0, 1], got {fraction}")));
    }
    let n = graph.vertex_count();
    let target = (fraction * n as f64).round() as usize;
    if target == 0 {
        return Ok(Split::from_test(n, Vec::new(), scheme));
    }
    let test = match scheme {
        TestScheme::UniformVertex => index::sample(rng, n, target).into_vec(),
        TestScheme::PSampling => {
            let p = retention_for(graph, target as f64);
            p_sample(graph, p, rng).vertices
        }
        TestScheme::RandomWalk => walk_cover(graph, target, rng),
    };
    Ok(Split::from_test(n, test, scheme))
}

/// Expected number of non-isolated survivors of one p-draw.
pub fn expected_survivors(graph: &Graph, p: f64) -> f64 {
    graph.degrees().map(|d| p * (1.0 - (1.0 - p).powi(d as i32))).sum()
}

/// Retention probability whose expected survivor count is `target`, by
/// bisection; saturates at 1 when the target is out of reach.
pub fn retention_for(graph: &Graph, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    if expected_survivors(graph, hi) <= target {
        return 1.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if expected_survivors(graph, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Distinct vertices of a walk extended until `target` are covered. A walk
/// trapped in an exhausted component restarts at an unvisited vertex.
fn walk_cover(graph: &Graph, target: usize, rng: &mut Rng) -> Vec<Vertex> {
    let n = graph.vertex_count();
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(target);
    let patience = 20 * n.max(1);
    let mut current: Option<Vertex> = None;
    let mut idle = 0;
    while out.len() < target {
        let v = match current {
            Some(v) if idle < patience && graph.degree(v) > 0 => {
                let nb = graph.neighbors(v);
                nb[rng.random_range(0..nb.len())]
            }
            _ => {
                let fresh: Vec<Vertex> = (0..n).filter(|&u| !seen[u] && graph.degree(u) > 0).collect();
                if fresh.is_empty() {
                    break;
                }
                idle = 0;
                fresh[rng.random_range(0..fresh.len())]
            }
        };
        if !seen[v] {
            seen[v] = true;
            out.push(v);
            idle = 0;
        } else {
            idle += 1;
        }
        current = Some(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn ring(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)))
    }

    #[test]
    fn uniform_half_of_ten() {
        let s = make_split(&ring(10), 0.5, TestScheme::UniformVertex, &mut rng::stream(1, 0)).unwrap();
        assert_eq!(s.test.len(), 5);
        assert_eq!(s.train.len(), 5);
    }

    #[test]
    fn zero_fraction_gives_empty_test() {
        for scheme in TestScheme::ALL {
            let s = make_split(&ring(10), 0.0, scheme, &mut rng::stream(1, 0)).unwrap();
            assert!(s.test.is_empty());
            assert_eq!(s.train.len(), 10);
        }
    }

    #[test]
    fn psample_test_vertices_have_test_neighbors() {
        let g = Graph::from_edges(40, (0..40).flat_map(|v| [(v, (v + 1) % 40), (v, (v + 7) % 40)]));
        for seed in 0..20 {
            let s = make_split(&g, 0.5, TestScheme::PSampling, &mut rng::stream(seed, 0)).unwrap();
            for &v in &s.test {
                assert!(g.neighbors(v).iter().any(|u| s.test.binary_search(u).is_ok()));
            }
        }
    }

    #[test]
    fn retention_hits_expected_fraction() {
        let g = ring(100);
        let p = retention_for(&g, 50.0);
        assert!((expected_survivors(&g, p) - 50.0).abs() < 1e-6);
        assert_eq!(retention_for(&g, 100.0), 1.0);
    }

    #[test]
    fn walk_split_covers_target_across_components() {
        let g = Graph::from_edges(8, [(0, 1), (1, 2), (3, 4), (5, 6), (6, 7)]);
        let s = make_split(&g, 0.75, TestScheme::RandomWalk, &mut rng::stream(3, 0)).unwrap();
        assert_eq!(s.test.len(), 6);
    }

    #[test]
    fn bad_fraction_is_rejected() {
        assert!(make_split(&ring(4), 1.5, TestScheme::UniformVertex, &mut rng::stream(1, 0)).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in TestScheme::ALL {
            assert_eq!(s.name().parse::<TestScheme>().unwrap(), s);
        }
    }

    proptest::proptest! {
        #[test]
        fn splits_are_disjoint_and_reproducible(seed in 0u64..1000, frac in 0.0f64..=1.0, which in 0usize..3) {
            let g = Graph::from_edges(30, (0..30).flat_map(|v| [(v, (v + 1) % 30), (v, (v * 3 + 1) % 30)]));
            let scheme = TestScheme::ALL[which];
            let a = make_split(&g, frac, scheme, &mut rng::stream(seed, 0)).unwrap();
            let b = make_split(&g, frac, scheme, &mut rng::stream(seed, 0)).unwrap();
            proptest::prop_assert_eq!(&a, &b);
            proptest::prop_assert_eq!(a.train.len() + a.test.len(), 30);
            for v in &a.test {
                proptest::prop_assert!(a.train.binary_search(v).is_err());
            }
        }
    }
}
