//! Labelled random graphs with known structure.

use rand::Rng as _;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelTable};
use crate::rng::Rng;

/// Equal-size blocks; each vertex carries exactly its block's label.
pub fn planted_partition(blocks: usize, block_size: usize, p_in: f64, p_out: f64, rng: &mut Rng) -> Result<Dataset> {
    if blocks == 0 || block_size == 0 {
        return Err(Error::config("planted partition needs at least one nonempty block"));
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config(format!("{name} must lie in [0, 1], got {p}")));
        }
    }
    let n = blocks * block_size;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if u / block_size == v / block_size { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let mut labels = LabelTable::new(n, blocks);
    for v in 0..n {
        labels.set(v, v / block_size, true);
    }
    Ok(Dataset::new(Graph::from_edges(n, edges)).with_labels(labels))
}

/// Overlapping communities with heavy-tailed degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityConfig {
    pub vertices: usize,
    pub communities: usize,
    /// Probability of each extra membership beyond the first.
    pub extra_membership: f64,
    /// Pareto shape of the degree propensities.
    pub degree_shape: f64,
    pub mean_degree: f64,
    /// Fraction of edge mass placed between vertices sharing a community.
    pub assortativity: f64,
    /// Chance that an observed label bit is flipped.
    pub label_noise: f64,
}

impl Default for CommunityConfig {
    fn default() -> Self {
        CommunityConfig {
            vertices: 1000,
            communities: 12,
            extra_membership: 0.1,
            degree_shape: 2.5,
            mean_degree: 12.0,
            assortativity: 0.8,
            label_noise: 0.02,
        }
    }
}

/// Degree-corrected overlapping community graph. Edge probability between
/// `u` and `v` is proportional to `θ_u θ_v`, boosted when they share a
/// community; labels are the (noisy) memberships.
pub fn overlapping_communities(cfg: &CommunityConfig, rng: &mut Rng) -> Result<Dataset> {
    if cfg.vertices < 2 || cfg.communities == 0 || cfg.degree_shape <= 1.0 || cfg.mean_degree <= 0.0 {
        return Err(Error::config("community graph needs >= 2 vertices, >= 1 community, shape > 1, mean degree > 0"));
    }
    let (n, c) = (cfg.vertices, cfg.communities);
    let pareto = Pareto::new(1.0, cfg.degree_shape).map_err(|e| Error::config(e.to_string()))?;
    let theta: Vec<f64> = (0..n).map(|_| pareto.sample(rng)).collect();
    let mut member = vec![false; n * c];
    for v in 0..n {
        member[v * c + rng.random_range(0..c)] = true;
        for k in 0..c {
            if rng.random_bool(cfg.extra_membership / c as f64) {
                member[v * c + k] = true;
            }
        }
    }
    let shares = |u: usize, v: usize| (0..c).any(|k| member[u * c + k] && member[v * c + k]);
    let mut w_in = 0.0;
    let mut w_out = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            let w = theta[u] * theta[v];
            if shares(u, v) {
                w_in += w;
            } else {
                w_out += w;
            }
        }
    }
    let target = cfg.mean_degree * n as f64 / 2.0;
    let a_in = cfg.assortativity * target / w_in.max(f64::MIN_POSITIVE);
    let a_out = (1.0 - cfg.assortativity) * target / w_out.max(f64::MIN_POSITIVE);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let a = if shares(u, v) { a_in } else { a_out };
            if rng.random_bool((a * theta[u] * theta[v]).min(1.0)) {
                edges.push((u, v));
            }
        }
    }
    let mut labels = LabelTable::new(n, c);
    for v in 0..n {
        for k in 0..c {
            let flip = rng.random_bool(cfg.label_noise);
            labels.set(v, k, member[v * c + k] != flip);
        }
    }
    Ok(Dataset::new(Graph::from_edges(n, edges)).with_labels(labels))
}
