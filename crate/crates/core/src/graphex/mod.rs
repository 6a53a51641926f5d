//! Graphex processes: vertices are points of a Poisson process on
//! `[0, n] × [0, x_max]` (label × latent feature) and each pair connects
//! independently with probability `W(x_i, x_j)`. Restricting one draw to
//! labels `≤ n` yields the whole growing family of graphs at once.

mod experiments;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::ParamStore;
use crate::rng::{self, Rng};

pub use experiments::{
    global_param_experiment, risk_convergence_experiment, stability_experiment, ExperimentRecord, GlobalParamConfig,
    GlobalParamRow, LabelKernel, RiskConvergenceConfig, RiskRow, StabilityConfig, StabilityRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Family {
    /// `W(x, y) = exp(-x - y)`.
    Exponential,
    /// `W ≡ c`.
    Constant { c: f64 },
    Zero,
}

/// A graphon family truncated to features in `[0, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphonSpec {
    pub family: Family,
    pub x_max: f64,
}

impl GraphonSpec {
    /// `exp(-x - y)` truncated where the marginal falls to `1e-8`.
    pub fn exponential() -> GraphonSpec {
        GraphonSpec {
            family: Family::Exponential,
            x_max: 8.0 * std::f64::consts::LN_10,
        }
    }

    /// Constant `c` on the unit square.
    pub fn constant(c: f64) -> GraphonSpec {
        GraphonSpec {
            family: Family::Constant { c },
            x_max: 1.0,
        }
    }

    pub fn zero() -> GraphonSpec {
        GraphonSpec {
            family: Family::Zero,
            x_max: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return Err(Error::config(format!("graphon x_max must be positive, got {}", self.x_max)));
        }
        if let Family::Constant { c } = self.family {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::config(format!("constant graphon value must lie in [0, 1], got {c}")));
            }
        }
        Ok(())
    }

    pub fn w(&self, x: f64, y: f64) -> f64 {
        if x > self.x_max || y > self.x_max {
            return 0.0;
        }
        match self.family {
            Family::Exponential => (-x - y).exp(),
            Family::Constant { c } => c,
            Family::Zero => 0.0,
        }
    }

    /// `∫₀^x_max W(x, y) dy`.
    pub fn marginal(&self, x: f64) -> f64 {
        if x > self.x_max {
            return 0.0;
        }
        match self.family {
            Family::Exponential => (-x).exp() * -(-self.x_max).exp_m1(),
            Family::Constant { c } => c * self.x_max,
            Family::Zero => 0.0,
        }
    }

    /// Edge rate `½∫∫W` of the truncated graphon; the expected edge count at
    /// size `n` is `n²` times this.
    pub fn edge_rate(&self) -> f64 {
        match self.family {
            Family::Exponential => 0.5 * (-self.x_max).exp_m1().powi(2),
            Family::Constant { c } => 0.5 * c * self.x_max * self.x_max,
            Family::Zero => 0.0,
        }
    }
}

/// Every candidate point up to size `n` with every realized edge. Point
/// indices are stable identities: the same index is the same vertex in every
/// restriction.
#[derive(Debug, Clone)]
pub struct LatentProcess {
    pub spec: GraphonSpec,
    pub size: f64,
    /// Label `ν` of each point, uniform on `[0, size]`.
    pub labels: Vec<f64>,
    /// Latent feature `x` of each point, uniform on `[0, x_max]`.
    pub features: Vec<f64>,
    /// Edges between point indices, `i < j`.
    pub edges: Vec<(u32, u32)>,
}

/// The graph of a graphex process at one size, isolated points removed.
#[derive(Debug, Clone)]
pub struct LatentGraph {
    pub graph: Graph,
    /// Latent feature of each vertex.
    pub latents: Vec<f64>,
    /// Index of each vertex's point in the generating [`LatentProcess`].
    pub points: Vec<u64>,
    pub size: f64,
}

/// Refuse processes with more expected candidate points than this.
pub const DEFAULT_POINT_BUDGET: f64 = 40_000.0;

impl LatentProcess {
    pub fn sample(spec: &GraphonSpec, n: f64, budget: f64, rng: &mut Rng) -> Result<LatentProcess> {
        spec.validate()?;
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::config(format!("graphex size must be positive, got {n}")));
        }
        let rate = n * spec.x_max;
        if rate > budget {
            return Err(Error::TooLarge(format!(
                "{rate:.0} expected candidate points exceeds the budget of {budget:.0}"
            )));
        }
        let count = Poisson::new(rate).map_err(|e| Error::config(e.to_string()))?.sample(rng) as usize;
        let labels: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..n)).collect();
        let features: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..spec.x_max)).collect();
        let mut edges = Vec::new();
        if spec.family != Family::Zero {
            for i in 0..count {
                for j in i + 1..count {
                    if rng.random::<f64>() < spec.w(features[i], features[j]) {
                        edges.push((i as u32, j as u32));
                    }
                }
            }
        }
        Ok(LatentProcess {
            spec: *spec,
            size: n,
            labels,
            features,
            edges,
        })
    }

    /// The graph induced by points with label `≤ n`, minus isolated points.
    /// Vertices are ordered by point index.
    pub fn restrict(&self, n: f64) -> LatentGraph {
        let inside = |i: u32| self.labels[i as usize] <= n;
        let kept: Vec<(u32, u32)> = self.edges.iter().copied().filter(|&(i, j)| inside(i) && inside(j)).collect();
        let mut active = vec![false; self.labels.len()];
        for &(i, j) in &kept {
            active[i as usize] = true;
            active[j as usize] = true;
        }
        let mut dense = vec![usize::MAX; self.labels.len()];
        let mut points = Vec::new();
        for (i, &a) in active.iter().enumerate() {
            if a {
                dense[i] = points.len();
                points.push(i as u64);
            }
        }
        let graph = Graph::from_edges(points.len(), kept.iter().map(|&(i, j)| (dense[i as usize], dense[j as usize])));
        LatentGraph {
            graph,
            latents: points.iter().map(|&p| self.features[p as usize]).collect(),
            points,
            size: n,
        }
    }
}

/// One graph of the graphex process at size `n`.
pub fn sample_graphex(spec: &GraphonSpec, n: f64, rng: &mut Rng) -> Result<LatentGraph> {
    Ok(LatentProcess::sample(spec, n, DEFAULT_POINT_BUDGET, rng)?.restrict(n))
}

/// Embedding parameters drawn as marks of the latent features: component
/// `k` of vertex `v` is `x_v^(k+1) / scale` plus Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkingKernel {
    pub dim: usize,
    pub scale: f64,
    pub noise: f64,
}

impl Default for MarkingKernel {
    fn default() -> Self {
        MarkingKernel {
            dim: 2,
            scale: 20.0,
            noise: 0.1,
        }
    }
}

impl MarkingKernel {
    pub fn mean(&self, x: f64) -> Vec<f64> {
        (0..self.dim).map(|k| x.powi(k as i32 + 1) / self.scale).collect()
    }
}

const MARK_DOMAIN: u64 = 0x6d61_726b_6572_7321;

/// Marked embeddings for `lg`, keyed by point index so a vertex receives the
/// same mark in every restriction of its process.
pub fn mark_embeddings(lg: &LatentGraph, kernel: &MarkingKernel, seed: u64) -> Result<ParamStore> {
    if kernel.dim == 0 || !(kernel.scale > 0.0) || !(kernel.noise >= 0.0) {
        return Err(Error::config("marking kernel needs dim >= 1, scale > 0, noise >= 0"));
    }
    let mut params = ParamStore::with_keys(lg.points.clone(), kernel.dim, 0, seed);
    for (v, (&x, &point)) in lg.latents.iter().zip(&lg.points).enumerate() {
        let mut r = rng::keyed(seed ^ MARK_DOMAIN, point);
        let mean = kernel.mean(x);
        for (slot, m) in params.embedding_mut(v).iter_mut().zip(mean) {
            let z: f64 = StandardNormal.sample(&mut r);
            *slot = m + kernel.noise * z;
        }
    }
    Ok(params)
}
