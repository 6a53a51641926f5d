use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::params::ParamView;
use super::SparseGradient;
use crate::error::{Error, Result};
use crate::graph::{CategoryMap, LabelTable, Vertex};
use crate::sampler::SampledSubgraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Cross-entropy on sampled edges and non-edges.
    EdgeOnly,
    /// `q * label loss + (1 - q) * edge loss`.
    NodeClassification,
    /// Edge loss where each vertex embedding is the sum of its category embeddings.
    CategoryEmbedding,
}

impl LossMode {
    pub fn name(self) -> &'static str {
        match self {
            LossMode::EdgeOnly => "edge_only",
            LossMode::NodeClassification => "node_classification",
            LossMode::CategoryEmbedding => "category_embedding",
        }
    }
}

impl std::str::FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge_only" => Ok(LossMode::EdgeOnly),
            "node_classification" => Ok(LossMode::NodeClassification),
            "category_embedding" => Ok(LossMode::CategoryEmbedding),
            other => Err(Error::config(format!(
                "unknown loss mode {other:?} (expected edge_only, node_classification, category_embedding)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the label term in node-classification mode.
    pub q: f64,
    /// Predicted probabilities are clipped to `[clip, 1 - clip]`.
    pub clip: f64,
    pub mode: LossMode,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            q: 0.0,
            clip: 1e-7,
            mode: LossMode::EdgeOnly,
        }
    }
}

impl LossConfig {
    pub fn edge_only() -> Self {
        LossConfig::default()
    }

    pub fn node_classification(q: f64) -> Self {
        LossConfig {
            q,
            mode: LossMode::NodeClassification,
            ..Default::default()
        }
    }

    pub fn category_embedding() -> Self {
        LossConfig {
            mode: LossMode::CategoryEmbedding,
            ..Default::default()
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.q) {
            v.push(format!("loss.q must lie in [0, 1], got {}", self.q));
        }
        if !(self.clip > 0.0 && self.clip < 0.5) {
            v.push(format!("loss.clip must lie in (0, 0.5), got {}", self.clip));
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

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-log p` and `d/dx` for a clipped probability `p = clamp(sigmoid(x))`
/// of an observed positive outcome; clipping flattens the derivative.
fn positive_term(x: f64, clip: f64) -> (f64, f64) {
    let s = sigmoid(x);
    if s < clip {
        (-clip.ln(), 0.0)
    } else if s > 1.0 - clip {
        (-(1.0 - clip).ln(), 0.0)
    } else {
        (-s.ln(), -(1.0 - s))
    }
}

/// As [`positive_term`] for an observed negative outcome, `-log(1 - p)`.
fn negative_term(x: f64, clip: f64) -> (f64, f64) {
    let s = sigmoid(x);
    if s < clip {
        (-(1.0 - clip).ln(), 0.0)
    } else if s > 1.0 - clip {
        (-clip.ln(), 0.0)
    } else {
        (-(1.0 - s).ln(), s)
    }
}

/// Loss of the configured model, bound to the side information it needs.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub config: LossConfig,
    pub labels: Option<&'a LabelTable>,
    pub categories: Option<&'a CategoryMap>,
}

/// Embeddings of the sample's vertices, gathered into a dense local block.
struct Block {
    dim: usize,
    index: HashMap<Vertex, usize>,
    rows: Vec<f64>,
}

impl Block {
    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    fn local(&self, v: Vertex) -> usize {
        self.index[&v]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl<'a> Objective<'a> {
    pub fn new(config: LossConfig) -> Self {
        Objective {
            config,
            labels: None,
            categories: None,
        }
    }

    pub fn with_labels(mut self, labels: Option<&'a LabelTable>) -> Self {
        self.labels = labels;
        self
    }

    pub fn with_categories(mut self, categories: Option<&'a CategoryMap>) -> Self {
        self.categories = categories;
        self
    }

    fn check(&self, params: &impl ParamView) -> Result<()> {
        self.config.validate()?;
        match self.config.mode {
            LossMode::NodeClassification => {
                let labels = match (self.labels, self.config.q > 0.0) {
                    (Some(l), _) => l,
                    (None, false) => return Ok(()),
                    (None, true) => return Err(Error::config("node_classification loss needs a label table")),
                };
                if labels.label_dim() != params.label_dim() {
                    return Err(Error::config(format!(
                        "label table has {} labels, parameters have {}",
                        labels.label_dim(),
                        params.label_dim()
                    )));
                }
            }
            LossMode::CategoryEmbedding => {
                self.categories
                    .ok_or_else(|| Error::config("category_embedding loss needs a category map"))?;
                if params.category_count().is_none() {
                    return Err(Error::config("parameters have no category table"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn gather(&self, sample: &SampledSubgraph, params: &impl ParamView) -> Result<Block> {
        let dim = params.dim();
        let mut index = HashMap::with_capacity(sample.vertices.len());
        let mut rows = vec![0.0; sample.vertices.len() * dim];
        let mut scratch = vec![0.0; dim];
        for (i, &v) in sample.vertices.iter().enumerate() {
            index.insert(v, i);
            let row = &mut rows[i * dim..(i + 1) * dim];
            if self.config.mode == LossMode::CategoryEmbedding {
                for &c in self.categories.unwrap().categories(v) {
                    params.read_category(c, &mut scratch);
                    axpy(1.0, &scratch, row);
                }
            } else {
                params.read_vertex(v, row);
            }
        }
        if !rows.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("embedding"));
        }
        Ok(Block { dim, index, rows })
    }

    fn edge_weight(&self) -> f64 {
        match self.config.mode {
            LossMode::NodeClassification => 1.0 - self.config.q,
            _ => 1.0,
        }
    }

    fn label_weight(&self) -> f64 {
        match self.config.mode {
            LossMode::NodeClassification => self.config.q,
            _ => 0.0,
        }
    }

    /// Edge term without its mixing weight.
    pub fn edge_loss(&self, sample: &SampledSubgraph, params: &impl ParamView) -> Result<f64> {
        self.check(params)?;
        let block = self.gather(sample, params)?;
        Ok(self.edge_pass(sample, &block, None))
    }

    /// Label term without its mixing weight.
    pub fn label_loss(&self, sample: &SampledSubgraph, params: &impl ParamView) -> Result<f64> {
        self.check(params)?;
        let labels = self.labels.ok_or_else(|| Error::config("label loss needs a label table"))?;
        let block = self.gather(sample, params)?;
        Ok(self.label_pass(sample, labels, &block, params, None))
    }

    pub fn loss(&self, sample: &SampledSubgraph, params: &impl ParamView) -> Result<f64> {
        self.check(params)?;
        let block = self.gather(sample, params)?;
        let mut total = 0.0;
        let we = self.edge_weight();
        if we > 0.0 {
            total += we * self.edge_pass(sample, &block, None);
        }
        let wl = self.label_weight();
        if wl > 0.0 {
            total += wl * self.label_pass(sample, self.labels.unwrap(), &block, params, None);
        }
        Ok(total)
    }

    /// Loss and its exact gradient with respect to every parameter the sample touches.
    pub fn loss_and_gradient(
        &self,
        sample: &SampledSubgraph,
        params: &impl ParamView,
    ) -> Result<(f64, SparseGradient)> {
        self.check(params)?;
        let block = self.gather(sample, params)?;
        let dim = params.dim();
        let label_dim = params.label_dim();
        let mut local = vec![0.0; block.rows.len()];
        let mut grad = SparseGradient::zeros(dim, label_dim);

        let mut total = 0.0;
        let we = self.edge_weight();
        if we > 0.0 {
            let mut g = vec![0.0; local.len()];
            total += we * self.edge_pass(sample, &block, Some(&mut g));
            axpy(we, &g, &mut local);
        }
        let wl = self.label_weight();
        if wl > 0.0 {
            let mut lg = LabelGrad {
                local: vec![0.0; local.len()],
                weights: vec![0.0; dim * label_dim],
                bias: vec![0.0; label_dim],
            };
            total += wl * self.label_pass(sample, self.labels.unwrap(), &block, params, Some(&mut lg));
            axpy(wl, &lg.local, &mut local);
            axpy(wl, &lg.weights, &mut grad.weights);
            axpy(wl, &lg.bias, &mut grad.bias);
        }

        if self.config.mode == LossMode::CategoryEmbedding {
            let cats = self.categories.unwrap();
            let mut slot: HashMap<usize, usize> = HashMap::new();
            for (i, &v) in sample.vertices.iter().enumerate() {
                for &c in cats.categories(v) {
                    let s = *slot.entry(c).or_insert_with(|| {
                        grad.categories.push(c);
                        grad.category_grads.extend(std::iter::repeat_n(0.0, dim));
                        grad.categories.len() - 1
                    });
                    axpy(1.0, &local[i * dim..(i + 1) * dim], &mut grad.category_grads[s * dim..(s + 1) * dim]);
                }
            }
        } else {
            grad.vertices = sample.vertices.clone();
            grad.vertex_grads = local;
        }
        if !total.is_finite() || !grad.is_finite() {
            return Err(Error::NonFinite("loss or gradient"));
        }
        Ok((total, grad))
    }

    pub fn gradient(&self, sample: &SampledSubgraph, params: &impl ParamView) -> Result<SparseGradient> {
        self.loss_and_gradient(sample, params).map(|(_, g)| g)
    }

    fn edge_pass(&self, sample: &SampledSubgraph, block: &Block, mut grad: Option<&mut Vec<f64>>) -> f64 {
        let clip = self.config.clip;
        let d = block.dim;
        let mut total = 0.0;
        let pairs = sample
            .positive_pairs
            .iter()
            .map(|p| (p, true))
            .chain(sample.negative_pairs.iter().map(|p| (p, false)));
        for (&(a, b), positive) in pairs {
            let (ia, ib) = (block.local(a), block.local(b));
            let x = dot(block.row(ia), block.row(ib));
            let (value, slope) = if positive {
                positive_term(x, clip)
            } else {
                negative_term(x, clip)
            };
            total += value;
            if let Some(g) = grad.as_deref_mut() {
                if slope != 0.0 {
                    for k in 0..d {
                        g[ia * d + k] += slope * block.rows[ib * d + k];
                        g[ib * d + k] += slope * block.rows[ia * d + k];
                    }
                }
            }
        }
        total
    }

    fn label_pass(
        &self,
        sample: &SampledSubgraph,
        labels: &LabelTable,
        block: &Block,
        params: &impl ParamView,
        mut grad: Option<&mut LabelGrad>,
    ) -> f64 {
        let clip = self.config.clip;
        let d = block.dim;
        let l_dim = labels.label_dim();
        let mut total = 0.0;
        for &v in sample.positive_vertices() {
            if !labels.is_observed(v) {
                continue;
            }
            let i = block.local(v);
            let lam = block.row(i);
            for j in 0..l_dim {
                let z = params.bias(j) + (0..d).map(|k| lam[k] * params.weight(k, j)).sum::<f64>();
                let (value, slope) = if labels.get(v, j) {
                    positive_term(z, clip)
                } else {
                    negative_term(z, clip)
                };
                total += value;
                if let Some(g) = grad.as_deref_mut() {
                    if slope != 0.0 {
                        g.bias[j] += slope;
                        for k in 0..d {
                            g.weights[k * l_dim + j] += slope * lam[k];
                            g.local[i * d + k] += slope * params.weight(k, j);
                        }
                    }
                }
            }
        }
        total
    }
}

struct LabelGrad {
    local: Vec<f64>,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Edge cross-entropy with vertex embeddings, multiset pairs counted with multiplicity.
pub fn edge_loss(sample: &SampledSubgraph, params: &impl ParamView, config: &LossConfig) -> Result<f64> {
    let cfg = LossConfig {
        mode: LossMode::EdgeOnly,
        ..*config
    };
    Objective::new(cfg).edge_loss(sample, params)
}

/// Logistic label loss over observed vertices of the positive sample.
pub fn label_loss(
    sample: &SampledSubgraph,
    labels: &LabelTable,
    params: &impl ParamView,
    config: &LossConfig,
) -> Result<f64> {
    let cfg = LossConfig {
        mode: LossMode::NodeClassification,
        ..*config
    };
    Objective::new(cfg).with_labels(Some(labels)).label_loss(sample, params)
}

/// `q * label_loss + (1 - q) * edge_loss`.
pub fn combined_loss(
    sample: &SampledSubgraph,
    labels: &LabelTable,
    params: &impl ParamView,
    config: &LossConfig,
) -> Result<f64> {
    let cfg = LossConfig {
        mode: LossMode::NodeClassification,
        ..*config
    };
    Objective::new(cfg).with_labels(Some(labels)).loss(sample, params)
}

/// Vertex embedding as the sum of its categories' embeddings.
pub fn category_vertex_embedding(v: Vertex, categories: &CategoryMap, params: &impl ParamView) -> Vec<f64> {
    let d = params.dim();
    let mut out = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    for &c in categories.categories(v) {
        params.read_category(c, &mut scratch);
        axpy(1.0, &scratch, &mut out);
    }
    out
}
