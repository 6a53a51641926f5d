//! Predictors and losses: edge cross-entropy on sampled pairs, the combined
//! label + edge objective for node classification, and category-sum
//! embeddings.

mod io;
mod loss;
mod params;

pub use io::{read_checkpoint, write_category_embeddings, write_checkpoint, write_embeddings};
pub use loss::{
    category_vertex_embedding, combined_loss, edge_loss, label_loss, sigmoid, LossConfig, LossMode, Objective,
};
pub use params::{FlatLayout, ParamStore, ParamView};

use crate::graph::Vertex;

/// Gradient restricted to the parameters one sample touches.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGradient {
    pub dim: usize,
    pub label_dim: usize,
    pub vertices: Vec<Vertex>,
    /// Row `i` belongs to `vertices[i]`.
    pub vertex_grads: Vec<f64>,
    /// `d x L`, same layout as [`ParamStore::weights`].
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub categories: Vec<usize>,
    pub category_grads: Vec<f64>,
}

impl SparseGradient {
    pub fn zeros(dim: usize, label_dim: usize) -> SparseGradient {
        SparseGradient {
            dim,
            label_dim,
            vertices: Vec::new(),
            vertex_grads: Vec::new(),
            weights: vec![0.0; dim * label_dim],
            bias: vec![0.0; label_dim],
            categories: Vec::new(),
            category_grads: Vec::new(),
        }
    }

    pub fn vertex_row(&self, i: usize) -> &[f64] {
        &self.vertex_grads[i * self.dim..(i + 1) * self.dim]
    }

    pub fn category_row(&self, i: usize) -> &[f64] {
        &self.category_grads[i * self.dim..(i + 1) * self.dim]
    }

    /// Gradient for vertex `v`, if the sample touched it.
    pub fn vertex(&self, v: Vertex) -> Option<&[f64]> {
        self.vertices.iter().position(|&u| u == v).map(|i| self.vertex_row(i))
    }

    /// Drop embedding and category entries, keeping only the label predictor.
    pub fn freeze_embeddings(&mut self) {
        self.vertices.clear();
        self.vertex_grads.clear();
        self.categories.clear();
        self.category_grads.clear();
    }

    pub fn is_finite(&self) -> bool {
        self.vertex_grads
            .iter()
            .chain(&self.weights)
            .chain(&self.bias)
            .chain(&self.category_grads)
            .all(|x| x.is_finite())
    }

    pub fn squared_norm(&self) -> f64 {
        self.vertex_grads
            .iter()
            .chain(&self.weights)
            .chain(&self.bias)
            .chain(&self.category_grads)
            .map(|x| x * x)
            .sum()
    }

    /// `out += scale * self`, with `out` in the flat order of `layout`.
    pub fn add_to_flat(&self, layout: &FlatLayout, scale: f64, out: &mut [f64]) {
        let d = self.dim;
        for (i, &v) in self.vertices.iter().enumerate() {
            for k in 0..d {
                out[v * d + k] += scale * self.vertex_grads[i * d + k];
            }
        }
        let w0 = layout.weights_offset();
        for (k, g) in self.weights.iter().enumerate() {
            out[w0 + k] += scale * g;
        }
        let b0 = layout.bias_offset();
        for (j, g) in self.bias.iter().enumerate() {
            out[b0 + j] += scale * g;
        }
        let c0 = layout.categories_offset();
        for (i, &c) in self.categories.iter().enumerate() {
            for k in 0..d {
                out[c0 + c * d + k] += scale * self.category_grads[i * d + k];
            }
        }
    }

    pub fn to_flat(&self, layout: &FlatLayout) -> Vec<f64> {
        let mut out = vec![0.0; layout.len()];
        self.add_to_flat(layout, 1.0, &mut out);
        out
    }
}
