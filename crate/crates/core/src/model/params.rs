use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::rng;

/// Read access to model parameters, shared by the owned [`ParamStore`] and
/// the lock-free training buffer.
pub trait ParamView {
    fn dim(&self) -> usize;
    fn label_dim(&self) -> usize;
    fn vertex_count(&self) -> usize;
    fn category_count(&self) -> Option<usize>;
    fn read_vertex(&self, v: Vertex, out: &mut [f64]);
    fn read_category(&self, c: usize, out: &mut [f64]);
    /// Logistic weight from embedding coordinate `k` to label `j`.
    fn weight(&self, k: usize, j: usize) -> f64;
    fn bias(&self, j: usize) -> f64;
}

/// Model parameters: per-vertex embeddings, logistic label weights and bias,
/// and optional per-category embeddings.
///
/// Embedding coordinates are initialized uniformly on `[-0.5/d, 0.5/d]` from
/// a generator keyed by `(seed, key(v))`, so a vertex's starting value does
/// not depend on which vertices were visited first. All tables are
/// materialized up front; the values equal what on-touch initialization
/// would produce. Weights and bias start at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    pub(crate) dim: usize,
    pub(crate) label_dim: usize,
    pub(crate) seed: u64,
    pub(crate) keys: Vec<u64>,
    pub(crate) embeddings: Vec<f64>,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
    pub(crate) categories: Option<Vec<f64>>,
}

const CATEGORY_KEY_BASE: u64 = 1 << 62;

fn init_row(seed: u64, key: u64, row: &mut [f64]) {
    let half = 0.5 / row.len() as f64;
    let mut r = rng::keyed(seed, key);
    for x in row {
        *x = r.random_range(-half..half);
    }
}

impl ParamStore {
    pub fn new(vertex_count: usize, dim: usize, label_dim: usize, seed: u64) -> ParamStore {
        ParamStore::with_keys((0..vertex_count as u64).collect(), dim, label_dim, seed)
    }

    /// Initialize vertex `v` from key `keys[v]` instead of its dense index;
    /// graphs sharing keys then share initial embeddings.
    pub fn with_keys(keys: Vec<u64>, dim: usize, label_dim: usize, seed: u64) -> ParamStore {
        assert!(dim > 0, "embedding dimension must be positive");
        let mut embeddings = vec![0.0; keys.len() * dim];
        for (row, &key) in embeddings.chunks_mut(dim).zip(&keys) {
            init_row(seed, key, row);
        }
        ParamStore {
            dim,
            label_dim,
            seed,
            keys,
            embeddings,
            weights: vec![0.0; dim * label_dim],
            bias: vec![0.0; label_dim],
            categories: None,
        }
    }

    /// Add a category embedding table of `count` rows.
    pub fn with_categories(mut self, count: usize) -> ParamStore {
        let mut table = vec![0.0; count * self.dim];
        for (c, row) in table.chunks_mut(self.dim).enumerate() {
            init_row(self.seed, CATEGORY_KEY_BASE + c as u64, row);
        }
        self.categories = Some(table);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn embedding(&self, v: Vertex) -> &[f64] {
        &self.embeddings[v * self.dim..(v + 1) * self.dim]
    }

    pub fn embedding_mut(&mut self, v: Vertex) -> &mut [f64] {
        &mut self.embeddings[v * self.dim..(v + 1) * self.dim]
    }

    pub fn embeddings(&self) -> &[f64] {
        &self.embeddings
    }

    pub fn category(&self, c: usize) -> &[f64] {
        let t = self.categories.as_ref().expect("no category table");
        &t[c * self.dim..(c + 1) * self.dim]
    }

    pub fn category_mut(&mut self, c: usize) -> &mut [f64] {
        let d = self.dim;
        let t = self.categories.as_mut().expect("no category table");
        &mut t[c * d..(c + 1) * d]
    }

    /// `d x L` weights, row-major by embedding coordinate.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// Reset the global label predictor to zero.
    pub fn reset_global(&mut self) {
        self.weights.iter_mut().for_each(|w| *w = 0.0);
        self.bias.iter_mut().for_each(|w| *w = 0.0);
    }

    pub fn layout(&self) -> FlatLayout {
        FlatLayout {
            embeddings: self.embeddings.len(),
            weights: self.weights.len(),
            bias: self.bias.len(),
            categories: self.categories.as_ref().map_or(0, Vec::len),
        }
    }

    /// Coordinate `i` of the flattened parameter vector, see [`FlatLayout`].
    pub fn flat(&self, i: usize) -> f64 {
        *self.flat_slot(i)
    }

    pub fn set_flat(&mut self, i: usize, value: f64) {
        *self.flat_slot_mut(i) = value;
    }

    fn flat_slot(&self, mut i: usize) -> &f64 {
        for part in [&self.embeddings, &self.weights, &self.bias] {
            if i < part.len() {
                return &part[i];
            }
            i -= part.len();
        }
        &self.categories.as_ref().expect("index out of range")[i]
    }

    fn flat_slot_mut(&mut self, mut i: usize) -> &mut f64 {
        for part in [&mut self.embeddings, &mut self.weights, &mut self.bias] {
            if i < part.len() {
                return &mut part[i];
            }
            i -= part.len();
        }
        &mut self.categories.as_mut().expect("index out of range")[i]
    }

    pub fn check_finite(&self) -> Result<()> {
        if !self.embeddings.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("vertex embeddings"));
        }
        if !self.weights.iter().chain(&self.bias).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("global parameters"));
        }
        if let Some(c) = &self.categories {
            if !c.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("category embeddings"));
            }
        }
        Ok(())
    }
}

impl ParamView for ParamStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn label_dim(&self) -> usize {
        self.label_dim
    }

    fn vertex_count(&self) -> usize {
        self.keys.len()
    }

    fn category_count(&self) -> Option<usize> {
        self.categories.as_ref().map(|c| c.len() / self.dim)
    }

    fn read_vertex(&self, v: Vertex, out: &mut [f64]) {
        out.copy_from_slice(self.embedding(v));
    }

    fn read_category(&self, c: usize, out: &mut [f64]) {
        out.copy_from_slice(self.category(c));
    }

    fn weight(&self, k: usize, j: usize) -> f64 {
        self.weights[k * self.label_dim + j]
    }

    fn bias(&self, j: usize) -> f64 {
        self.bias[j]
    }
}

/// Flattened parameter order: embeddings, weights, bias, categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlatLayout {
    pub embeddings: usize,
    pub weights: usize,
    pub bias: usize,
    pub categories: usize,
}

impl FlatLayout {
    pub fn len(&self) -> usize {
        self.embeddings + self.weights + self.bias + self.categories
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights_offset(&self) -> usize {
        self.embeddings
    }

    pub fn bias_offset(&self) -> usize {
        self.embeddings + self.weights
    }

    pub fn categories_offset(&self) -> usize {
        self.embeddings + self.weights + self.bias
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_keyed_and_bounded() {
        let a = ParamStore::new(5, 4, 2, 9);
        let b = ParamStore::with_keys(vec![3, 4], 4, 2, 9);
        assert_eq!(a.embedding(3), b.embedding(0));
        assert_eq!(a.embedding(4), b.embedding(1));
        assert!(a.embeddings().iter().all(|x| x.abs() <= 0.125));
        assert!(a.weights().iter().chain(a.bias()).all(|&x| x == 0.0));
        assert_ne!(a.embedding(0), a.embedding(1));
    }

    #[test]
    fn flat_indexing_covers_every_table() {
        let mut p = ParamStore::new(2, 3, 2, 0).with_categories(2);
        let layout = p.layout();
        assert_eq!(layout.len(), 6 + 6 + 2 + 6);
        p.set_flat(layout.weights_offset() + 1, 7.0);
        assert_eq!(p.weight(0, 1), 7.0);
        p.set_flat(layout.bias_offset() + 1, 3.0);
        assert_eq!(p.bias()[1], 3.0);
        p.set_flat(layout.categories_offset() + 4, -1.0);
        assert_eq!(p.category(1)[1], -1.0);
        p.set_flat(2, 0.5);
        assert_eq!(p.embedding(0)[2], 0.5);
    }

    #[test]
    fn non_finite_detected() {
        let mut p = ParamStore::new(2, 2, 1, 0);
        assert!(p.check_finite().is_ok());
        p.embedding_mut(1)[0] = f64::NAN;
        assert!(p.check_finite().is_err());
    }
}
