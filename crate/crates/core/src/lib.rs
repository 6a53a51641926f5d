//! Relational empirical risk minimization.
//!
//! A model is a graph subsampling algorithm ([`sampler`]), a predictor and
//! loss ([`model`]), and the risk they define, minimized by SGD
//! ([`trainer`]). [`eval`] holds the node-classification protocols and
//! [`graphex`] the random-graph simulator used to probe large-graph behavior.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod graphex;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod trainer;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use graph::{CategoryMap, Graph, LabelTable, Pair, Vertex};
pub use model::{LossConfig, LossMode, ParamStore, SparseGradient};
pub use sampler::{SampledSubgraph, Sampler, SamplerConfig};
pub use trainer::{train, LearningRate, TrainConfig, TrainOutcome};
