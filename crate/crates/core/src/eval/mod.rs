//! Node-classification protocols: censor the labels of a test set, train,
//! and score predictions on the test vertices by macro-F1.

mod logistic;
mod metrics;
mod split;
pub mod synthetic;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::model::{LossConfig, LossMode, ParamStore};
use crate::rng;
use crate::sampler::SamplerConfig;
use crate::trainer::{init_params, train_from, TrainConfig};

pub use logistic::{fit_logistic, logistic_objective, LogisticFit, LogisticOptions};
pub use metrics::{label_logits, macro_f1, predict, PredictMode};
pub use split::{expected_survivors, make_split, retention_for, Split, TestScheme};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub test_fraction: f64,
    pub predict: PredictMode,
    pub logistic: LogisticOptions,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            test_fraction: 0.5,
            predict: PredictMode::Threshold,
            logistic: LogisticOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub macro_f1: f64,
    pub params: ParamStore,
}

fn labels_of(dataset: &Dataset) -> Result<&crate::graph::LabelTable> {
    dataset
        .labels
        .as_ref()
        .ok_or_else(|| Error::config("evaluation needs vertex labels"))
}

fn score(dataset: &Dataset, params: &ParamStore, split: &Split, options: &EvalOptions) -> Result<f64> {
    let truth = labels_of(dataset)?;
    let predicted = predict(params, &split.test, options.predict, truth);
    Ok(macro_f1(&predicted, truth, &split.test))
}

/// Fit the global logistic layer on the observed training vertices with the
/// embeddings held fixed.
pub fn fit_global(dataset: &Dataset, params: &mut ParamStore, train: &[Vertex], options: &LogisticOptions) -> Result<()> {
    let labels = labels_of(dataset)?;
    let (d, l) = (params.dim, labels.label_dim());
    let rows: Vec<Vertex> = train.iter().copied().filter(|&v| labels.is_observed(v)).collect();
    let mut features = Vec::with_capacity(rows.len() * d);
    let mut targets = Vec::with_capacity(rows.len() * l);
    for &v in &rows {
        features.extend_from_slice(params.embedding(v));
        targets.extend_from_slice(labels.row(v));
    }
    let fit = fit_logistic(&features, d, &targets, l, options);
    params.weights_mut().copy_from_slice(&fit.weights);
    params.bias_mut().copy_from_slice(&fit.bias);
    Ok(())
}

/// Embeddings from the edge loss alone, then a logistic layer fit on the
/// training vertices; scored on the test vertices.
pub fn two_stage_eval(dataset: &Dataset, split: &Split, config: &TrainConfig, options: &EvalOptions) -> Result<EvalOutcome> {
    labels_of(dataset)?;
    let stage1 = TrainConfig {
        loss: LossConfig {
            q: 0.0,
            mode: LossMode::EdgeOnly,
            ..config.loss
        },
        ..config.clone()
    };
    let mut params = train_from(dataset, init_params(dataset, &stage1), &stage1)?.params;
    fit_global(dataset, &mut params, &split.train, &options.logistic)?;
    let macro_f1 = score(dataset, &params, split, options)?;
    Ok(EvalOutcome { macro_f1, params })
}

/// Embeddings and logistic layer trained jointly on the mixed loss, with the
/// test labels censored.
pub fn simultaneous_eval(dataset: &Dataset, split: &Split, config: &TrainConfig, options: &EvalOptions) -> Result<EvalOutcome> {
    let labels = labels_of(dataset)?;
    if config.loss.mode != LossMode::NodeClassification {
        return Err(Error::config("simultaneous training needs loss.mode = node_classification"));
    }
    let censored = Dataset {
        labels: Some(labels.censored(split.test.iter().copied())),
        ..dataset.clone()
    };
    let params = train_from(&censored, init_params(&censored, config), config)?.params;
    let macro_f1 = score(dataset, &params, split, options)?;
    Ok(EvalOutcome { macro_f1, params })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Training {
    TwoStage,
    Simultaneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub training: Training,
    pub schemes: Vec<TestScheme>,
    /// Independent split/training seeds averaged per row.
    pub seeds: usize,
    pub options: EvalOptions,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            training: Training::TwoStage,
            schemes: vec![TestScheme::UniformVertex],
            seeds: 5,
            options: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sampler: String,
    pub dataset: String,
    pub test_scheme: TestScheme,
    /// Mean macro-F1 over seeds.
    pub score: f64,
    pub scores: Vec<f64>,
}

/// `algorithm+negative_sampling`, e.g. `p_sampling+unigram`.
pub fn sampler_label(config: &SamplerConfig) -> String {
    format!("{}+{}", config.algorithm, config.negative)
}

/// Seed of the `i`-th replicate of a protocol run.
pub fn replicate_seed(base: u64, i: usize) -> u64 {
    rng::derive(base, &[i as u64])
}

/// One row per test scheme, each the mean over `protocol.seeds` replicates.
/// Replicate `i` uses [`replicate_seed`]`(config.seed, i)` for both the split
/// and training, so rows are reproducible from the config alone.
pub fn run_protocol(dataset: &Dataset, name: &str, config: &TrainConfig, protocol: &Protocol) -> Result<Vec<ResultRow>> {
    if protocol.seeds == 0 {
        return Err(Error::config("eval.seeds must be >= 1"));
    }
    let mut rows = Vec::new();
    for &scheme in &protocol.schemes {
        let scores = (0..protocol.seeds)
            .into_par_iter()
            .map(|i| {
                let seed = replicate_seed(config.seed, i);
                let split = make_split(
                    &dataset.graph,
                    protocol.options.test_fraction,
                    scheme,
                    &mut rng::stream(seed, rng::SPLIT_STREAM),
                )?;
                let cfg = TrainConfig {
                    seed,
                    ..config.clone()
                };
                let out = match protocol.training {
                    Training::TwoStage => two_stage_eval(dataset, &split, &cfg, &protocol.options)?,
                    Training::Simultaneous => simultaneous_eval(dataset, &split, &cfg, &protocol.options)?,
                };
                Ok(out.macro_f1)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(ResultRow {
            sampler: sampler_label(&config.sampler),
            dataset: name.to_string(),
            test_scheme: scheme,
            score: scores.iter().sum::<f64>() / scores.len() as f64,
            scores,
        });
    }
    Ok(rows)
}

/// Comma-separated results table preceded by a `# seed=` header line.
pub fn write_results(rows: &[ResultRow], seed: u64, mut sink: impl Write) -> Result<()> {
    writeln!(sink, "# seed={seed}")?;
    writeln!(sink, "sampler,dataset,test_scheme,score")?;
    for r in rows {
        writeln!(sink, "{},{},{},{:.6}", r.sampler, r.dataset, r.test_scheme, r.score)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
