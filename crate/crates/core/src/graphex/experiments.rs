//! Replicated simulations probing how risks, embeddings and global
//! parameters behave as the graphex size grows.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mark_embeddings, sample_graphex, GraphonSpec, LatentGraph, LatentProcess, MarkingKernel, DEFAULT_POINT_BUDGET};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::{fit_global, LogisticOptions};
use crate::graph::LabelTable;
use crate::model::{LossConfig, ParamStore};
use crate::rng;
use crate::sampler::{Algorithm, Sampler, SamplerConfig};
use crate::trainer::{estimate_risk, train_from, TrainConfig};

/// One line of experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub n: f64,
    /// `None` for statistics aggregated over replicates.
    pub replicate: Option<usize>,
    pub statistic: String,
    pub value: f64,
}

fn record(experiment: &str, n: f64, replicate: Option<usize>, statistic: &str, value: f64) -> ExperimentRecord {
    ExperimentRecord {
        experiment: experiment.to_string(),
        n,
        replicate,
        statistic: statistic.to_string(),
        value,
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn check_sizes(sizes: &[f64], replicates: usize) -> Result<()> {
    if sizes.is_empty() || replicates == 0 {
        return Err(Error::config("experiments need at least one size and one replicate"));
    }
    if sizes.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
        return Err(Error::config("experiment sizes must be positive"));
    }
    Ok(())
}

/// The sampler used on a graph of size `n`: p-sampling retains
/// `sample_size / n` of the vertices so the sampled subgraph has a
/// size-free distribution; other samplers are unchanged.
pub(crate) fn scaled_sampler(sampler: &SamplerConfig, sample_size: f64, n: f64) -> SamplerConfig {
    let mut s = sampler.clone();
    if s.algorithm == Algorithm::PSampling {
        s.retention = (sample_size / n).min(1.0);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskConvergenceConfig {
    pub spec: GraphonSpec,
    pub kernel: MarkingKernel,
    pub sizes: Vec<f64>,
    pub replicates: usize,
    pub sampler: SamplerConfig,
    /// Expected p-sampled subgraph size, in units of graphex size.
    pub sample_size: f64,
    pub loss: LossConfig,
    /// Monte-Carlo draws per risk estimate.
    pub risk_samples: usize,
    pub seed: u64,
}

impl Default for RiskConvergenceConfig {
    fn default() -> Self {
        RiskConvergenceConfig {
            spec: GraphonSpec::exponential(),
            kernel: MarkingKernel::default(),
            sizes: vec![50.0, 100.0, 200.0, 400.0],
            replicates: 20,
            sampler: SamplerConfig::p_sampling(0.1, crate::sampler::NegativeSampling::Induced),
            sample_size: 10.0,
            loss: LossConfig::default(),
            risk_samples: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub n: f64,
    pub mean: f64,
    /// Standard deviation across replicates.
    pub std: f64,
    pub values: Vec<f64>,
}

/// Risk of marked (untrained) embeddings on independent graphs at each size.
pub fn risk_convergence_experiment(cfg: &RiskConvergenceConfig) -> Result<Vec<RiskRow>> {
    check_sizes(&cfg.sizes, cfg.replicates)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.sizes.len())
        .flat_map(|i| (0..cfg.replicates).map(move |r| (i, r)))
        .collect();
    let values = jobs
        .par_iter()
        .map(|&(i, r)| {
            let n = cfg.sizes[i];
            let key = [1, i as u64, r as u64];
            let lg = sample_graphex(&cfg.spec, n, &mut rng::stream(rng::derive(cfg.seed, &key), 0))?;
            let params = mark_embeddings(&lg, &cfg.kernel, rng::derive(cfg.seed, &[2, i as u64, r as u64]))?;
            let sampler_cfg = scaled_sampler(&cfg.sampler, cfg.sample_size, n);
            if lg.graph.edge_count() == 0 && sampler_cfg.algorithm == Algorithm::PSampling {
                return Ok(0.0);
            }
            let ds = Dataset::new(lg.graph);
            let sampler = Sampler::new(&ds.graph, sampler_cfg)?;
            let mut rng = rng::stream(rng::derive(cfg.seed, &[3, i as u64, r as u64]), 0);
            Ok(estimate_risk(&sampler, &ds.objective(cfg.loss), &params, cfg.risk_samples, &mut rng)?.mean)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(cfg
        .sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let v = values[i * cfg.replicates..(i + 1) * cfg.replicates].to_vec();
            let (mean, std) = mean_std(&v);
            RiskRow { n, mean, std, values: v }
        })
        .collect())
}

impl RiskRow {
    pub fn records(&self) -> Vec<ExperimentRecord> {
        let mut out: Vec<ExperimentRecord> = self
            .values
            .iter()
            .enumerate()
            .map(|(r, &v)| record("risk_convergence", self.n, Some(r), "risk", v))
            .collect();
        out.push(record("risk_convergence", self.n, None, "mean", self.mean));
        out.push(record("risk_convergence", self.n, None, "std", self.std));
        out
    }
}

/// Training settings shared by the experiments that fit embeddings.
fn sized_training(train: &TrainConfig, sample_size: f64, steps_per_unit: f64, n: f64, seed: u64) -> TrainConfig {
    TrainConfig {
        sampler: scaled_sampler(&train.sampler, sample_size, n),
        steps: (steps_per_unit * n).ceil() as usize,
        seed,
        ..train.clone()
    }
}

fn fit_embeddings(lg: &LatentGraph, labels: Option<LabelTable>, cfg: &TrainConfig) -> Result<(Dataset, ParamStore)> {
    let mut ds = Dataset::new(lg.graph.clone());
    if let Some(l) = labels {
        ds = ds.with_labels(l);
    }
    let params = ParamStore::with_keys(lg.points.clone(), cfg.embedding_dim, ds.label_dim(), cfg.seed);
    if cfg.steps == 0 {
        return Ok((ds, params));
    }
    let out = train_from(&ds, params, cfg)?;
    Ok((ds, out.params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub spec: GraphonSpec,
    pub sizes: Vec<f64>,
    /// Size increment between the two nested graphs.
    pub delta: f64,
    pub replicates: usize,
    pub train: TrainConfig,
    pub sample_size: f64,
    /// SGD steps per unit of graphex size, so every vertex sees a similar
    /// number of updates at every size.
    pub steps_per_unit: f64,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            spec: GraphonSpec::exponential(),
            sizes: vec![50.0, 200.0],
            delta: 10.0,
            replicates: 10,
            train: TrainConfig {
                sampler: SamplerConfig::p_sampling(0.1, crate::sampler::NegativeSampling::Induced),
                embedding_dim: 4,
                eval_samples: 1,
                ..TrainConfig::default()
            },
            sample_size: 10.0,
            steps_per_unit: 20.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub n: f64,
    pub mean: f64,
    pub std: f64,
    /// Mean per-vertex drift of each replicate.
    pub values: Vec<f64>,
}

impl StabilityRow {
    pub fn records(&self) -> Vec<ExperimentRecord> {
        let mut out: Vec<ExperimentRecord> = self
            .values
            .iter()
            .enumerate()
            .map(|(r, &v)| record("stability", self.n, Some(r), "drift", v))
            .collect();
        out.push(record("stability", self.n, None, "mean", self.mean));
        out.push(record("stability", self.n, None, "std", self.std));
        out
    }
}

/// Mean embedding distance on the shared vertices of `small` and `large`;
/// `small`'s points are a subset of `large`'s.
pub fn embedding_drift(small: &LatentGraph, a: &ParamStore, large: &LatentGraph, b: &ParamStore) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (v, point) in small.points.iter().enumerate() {
        if let Ok(u) = large.points.binary_search(point) {
            let d: f64 = a.embedding(v).iter().zip(b.embedding(u)).map(|(x, y)| (x - y).powi(2)).sum();
            total += d.sqrt();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Train on `G_n` and on `G_{n+δ}` cut from one latent process, with shared
/// per-point initialization and seed, and measure the embedding drift.
pub fn stability_experiment(cfg: &StabilityConfig) -> Result<Vec<StabilityRow>> {
    check_sizes(&cfg.sizes, cfg.replicates)?;
    if !(cfg.delta >= 0.0) {
        return Err(Error::config("stability delta must be >= 0"));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.sizes.len())
        .flat_map(|i| (0..cfg.replicates).map(move |r| (i, r)))
        .collect();
    let values = jobs
        .par_iter()
        .map(|&(i, r)| {
            let n = cfg.sizes[i];
            let mut prng = rng::stream(rng::derive(cfg.seed, &[4, i as u64, r as u64]), 0);
            let process = LatentProcess::sample(&cfg.spec, n + cfg.delta, DEFAULT_POINT_BUDGET, &mut prng)?;
            let small = process.restrict(n);
            let large = process.restrict(n + cfg.delta);
            let seed = rng::derive(cfg.seed, &[5, i as u64, r as u64]);
            let tc = sized_training(&cfg.train, cfg.sample_size, cfg.steps_per_unit, n, seed);
            let (_, a) = fit_embeddings(&small, None, &tc)?;
            let tc_large = TrainConfig {
                sampler: scaled_sampler(&cfg.train.sampler, cfg.sample_size, n + cfg.delta),
                ..tc
            };
            let (_, b) = fit_embeddings(&large, None, &tc_large)?;
            Ok(embedding_drift(&small, &a, &large, &b))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(cfg
        .sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let v = values[i * cfg.replicates..(i + 1) * cfg.replicates].to_vec();
            let (mean, std) = mean_std(&v);
            StabilityRow { n, mean, std, values: v }
        })
        .collect())
}

/// Probability that a vertex with latent feature `x` carries the label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LabelKernel {
    Independent { rate: f64 },
    Logistic { intercept: f64, slope: f64 },
}

impl LabelKernel {
    pub fn probability(&self, x: f64) -> f64 {
        match *self {
            LabelKernel::Independent { rate } => rate,
            LabelKernel::Logistic { intercept, slope } => crate::model::sigmoid(intercept + slope * x),
        }
    }
}

const LABEL_DOMAIN: u64 = 0x6c61_6265_6c73_2121;

fn draw_labels(lg: &LatentGraph, kernel: &LabelKernel, seed: u64) -> LabelTable {
    let mut t = LabelTable::new(lg.points.len(), 1);
    for (v, (&x, &p)) in lg.latents.iter().zip(&lg.points).enumerate() {
        let mut r = rng::keyed(seed ^ LABEL_DOMAIN, p);
        t.set(v, 0, r.random::<f64>() < kernel.probability(x));
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalParamConfig {
    pub spec: GraphonSpec,
    pub sizes: Vec<f64>,
    pub replicates: usize,
    pub train: TrainConfig,
    pub labels: LabelKernel,
    pub logistic: LogisticOptions,
    pub sample_size: f64,
    pub steps_per_unit: f64,
    pub seed: u64,
}

impl Default for GlobalParamConfig {
    fn default() -> Self {
        GlobalParamConfig {
            spec: GraphonSpec::exponential(),
            sizes: vec![50.0, 100.0, 200.0],
            replicates: 10,
            train: StabilityConfig::default().train,
            labels: LabelKernel::Logistic {
                intercept: 1.0,
                slope: -1.0,
            },
            logistic: LogisticOptions::default(),
            sample_size: 10.0,
            steps_per_unit: 20.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalParamRow {
    pub n: f64,
    /// Fitted `(weights..., bias)` per replicate.
    pub gammas: Vec<Vec<f64>>,
    /// Per replicate, distance to the same replicate's fit at the largest size.
    pub distances: Vec<f64>,
    pub mean_distance: f64,
}

impl GlobalParamRow {
    pub fn records(&self) -> Vec<ExperimentRecord> {
        let mut out = Vec::new();
        for (r, g) in self.gammas.iter().enumerate() {
            for (k, &x) in g.iter().enumerate() {
                out.push(record("global_param", self.n, Some(r), &format!("gamma_{k}"), x));
            }
            out.push(record("global_param", self.n, Some(r), "distance", self.distances[r]));
        }
        out.push(record("global_param", self.n, None, "mean_distance", self.mean_distance));
        out
    }
}

/// Two-stage fits (embeddings from the edge loss, then the logistic layer)
/// at every size, all sizes of a replicate cut from one latent process.
pub fn global_param_experiment(cfg: &GlobalParamConfig) -> Result<Vec<GlobalParamRow>> {
    check_sizes(&cfg.sizes, cfg.replicates)?;
    let largest = cfg.sizes.iter().copied().fold(f64::MIN, f64::max);
    let per_replicate = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut prng = rng::stream(rng::derive(cfg.seed, &[6, r as u64]), 0);
            let process = LatentProcess::sample(&cfg.spec, largest, DEFAULT_POINT_BUDGET, &mut prng)?;
            let label_seed = rng::derive(cfg.seed, &[7, r as u64]);
            cfg.sizes
                .iter()
                .map(|&n| {
                    let lg = process.restrict(n);
                    let labels = draw_labels(&lg, &cfg.labels, label_seed);
                    let seed = rng::derive(cfg.seed, &[8, r as u64]);
                    let mut tc = sized_training(&cfg.train, cfg.sample_size, cfg.steps_per_unit, n, seed);
                    tc.loss = LossConfig {
                        q: 0.0,
                        mode: crate::model::LossMode::EdgeOnly,
                        ..tc.loss
                    };
                    let (ds, mut params) = fit_embeddings(&lg, Some(labels), &tc)?;
                    if tc.steps > 0 {
                        let all: Vec<usize> = (0..lg.points.len()).collect();
                        fit_global(&ds, &mut params, &all, &cfg.logistic)?;
                    }
                    let mut g = params.weights().to_vec();
                    g.extend_from_slice(params.bias());
                    Ok(g)
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<Vec<Vec<Vec<f64>>>>>()?;
    let top = cfg.sizes.iter().position(|&n| n == largest).unwrap();
    Ok(cfg
        .sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let gammas: Vec<Vec<f64>> = per_replicate.iter().map(|rep| rep[i].clone()).collect();
            let distances: Vec<f64> = per_replicate
                .iter()
                .map(|rep| rep[i].iter().zip(&rep[top]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .collect();
            let mean_distance = distances.iter().sum::<f64>() / distances.len() as f64;
            GlobalParamRow {
                n,
                gammas,
                distances,
                mean_distance,
            }
        })
        .collect())
}
