//! Relational ERM solver: Monte-Carlo risk estimation and SGD over sampled
//! subgraphs, plus exhaustive risk oracles for small graphs.

mod hogwild;
mod oracle;

use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{LossConfig, Objective, ParamStore, ParamView, SparseGradient};
use crate::rng::{self, Rng};
use crate::sampler::{SampledSubgraph, Sampler, SamplerConfig};

pub use oracle::{
    check_unbiasedness, exact_gradient, exact_risk, exact_risk_psample, exact_risk_walk, monte_carlo_risk, CoordinateCheck,
    UnbiasednessReport, MAX_ENUMERATED_WALKS, MAX_ENUMERATED_VERTICES,
};

/// Risk estimates above this are treated as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LearningRate {
    Constant { rate: f64 },
    /// Linear decay from `start` at step 0 to `end` at the final step.
    Linear { start: f64, end: f64 },
}

impl LearningRate {
    pub fn at(&self, step: usize, total: usize) -> f64 {
        match *self {
            LearningRate::Constant { rate } => rate,
            LearningRate::Linear { start, end } => {
                let t = if total <= 1 { 0.0 } else { step as f64 / (total - 1) as f64 };
                start + (end - start) * t
            }
        }
    }

    fn violations(&self) -> Vec<String> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        match *self {
            LearningRate::Constant { rate } if !ok(rate) => vec![format!("learning rate must be > 0, got {rate}")],
            LearningRate::Linear { start, end } if !ok(start) || !ok(end) => {
                vec![format!("learning rates must be > 0, got {start} -> {end}")]
            }
            _ => Vec::new(),
        }
    }
}

impl Default for LearningRate {
    fn default() -> Self {
        LearningRate::Linear { start: 0.025, end: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub sampler: SamplerConfig,
    pub loss: LossConfig,
    pub steps: usize,
    pub learning_rate: LearningRate,
    pub embedding_dim: usize,
    /// Sampler threads. Updates are still applied in a fixed order unless
    /// `concurrent_updates` is set.
    pub workers: usize,
    /// Lock-free updates from all workers; nondeterministic.
    pub concurrent_updates: bool,
    pub seed: u64,
    /// Steps between risk evaluations; 0 evaluates only at start and end.
    pub eval_every: usize,
    pub eval_samples: usize,
    pub train_embeddings: bool,
    pub train_global: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sampler: SamplerConfig::default(),
            loss: LossConfig::default(),
            steps: 1000,
            learning_rate: LearningRate::default(),
            embedding_dim: 128,
            workers: 1,
            concurrent_updates: false,
            seed: 0,
            eval_every: 0,
            eval_samples: 100,
            train_embeddings: true,
            train_global: true,
        }
    }
}

impl TrainConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = self.sampler.violations();
        v.extend(self.loss.violations());
        v.extend(self.learning_rate.violations());
        if self.embedding_dim == 0 {
            v.push("train.embedding_dim must be >= 1".into());
        }
        if self.workers == 0 {
            v.push("train.workers must be >= 1".into());
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

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub risk_mean: f64,
    pub risk_stderr: f64,
    pub wallclock: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParamStore,
    pub trace: Vec<TraceRecord>,
}

/// Mean and standard error of the loss over `n` independent draws.
pub fn estimate_risk(
    sampler: &Sampler<'_>,
    objective: &Objective<'_>,
    params: &impl ParamView,
    n: usize,
    rng: &mut Rng,
) -> Result<RiskEstimate> {
    if n == 0 {
        return Err(Error::config("estimate_risk needs at least one sample"));
    }
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let x = objective.loss(&sampler.draw(rng), params)?;
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let std_error = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(RiskEstimate {
        mean,
        std_error,
        n_samples: n,
    })
}

/// Apply `params -= rate * grad` on the entries `grad` touches.
pub fn sgd_step(params: &mut ParamStore, grad: &SparseGradient, rate: f64) {
    let d = params.dim;
    for (i, &v) in grad.vertices.iter().enumerate() {
        let row = params.embedding_mut(v);
        for k in 0..d {
            row[k] -= rate * grad.vertex_grads[i * d + k];
        }
    }
    for (w, g) in params.weights.iter_mut().zip(&grad.weights) {
        *w -= rate * g;
    }
    for (b, g) in params.bias.iter_mut().zip(&grad.bias) {
        *b -= rate * g;
    }
    for (i, &c) in grad.categories.iter().enumerate() {
        let row = params.category_mut(c);
        for k in 0..d {
            row[k] -= rate * grad.category_grads[i * d + k];
        }
    }
}

pub(crate) fn mask_gradient(grad: &mut SparseGradient, config: &TrainConfig) {
    if !config.train_embeddings {
        grad.freeze_embeddings();
    }
    if !config.train_global {
        grad.weights.iter_mut().for_each(|x| *x = 0.0);
        grad.bias.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// Fresh parameters sized for `dataset` and `config`.
pub fn init_params(dataset: &Dataset, config: &TrainConfig) -> ParamStore {
    let p = ParamStore::new(dataset.graph.vertex_count(), config.embedding_dim, dataset.label_dim(), config.seed);
    match &dataset.categories {
        Some(c) => p.with_categories(c.category_count()),
        None => p,
    }
}

pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    train_from(dataset, init_params(dataset, config), config)
}

struct Evaluator<'a> {
    sampler: &'a Sampler<'a>,
    objective: Objective<'a>,
    samples: usize,
    rng: Rng,
    started: Instant,
    trace: Vec<TraceRecord>,
}

impl Evaluator<'_> {
    fn record(&mut self, step: usize, params: &impl ParamView) -> Result<()> {
        let est = estimate_risk(self.sampler, &self.objective, params, self.samples, &mut self.rng)?;
        if !est.mean.is_finite() || est.mean > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged { step, risk: est.mean });
        }
        self.trace.push(TraceRecord {
            step,
            risk_mean: est.mean,
            risk_stderr: est.std_error,
            wallclock: self.started.elapsed().as_secs_f64(),
        });
        Ok(())
    }

    fn due(&self, done: usize, total: usize, every: usize) -> bool {
        done == total || (every > 0 && done % every == 0)
    }
}

/// SGD from the given starting parameters: `steps` rounds of
/// draw, gradient, update. With one worker (or several, without
/// `concurrent_updates`) the result is a pure function of the config.
pub fn train_from(dataset: &Dataset, mut params: ParamStore, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let sampler = Sampler::new(&dataset.graph, config.sampler.clone())?;
    let objective = dataset.objective(config.loss);
    let mut eval = Evaluator {
        sampler: &sampler,
        objective,
        samples: config.eval_samples.max(1),
        rng: rng::stream(config.seed, rng::EVAL_STREAM),
        started: Instant::now(),
        trace: Vec::new(),
    };
    eval.record(0, &params)?;
    if config.steps == 0 {
        return Ok(TrainOutcome {
            params,
            trace: eval.trace,
        });
    }

    if config.concurrent_updates && config.workers > 1 {
        hogwild::run(&sampler, &objective, &mut params, config, &mut eval)?;
    } else if config.workers > 1 {
        run_pipelined(&sampler, &objective, &mut params, config, &mut eval)?;
    } else {
        let mut rng = rng::stream(config.seed, rng::TRAIN_STREAM);
        for step in 0..config.steps {
            let sample = sampler.draw(&mut rng);
            apply(&objective, &sample, &mut params, config, step)?;
            if eval.due(step + 1, config.steps, config.eval_every) {
                eval.record(step + 1, &params)?;
            }
        }
    }
    Ok(TrainOutcome {
        params,
        trace: eval.trace,
    })
}

fn apply(
    objective: &Objective<'_>,
    sample: &SampledSubgraph,
    params: &mut ParamStore,
    config: &TrainConfig,
    step: usize,
) -> Result<()> {
    let mut grad = objective.gradient(sample, params)?;
    mask_gradient(&mut grad, config);
    sgd_step(params, &grad, config.learning_rate.at(step, config.steps));
    Ok(())
}

const QUEUE_DEPTH: usize = 64;

/// Workers draw subgraphs into bounded queues; this thread consumes step `t`
/// from worker `t % workers`, so update order never depends on timing.
fn run_pipelined(
    sampler: &Sampler<'_>,
    objective: &Objective<'_>,
    params: &mut ParamStore,
    config: &TrainConfig,
    eval: &mut Evaluator<'_>,
) -> Result<()> {
    let workers = config.workers;
    std::thread::scope(|scope| {
        let mut queues = Vec::with_capacity(workers);
        for w in 0..workers {
            let (tx, rx) = mpsc::sync_channel::<SampledSubgraph>(QUEUE_DEPTH);
            queues.push(rx);
            let mut rng = rng::stream(config.seed, rng::WORKER_STREAM_BASE + w as u64);
            let steps = config.steps;
            scope.spawn(move || {
                for _ in (w..steps).step_by(workers) {
                    if tx.send(sampler.draw(&mut rng)).is_err() {
                        break;
                    }
                }
            });
        }
        for step in 0..config.steps {
            let sample = queues[step % workers].recv().expect("sampler worker exited early");
            apply(objective, &sample, params, config, step)?;
            if eval.due(step + 1, config.steps, config.eval_every) {
                eval.record(step + 1, params)?;
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests;
