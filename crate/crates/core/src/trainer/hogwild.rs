//! Lock-free concurrent SGD. Parameters live in `AtomicU64` cells holding
//! `f64` bits; every worker reads and writes coordinates with relaxed
//! ordering, so concurrent writes to one coordinate resolve as
//! last-writer-wins. Runs are not reproducible.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use super::{mask_gradient, Evaluator, TrainConfig};
use crate::error::Result;
use crate::graph::Vertex;
use crate::model::{Objective, ParamStore, ParamView, SparseGradient};
use crate::rng;
use crate::sampler::Sampler;

struct Cells(Vec<AtomicU64>);

impl Cells {
    fn from_slice(xs: &[f64]) -> Cells {
        Cells(xs.iter().map(|x| AtomicU64::new(x.to_bits())).collect())
    }

    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.0[i].load(Ordering::Relaxed))
    }

    fn sub(&self, i: usize, delta: f64) {
        let x = self.get(i);
        self.0[i].store((x - delta).to_bits(), Ordering::Relaxed);
    }

    fn write_to(&self, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.0) {
            *o = f64::from_bits(c.load(Ordering::Relaxed));
        }
    }
}

pub(super) struct SharedParams {
    dim: usize,
    label_dim: usize,
    vertex_count: usize,
    embeddings: Cells,
    weights: Cells,
    bias: Cells,
    categories: Option<Cells>,
}

impl SharedParams {
    fn new(p: &ParamStore) -> SharedParams {
        SharedParams {
            dim: p.dim,
            label_dim: p.label_dim,
            vertex_count: p.keys.len(),
            embeddings: Cells::from_slice(&p.embeddings),
            weights: Cells::from_slice(&p.weights),
            bias: Cells::from_slice(&p.bias),
            categories: p.categories.as_deref().map(Cells::from_slice),
        }
    }

    fn write_back(&self, p: &mut ParamStore) {
        self.embeddings.write_to(&mut p.embeddings);
        self.weights.write_to(&mut p.weights);
        self.bias.write_to(&mut p.bias);
        if let (Some(c), Some(out)) = (&self.categories, p.categories.as_mut()) {
            c.write_to(out);
        }
    }

    fn apply(&self, grad: &SparseGradient, rate: f64) {
        let d = self.dim;
        for (i, &v) in grad.vertices.iter().enumerate() {
            for k in 0..d {
                self.embeddings.sub(v * d + k, rate * grad.vertex_grads[i * d + k]);
            }
        }
        for (i, g) in grad.weights.iter().enumerate() {
            if *g != 0.0 {
                self.weights.sub(i, rate * g);
            }
        }
        for (j, g) in grad.bias.iter().enumerate() {
            if *g != 0.0 {
                self.bias.sub(j, rate * g);
            }
        }
        if let Some(cells) = &self.categories {
            for (i, &c) in grad.categories.iter().enumerate() {
                for k in 0..d {
                    cells.sub(c * d + k, rate * grad.category_grads[i * d + k]);
                }
            }
        }
    }
}

impl ParamView for SharedParams {
    fn dim(&self) -> usize {
        self.dim
    }

    fn label_dim(&self) -> usize {
        self.label_dim
    }

    fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    fn category_count(&self) -> Option<usize> {
        self.categories.as_ref().map(|c| c.0.len() / self.dim)
    }

    fn read_vertex(&self, v: Vertex, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.embeddings.get(v * self.dim + k);
        }
    }

    fn read_category(&self, c: usize, out: &mut [f64]) {
        let cells = self.categories.as_ref().expect("no category table");
        for (k, o) in out.iter_mut().enumerate() {
            *o = cells.get(c * self.dim + k);
        }
    }

    fn weight(&self, k: usize, j: usize) -> f64 {
        self.weights.get(k * self.label_dim + j)
    }

    fn bias(&self, j: usize) -> f64 {
        self.bias.get(j)
    }
}

pub(super) fn run(
    sampler: &Sampler<'_>,
    objective: &Objective<'_>,
    params: &mut ParamStore,
    config: &TrainConfig,
    eval: &mut Evaluator<'_>,
) -> Result<()> {
    let shared = SharedParams::new(params);
    let mut rngs: Vec<_> = (0..config.workers)
        .map(|w| rng::stream(config.seed, rng::WORKER_STREAM_BASE + w as u64))
        .collect();
    let next = AtomicUsize::new(0);
    let chunk = if config.eval_every == 0 { config.steps } else { config.eval_every };
    let mut done = 0;
    while done < config.steps {
        let end = (done + chunk).min(config.steps);
        std::thread::scope(|scope| -> Result<()> {
            let handles: Vec<_> = rngs
                .iter_mut()
                .map(|rng| {
                    let (shared, next) = (&shared, &next);
                    scope.spawn(move || -> Result<()> {
                        loop {
                            let step = next.fetch_add(1, Ordering::Relaxed);
                            if step >= end {
                                return Ok(());
                            }
                            let sample = sampler.draw(rng);
                            let mut grad = objective.gradient(&sample, shared)?;
                            mask_gradient(&mut grad, config);
                            shared.apply(&grad, config.learning_rate.at(step, config.steps));
                        }
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect::<Result<Vec<()>>>()?;
            Ok(())
        })?;
        next.store(end, Ordering::Relaxed);
        done = end;
        shared.write_back(params);
        eval.record(done, params)?;
    }
    Ok(())
}
