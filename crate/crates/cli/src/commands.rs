use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rerm_core::eval::{retention_for, run_protocol, write_results};
use rerm_core::graph::{write_cache, write_id_map};
use rerm_core::graphex::{
    global_param_experiment, risk_convergence_experiment, sample_graphex, stability_experiment, ExperimentRecord,
    GlobalParamConfig, RiskConvergenceConfig, StabilityConfig,
};
use rerm_core::model::{write_checkpoint, write_embeddings};
use rerm_core::sampler::Algorithm;
use rerm_core::trainer::{check_unbiasedness, exact_risk, monte_carlo_risk};
use rerm_core::{rng, train, Sampler, TrainConfig};
use serde::Serialize;
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig};
use crate::data::{self, Loaded};
use crate::error::CliError;

/// Artifacts are buffered in memory and written only once the whole command
/// has succeeded, so a failure leaves the output directory untouched.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(&'static str, Vec<u8>)>,
}

impl Artifacts {
    fn add(&mut self, name: &'static str, f: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.files.push((name, buf));
        Ok(())
    }

    pub fn write(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::path(dir, e))?;
        let mut written = Vec::new();
        for (name, bytes) in self.files {
            let path = dir.join(name);
            let mut w = BufWriter::new(File::create(&path).map_err(|e| CliError::path(&path, e))?);
            w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| CliError::path(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub struct Outcome {
    pub artifacts: Artifacts,
    /// One-line summary for stdout.
    pub summary: serde_json::Value,
    /// Set when the command ran but its check did not pass.
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(artifacts: Artifacts, summary: serde_json::Value) -> Outcome {
        Outcome {
            artifacts,
            summary,
            failure: None,
        }
    }
}

fn json_line(buf: &mut Vec<u8>, value: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer(&mut *buf, value)?;
    buf.push(b'\n');
    Ok(())
}

/// The training config with p-sampling retention resolved against `graph`.
fn resolved_train(cfg: &ExperimentConfig, loaded: &Loaded) -> TrainConfig {
    let mut tc = cfg.train.clone();
    if let Some(target) = cfg.target_size {
        tc.sampler.retention = retention_for(&loaded.dataset.graph, target);
    }
    tc
}

pub fn ingest(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let loaded = data::load(cfg)?;
    let g = &loaded.dataset.graph;
    let mut art = Artifacts::default();
    art.add("graph.bin", |b| Ok(write_cache(g, b)?))?;
    art.add("graph.ids", |b| Ok(write_id_map(&loaded.ids, b)?))?;
    let summary = json!({
        "command": "ingest",
        "graph": loaded.name,
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
    });
    Ok(Outcome::ok(art, summary))
}

pub fn sample(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let loaded = data::load(cfg)?;
    let tc = resolved_train(cfg, &loaded);
    let sampler = Sampler::new(&loaded.dataset.graph, tc.sampler.clone())?;
    let mut r = rng::stream(cfg.seed, rng::TRAIN_STREAM);
    let draws: Vec<_> = (0..cfg.sample_count).map(|_| sampler.draw(&mut r)).collect();
    let mut art = Artifacts::default();
    art.add("samples.jsonl", |b| {
        json_line(b, &json!({ "seed": cfg.seed, "graph": loaded.name, "sampler": tc.sampler }))?;
        for d in &draws {
            json_line(b, d)?;
        }
        Ok(())
    })?;
    let summary = json!({
        "command": "sample",
        "seed": cfg.seed,
        "samples": draws.len(),
        "mean_pairs": draws.iter().map(|d| d.pair_count()).sum::<usize>() as f64 / draws.len().max(1) as f64,
    });
    Ok(Outcome::ok(art, summary))
}

#[derive(Serialize)]
struct TraceLine {
    step: usize,
    risk_mean: f64,
    risk_stderr: f64,
}

pub fn train_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let loaded = data::load(cfg)?;
    let tc = resolved_train(cfg, &loaded);
    let out = train(&loaded.dataset, &tc)?;
    let mut art = Artifacts::default();
    art.add("model.ckpt", |b| Ok(write_checkpoint(&out.params, b)?))?;
    // Wall-clock times stay out of the artifacts so repeated runs match byte for byte.
    art.add("trace.jsonl", |b| {
        json_line(b, &json!({ "seed": cfg.seed }))?;
        for t in &out.trace {
            json_line(
                b,
                &TraceLine {
                    step: t.step,
                    risk_mean: t.risk_mean,
                    risk_stderr: t.risk_stderr,
                },
            )?;
        }
        Ok(())
    })?;
    art.add("embeddings.tsv", |b| {
        writeln!(b, "# seed={}", cfg.seed)?;
        Ok(write_embeddings(&out.params, Some(&loaded.ids), b)?)
    })?;
    let last = out.trace.last();
    let summary = json!({
        "command": "train",
        "seed": cfg.seed,
        "steps": tc.steps,
        "final_risk": last.map(|t| t.risk_mean),
        "seconds": last.map(|t| t.wallclock),
    });
    Ok(Outcome::ok(art, summary))
}

pub fn eval(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let loaded = data::load(cfg)?;
    if loaded.dataset.labels.is_none() {
        return Err(CliError::invalid(vec![
            "eval needs vertex labels: set graph.labels and graph.label_dim, or use a synthetic graph".into(),
        ]));
    }
    let tc = resolved_train(cfg, &loaded);
    let rows = run_protocol(&loaded.dataset, &loaded.name, &tc, &cfg.protocol)?;
    let mut art = Artifacts::default();
    art.add("results.csv", |b| Ok(write_results(&rows, cfg.seed, b)?))?;
    let summary = json!({ "command": "eval", "seed": cfg.seed, "rows": rows });
    Ok(Outcome::ok(art, summary))
}

/// Groups of keys that, once set, replace an experiment's own defaults.
fn overrides_group(explicit: &BTreeSet<String>, prefix: &str) -> bool {
    explicit.iter().any(|k| k.starts_with(prefix))
}

pub fn simulate(cfg: &ExperimentConfig, explicit: &BTreeSet<String>) -> Result<Outcome, CliError> {
    let s = &cfg.simulate;
    let own_train = |default: TrainConfig| -> TrainConfig {
        let mut t = if overrides_group(explicit, "train.") { cfg.train.clone() } else { default };
        if overrides_group(explicit, "sampler.") {
            t.sampler = cfg.train.sampler.clone();
        }
        if overrides_group(explicit, "loss.") {
            t.loss = cfg.train.loss;
        }
        t
    };
    let records: Vec<ExperimentRecord> = match s.experiment {
        Experiment::RiskConvergence => {
            let d = RiskConvergenceConfig::default();
            let c = RiskConvergenceConfig {
                spec: s.spec,
                kernel: s.kernel,
                sizes: s.sizes.clone().unwrap_or(d.sizes),
                replicates: s.replicates.unwrap_or(d.replicates),
                sampler: if overrides_group(explicit, "sampler.") { cfg.train.sampler.clone() } else { d.sampler },
                sample_size: s.sample_size.unwrap_or(d.sample_size),
                loss: if overrides_group(explicit, "loss.") { cfg.train.loss } else { d.loss },
                risk_samples: s.risk_samples.unwrap_or(d.risk_samples),
                seed: cfg.seed,
            };
            risk_convergence_experiment(&c)?.iter().flat_map(|r| r.records()).collect()
        }
        Experiment::Stability => {
            let d = StabilityConfig::default();
            let c = StabilityConfig {
                spec: s.spec,
                sizes: s.sizes.clone().unwrap_or(d.sizes),
                delta: s.delta.unwrap_or(d.delta),
                replicates: s.replicates.unwrap_or(d.replicates),
                train: own_train(d.train),
                sample_size: s.sample_size.unwrap_or(d.sample_size),
                steps_per_unit: s.steps_per_unit.unwrap_or(d.steps_per_unit),
                seed: cfg.seed,
            };
            stability_experiment(&c)?.iter().flat_map(|r| r.records()).collect()
        }
        Experiment::GlobalParam => {
            let d = GlobalParamConfig::default();
            let c = GlobalParamConfig {
                spec: s.spec,
                sizes: s.sizes.clone().unwrap_or(d.sizes),
                replicates: s.replicates.unwrap_or(d.replicates),
                train: own_train(d.train),
                labels: d.labels,
                logistic: cfg.protocol.options.logistic,
                sample_size: s.sample_size.unwrap_or(d.sample_size),
                steps_per_unit: s.steps_per_unit.unwrap_or(d.steps_per_unit),
                seed: cfg.seed,
            };
            global_param_experiment(&c)?.iter().flat_map(|r| r.records()).collect()
        }
        Experiment::EdgeCount => edge_counts(cfg)?,
    };
    let mut art = Artifacts::default();
    art.add("simulate.jsonl", |b| {
        json_line(b, &json!({ "seed": cfg.seed, "experiment": s.experiment.name(), "spec": s.spec }))?;
        for r in &records {
            json_line(b, r)?;
        }
        Ok(())
    })?;
    let summary = json!({
        "command": "simulate",
        "seed": cfg.seed,
        "experiment": s.experiment.name(),
        "records": records.len(),
    });
    Ok(Outcome::ok(art, summary))
}

fn edge_counts(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, CliError> {
    let s = &cfg.simulate;
    let sizes = s.sizes.clone().unwrap_or_else(|| vec![25.0, 50.0, 100.0]);
    let replicates = s.replicates.unwrap_or(20);
    let mut out = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let mut counts = Vec::with_capacity(replicates);
        for r in 0..replicates {
            let mut g = rng::stream(rng::derive(cfg.seed, &[8, i as u64, r as u64]), 0);
            let lg = sample_graphex(&s.spec, n, &mut g)?;
            let rec = |statistic: &str, value: f64| ExperimentRecord {
                experiment: "edge_count".into(),
                n,
                replicate: Some(r),
                statistic: statistic.into(),
                value,
            };
            out.push(rec("edges", lg.graph.edge_count() as f64));
            out.push(rec("vertices", lg.graph.vertex_count() as f64));
            counts.push(lg.graph.edge_count() as f64);
        }
        out.push(ExperimentRecord {
            experiment: "edge_count".into(),
            n,
            replicate: None,
            statistic: "mean_edges".into(),
            value: counts.iter().sum::<f64>() / replicates.max(1) as f64,
        });
        out.push(ExperimentRecord {
            experiment: "edge_count".into(),
            n,
            replicate: None,
            statistic: "expected_edges".into(),
            value: n * n * s.spec.edge_rate(),
        });
    }
    Ok(out)
}

fn z_score(estimate: f64, exact: f64, se: f64) -> f64 {
    let diff = (estimate - exact).abs();
    if se > 0.0 {
        diff / se
    } else if diff <= 1e-9 * exact.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn riskcheck(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let loaded = data::load(cfg)?;
    let tc = resolved_train(cfg, &loaded);
    let ds = &loaded.dataset;
    if tc.sampler.algorithm == Algorithm::UniformEdge && ds.graph.edge_count() == 0 {
        return Err(CliError::new("data", "uniform edge sampling needs at least one edge"));
    }
    let params = rerm_core::trainer::init_params(ds, &tc);
    let exact = exact_risk(ds, &params, &tc.sampler, tc.loss)?;
    let mc = monte_carlo_risk(
        ds,
        &params,
        &tc.sampler,
        tc.loss,
        cfg.riskcheck.samples,
        &mut rng::stream(cfg.seed, rng::EVAL_STREAM),
    )?;
    let risk_z = z_score(mc.mean, exact, mc.std_error);
    let report = check_unbiasedness(
        ds,
        &params,
        &tc.sampler,
        tc.loss,
        cfg.riskcheck.samples,
        &mut rng::stream(cfg.seed, rng::TRAIN_STREAM),
    )?;
    let limit = cfg.riskcheck.z_limit;
    let pass = risk_z < limit && report.passes(limit);
    let body = json!({
        "seed": cfg.seed,
        "graph": loaded.name,
        "sampler": tc.sampler,
        "loss": tc.loss,
        "samples": cfg.riskcheck.samples,
        "z_limit": limit,
        "exact_risk": exact,
        "monte_carlo_risk": mc,
        "risk_z": risk_z,
        "gradient": report,
        "pass": pass,
    });
    let mut art = Artifacts::default();
    art.add("riskcheck.json", |b| {
        serde_json::to_writer_pretty(&mut *b, &body)?;
        b.push(b'\n');
        Ok(())
    })?;
    let summary = json!({
        "command": "riskcheck",
        "seed": cfg.seed,
        "exact_risk": exact,
        "risk_z": risk_z,
        "max_gradient_z": report.max_abs_z,
        "pass": pass,
    });
    let failure = (!pass).then(|| {
        CliError::new(
            "check_failed",
            format!("risk |z| = {risk_z:.3}, max gradient |z| = {:.3}, limit {limit}", report.max_abs_z),
        )
    });
    Ok(Outcome {
        artifacts: art,
        summary,
        failure,
    })
}
