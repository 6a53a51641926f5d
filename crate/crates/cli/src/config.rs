//! Experiment configuration: one TOML file read as flat dotted keys, with
//! `--set key=value` overrides applied on top.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rerm_core::eval::synthetic::CommunityConfig;
use rerm_core::eval::{LogisticOptions, PredictMode, Protocol, TestScheme, Training};
use rerm_core::graph::LoadOptions;
use rerm_core::graphex::{Family, GraphonSpec, MarkingKernel};
use rerm_core::sampler::{Algorithm, NegativeSampling, WalkStart};
use rerm_core::{LearningRate, LossMode, TrainConfig};
use toml::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    RiskConvergence,
    Stability,
    GlobalParam,
    EdgeCount,
}

impl Experiment {
    fn parse(s: &str) -> Result<Experiment, String> {
        match s {
            "risk_convergence" => Ok(Experiment::RiskConvergence),
            "stability" => Ok(Experiment::Stability),
            "global_param" => Ok(Experiment::GlobalParam),
            "edge_count" => Ok(Experiment::EdgeCount),
            _ => Err(format!(
                "unknown experiment {s:?} (expected risk_convergence, stability, global_param, edge_count)"
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::RiskConvergence => "risk_convergence",
            Experiment::Stability => "stability",
            Experiment::GlobalParam => "global_param",
            Experiment::EdgeCount => "edge_count",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GraphConfig {
    /// A file path, `fixture:<name>`, `synthetic:planted` or `synthetic:communities`.
    pub path: Option<String>,
    pub name: Option<String>,
    pub labels: Option<PathBuf>,
    pub label_dim: Option<usize>,
    pub categories: Option<PathBuf>,
    pub category_count: Option<usize>,
    pub load: LoadOptions,
}

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub blocks: usize,
    pub block_size: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub communities: CommunityConfig,
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub experiment: Experiment,
    pub spec: GraphonSpec,
    pub kernel: MarkingKernel,
    pub sizes: Option<Vec<f64>>,
    pub replicates: Option<usize>,
    pub sample_size: Option<f64>,
    pub risk_samples: Option<usize>,
    pub steps_per_unit: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RiskcheckConfig {
    pub samples: usize,
    pub z_limit: f64,
}

/// Everything a subcommand may need, fully resolved.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub graph: GraphConfig,
    pub synthetic: SyntheticConfig,
    /// When set, p-sampling retention is chosen so this many vertices survive in expectation.
    pub target_size: Option<f64>,
    pub train: TrainConfig,
    pub protocol: Protocol,
    pub sample_count: usize,
    pub simulate: SimulateConfig,
    pub riskcheck: RiskcheckConfig,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    fn defaults() -> ExperimentConfig {
        ExperimentConfig {
            seed: 0,
            graph: GraphConfig {
                path: None,
                name: None,
                labels: None,
                label_dim: None,
                categories: None,
                category_count: None,
                load: LoadOptions::default(),
            },
            synthetic: SyntheticConfig {
                blocks: 4,
                block_size: 50,
                p_in: 0.25,
                p_out: 0.01,
                communities: CommunityConfig::default(),
            },
            target_size: None,
            train: TrainConfig::default(),
            protocol: Protocol::default(),
            sample_count: 10,
            simulate: SimulateConfig {
                experiment: Experiment::RiskConvergence,
                spec: GraphonSpec::exponential(),
                kernel: MarkingKernel::default(),
                sizes: None,
                replicates: None,
                sample_size: None,
                risk_samples: None,
                steps_per_unit: None,
                delta: None,
            },
            riskcheck: RiskcheckConfig {
                samples: 100_000,
                z_limit: 4.0,
            },
            output_dir: PathBuf::from("out"),
        }
    }
}

const INPUT_PATH_KEYS: [&str; 3] = ["graph.path", "graph.labels", "graph.categories"];

/// Raw key/value pairs before interpretation.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub entries: BTreeMap<String, Value>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<RawConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::path(path, e))?;
        let mut raw =
            RawConfig::from_toml(&text).map_err(|m| CliError::invalid(vec![format!("{}: {m}", path.display())]))?;
        if let Some(base) = path.parent() {
            raw.rebase(base);
        }
        Ok(raw)
    }

    /// Input paths written in a config file are relative to that file.
    fn rebase(&mut self, base: &Path) {
        for key in INPUT_PATH_KEYS {
            if let Some(Value::String(s)) = self.entries.get_mut(key) {
                let is_scheme = s.starts_with("fixture:") || s.starts_with("synthetic:");
                if !is_scheme && Path::new(s.as_str()).is_relative() {
                    *s = base.join(&*s).to_string_lossy().into_owned();
                }
            }
        }
    }

    pub fn from_toml(text: &str) -> Result<RawConfig, String> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
        let mut raw = RawConfig::default();
        flatten("", &table, &mut raw.entries);
        Ok(raw)
    }

    /// Apply `key=value` overrides. Values are read as TOML; anything that
    /// does not parse is taken as a bare string.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Vec<String> {
        let mut bad = Vec::new();
        for o in overrides {
            let Some((key, value)) = o.split_once('=') else {
                bad.push(format!("override {o:?} is not of the form key=value"));
                continue;
            };
            let key = key.trim().to_string();
            let value = value.trim();
            let parsed = format!("v = {value}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| Value::String(value.to_string()));
            self.entries.insert(key, parsed);
        }
        bad
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn as_f64(v: &Value) -> Result<f64, String> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("expected a number, got {}", other.type_str())),
    }
}

fn as_u64(v: &Value) -> Result<u64, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(i) => Err(format!("expected a non-negative integer, got {i}")),
        // Seeds above i64::MAX can only be written as strings.
        Value::String(s) => s.parse().map_err(|_| format!("expected a non-negative integer, got {s:?}")),
        other => Err(format!("expected an integer, got {}", other.type_str())),
    }
}

fn as_usize(v: &Value) -> Result<usize, String> {
    as_u64(v).map(|x| x as usize)
}

fn as_bool(v: &Value) -> Result<bool, String> {
    v.as_bool().ok_or_else(|| format!("expected a boolean, got {}", v.type_str()))
}

fn as_str(v: &Value) -> Result<&str, String> {
    v.as_str().ok_or_else(|| format!("expected a string, got {}", v.type_str()))
}

fn as_list<T>(v: &Value, item: impl Fn(&Value) -> Result<T, String>) -> Result<Vec<T>, String> {
    match v {
        Value::Array(a) => a.iter().map(item).collect(),
        // A single element may be given without brackets.
        other => Ok(vec![item(other)?]),
    }
}

fn parse_named<T: std::str::FromStr<Err = rerm_core::Error>>(v: &Value) -> Result<T, String> {
    as_str(v)?.parse().map_err(|e: rerm_core::Error| e.to_string())
}

#[derive(Default)]
struct RateKeys {
    schedule: Option<String>,
    rate: Option<f64>,
    start: Option<f64>,
    end: Option<f64>,
}

fn apply(cfg: &mut ExperimentConfig, rate: &mut RateKeys, key: &str, v: &Value) -> Result<(), String> {
    let s = &mut cfg.train.sampler;
    match key {
        "seed" => cfg.seed = as_u64(v)?,
        "output.dir" => cfg.output_dir = PathBuf::from(as_str(v)?),

        "graph.path" => cfg.graph.path = Some(as_str(v)?.to_string()),
        "graph.name" => cfg.graph.name = Some(as_str(v)?.to_string()),
        "graph.labels" => cfg.graph.labels = Some(PathBuf::from(as_str(v)?)),
        "graph.label_dim" => cfg.graph.label_dim = Some(as_usize(v)?),
        "graph.categories" => cfg.graph.categories = Some(PathBuf::from(as_str(v)?)),
        "graph.category_count" => cfg.graph.category_count = Some(as_usize(v)?),
        "graph.deduplicate" => cfg.graph.load.deduplicate = as_bool(v)?,
        "graph.drop_self_loops" => cfg.graph.load.drop_self_loops = as_bool(v)?,
        "graph.largest_component" => cfg.graph.load.largest_component_only = as_bool(v)?,

        "synthetic.blocks" => cfg.synthetic.blocks = as_usize(v)?,
        "synthetic.block_size" => cfg.synthetic.block_size = as_usize(v)?,
        "synthetic.p_in" => cfg.synthetic.p_in = as_f64(v)?,
        "synthetic.p_out" => cfg.synthetic.p_out = as_f64(v)?,
        "synthetic.vertices" => cfg.synthetic.communities.vertices = as_usize(v)?,
        "synthetic.communities" => cfg.synthetic.communities.communities = as_usize(v)?,
        "synthetic.extra_membership" => cfg.synthetic.communities.extra_membership = as_f64(v)?,
        "synthetic.degree_shape" => cfg.synthetic.communities.degree_shape = as_f64(v)?,
        "synthetic.mean_degree" => cfg.synthetic.communities.mean_degree = as_f64(v)?,
        "synthetic.assortativity" => cfg.synthetic.communities.assortativity = as_f64(v)?,
        "synthetic.label_noise" => cfg.synthetic.communities.label_noise = as_f64(v)?,

        "sampler.algorithm" => s.algorithm = parse_named::<Algorithm>(v)?,
        "sampler.walk_length" => s.walk_length = as_usize(v)?,
        "sampler.window" => s.window = as_usize(v)?,
        "sampler.retention" => s.retention = as_f64(v)?,
        "sampler.target_size" => cfg.target_size = Some(as_f64(v)?),
        "sampler.edge_count" => s.edge_count = as_usize(v)?,
        "sampler.negative" => s.negative = parse_named::<NegativeSampling>(v)?,
        "sampler.unigram_power" => s.unigram_power = as_f64(v)?,
        "sampler.negatives_per_vertex" => s.negatives_per_vertex = as_usize(v)?,
        "sampler.walk_start" => s.walk_start = parse_named::<WalkStart>(v)?,

        "loss.q" => cfg.train.loss.q = as_f64(v)?,
        "loss.clip" => cfg.train.loss.clip = as_f64(v)?,
        "loss.mode" => cfg.train.loss.mode = parse_named::<LossMode>(v)?,

        "train.steps" => cfg.train.steps = as_usize(v)?,
        "train.embedding_dim" => cfg.train.embedding_dim = as_usize(v)?,
        "train.workers" => cfg.train.workers = as_usize(v)?,
        "train.concurrent_updates" => cfg.train.concurrent_updates = as_bool(v)?,
        "train.eval_every" => cfg.train.eval_every = as_usize(v)?,
        "train.eval_samples" => cfg.train.eval_samples = as_usize(v)?,
        "train.train_embeddings" => cfg.train.train_embeddings = as_bool(v)?,
        "train.train_global" => cfg.train.train_global = as_bool(v)?,
        "train.lr_schedule" => rate.schedule = Some(as_str(v)?.to_string()),
        "train.lr" => rate.rate = Some(as_f64(v)?),
        "train.lr_start" => rate.start = Some(as_f64(v)?),
        "train.lr_end" => rate.end = Some(as_f64(v)?),

        "eval.training" => {
            cfg.protocol.training = match as_str(v)? {
                "two_stage" => Training::TwoStage,
                "simultaneous" => Training::Simultaneous,
                other => return Err(format!("unknown training {other:?} (expected two_stage, simultaneous)")),
            }
        }
        "eval.schemes" => cfg.protocol.schemes = as_list(v, parse_named::<TestScheme>)?,
        "eval.seeds" => cfg.protocol.seeds = as_usize(v)?,
        "eval.test_fraction" => cfg.protocol.options.test_fraction = as_f64(v)?,
        "eval.predict" => {
            cfg.protocol.options.predict = match as_str(v)? {
                "threshold" => PredictMode::Threshold,
                "top_k" => PredictMode::TopK,
                other => return Err(format!("unknown prediction mode {other:?} (expected threshold, top_k)")),
            }
        }
        "eval.l2" => cfg.protocol.options.logistic.l2 = as_f64(v)?,
        "eval.max_iterations" => cfg.protocol.options.logistic.max_iterations = as_usize(v)?,

        "sample.count" => cfg.sample_count = as_usize(v)?,

        "simulate.experiment" => cfg.simulate.experiment = Experiment::parse(as_str(v)?)?,
        "simulate.family" => {
            cfg.simulate.spec = match as_str(v)? {
                "exponential" => GraphonSpec::exponential(),
                "constant" => GraphonSpec::constant(match cfg.simulate.spec.family {
                    Family::Constant { c } => c,
                    _ => 0.5,
                }),
                "zero" => GraphonSpec::zero(),
                other => return Err(format!("unknown graphon family {other:?} (expected exponential, constant, zero)")),
            }
        }
        "simulate.constant" => {
            let c = as_f64(v)?;
            if let Family::Constant { c: old } = &mut cfg.simulate.spec.family {
                *old = c;
            } else {
                return Err("only meaningful with simulate.family = \"constant\"".into());
            }
        }
        "simulate.x_max" => cfg.simulate.spec.x_max = as_f64(v)?,
        "simulate.sizes" => cfg.simulate.sizes = Some(as_list(v, as_f64)?),
        "simulate.replicates" => cfg.simulate.replicates = Some(as_usize(v)?),
        "simulate.sample_size" => cfg.simulate.sample_size = Some(as_f64(v)?),
        "simulate.risk_samples" => cfg.simulate.risk_samples = Some(as_usize(v)?),
        "simulate.steps_per_unit" => cfg.simulate.steps_per_unit = Some(as_f64(v)?),
        "simulate.delta" => cfg.simulate.delta = Some(as_f64(v)?),
        "simulate.mark_dim" => cfg.simulate.kernel.dim = as_usize(v)?,
        "simulate.mark_scale" => cfg.simulate.kernel.scale = as_f64(v)?,
        "simulate.mark_noise" => cfg.simulate.kernel.noise = as_f64(v)?,

        "riskcheck.samples" => cfg.riskcheck.samples = as_usize(v)?,
        "riskcheck.z_limit" => cfg.riskcheck.z_limit = as_f64(v)?,

        _ => return Err("unknown key".into()),
    }
    Ok(())
}

fn resolve_rate(rate: RateKeys, current: LearningRate, violations: &mut Vec<String>) -> LearningRate {
    let schedule = rate.schedule.as_deref().unwrap_or(if rate.rate.is_some() { "constant" } else { "linear" });
    match schedule {
        "constant" => {
            if rate.start.is_some() || rate.end.is_some() {
                violations.push("train.lr_start/train.lr_end require train.lr_schedule = \"linear\"".into());
            }
            LearningRate::Constant {
                rate: rate.rate.unwrap_or(0.025),
            }
        }
        "linear" => {
            if rate.rate.is_some() {
                violations.push("train.lr requires train.lr_schedule = \"constant\"".into());
            }
            let (s0, e0) = match current {
                LearningRate::Linear { start, end } => (start, end),
                LearningRate::Constant { rate } => (rate, rate),
            };
            LearningRate::Linear {
                start: rate.start.unwrap_or(s0),
                end: rate.end.unwrap_or(e0),
            }
        }
        other => {
            violations.push(format!("train.lr_schedule: unknown schedule {other:?} (expected constant, linear)"));
            current
        }
    }
}

/// Interpret every key, collecting all problems rather than stopping at the first.
pub fn resolve(raw: &RawConfig) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::defaults();
    let mut violations = Vec::new();
    let mut rate = RateKeys::default();

    // simulate.family must be seen before simulate.constant
    let mut keys: Vec<&String> = raw.entries.keys().collect();
    keys.sort_by_key(|k| (k.as_str() != "simulate.family", k.as_str()));
    for key in keys {
        if let Err(m) = apply(&mut cfg, &mut rate, key, &raw.entries[key]) {
            violations.push(format!("{key}: {m}"));
        }
    }

    if !raw.entries.contains_key("seed") {
        violations.push("seed: required".into());
    }
    cfg.train.seed = cfg.seed;
    cfg.train.learning_rate = resolve_rate(rate, cfg.train.learning_rate, &mut violations);
    violations.extend(cfg.train.violations());
    violations.extend(check_ranges(&cfg));

    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::invalid(violations))
    }
}

fn check_ranges(cfg: &ExperimentConfig) -> Vec<String> {
    let mut v = Vec::new();
    let prob = |x: f64| (0.0..=1.0).contains(&x);
    if cfg.graph.labels.is_some() != cfg.graph.label_dim.is_some() {
        v.push("graph.labels and graph.label_dim must be given together".into());
    }
    if cfg.graph.categories.is_some() != cfg.graph.category_count.is_some() {
        v.push("graph.categories and graph.category_count must be given together".into());
    }
    if !prob(cfg.synthetic.p_in) || !prob(cfg.synthetic.p_out) {
        v.push("synthetic.p_in and synthetic.p_out must lie in [0, 1]".into());
    }
    if let Some(t) = cfg.target_size {
        if !(t > 0.0) {
            v.push(format!("sampler.target_size must be > 0, got {t}"));
        }
        if cfg.train.sampler.algorithm != Algorithm::PSampling {
            v.push("sampler.target_size only applies to p_sampling".into());
        }
    }
    if !(cfg.protocol.options.test_fraction > 0.0 && cfg.protocol.options.test_fraction < 1.0) {
        v.push(format!(
            "eval.test_fraction must lie in (0, 1), got {}",
            cfg.protocol.options.test_fraction
        ));
    }
    if cfg.protocol.seeds == 0 {
        v.push("eval.seeds must be >= 1".into());
    }
    if cfg.protocol.schemes.is_empty() {
        v.push("eval.schemes must name at least one scheme".into());
    }
    let LogisticOptions { l2, .. } = cfg.protocol.options.logistic;
    if !(l2 >= 0.0) {
        v.push(format!("eval.l2 must be >= 0, got {l2}"));
    }
    if cfg.riskcheck.samples < 2 {
        v.push("riskcheck.samples must be >= 2".into());
    }
    if !(cfg.riskcheck.z_limit > 0.0) {
        v.push(format!("riskcheck.z_limit must be > 0, got {}", cfg.riskcheck.z_limit));
    }
    if let Err(e) = cfg.simulate.spec.validate() {
        v.push(format!("simulate: {e}"));
    }
    if let Some(sizes) = &cfg.simulate.sizes {
        if sizes.is_empty() || sizes.iter().any(|&n| !(n > 0.0)) {
            v.push("simulate.sizes must be a non-empty list of positive sizes".into());
        }
    }
    v
}
