use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rerm_core::model::write_checkpoint;
use rerm_core::trainer::init_params;
use rerm_core::{fixtures, Dataset, TrainConfig};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn rerm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rerm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn rerm")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn riskcheck_on_path_fixture_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("riskcheck_path3.toml");
    let out = rerm(dir.path(), &["riskcheck", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&read(dir.path().join("out/riskcheck/riskcheck.json"))).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["seed"], 7);
    assert!(report["risk_z"].as_f64().unwrap() < 4.0);
    let coords = report["gradient"]["coordinates"].as_array().unwrap();
    assert!(!coords.is_empty());
    for c in coords {
        assert!(c["z"].as_f64().unwrap().abs() < 4.0, "{c}");
    }
}

#[test]
fn riskcheck_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("riskcheck_path3.toml");
    let out = rerm(
        dir.path(),
        &["riskcheck", "-c", cfg.to_str().unwrap(), "--set", "riskcheck.z_limit=1e-12", "--set", "riskcheck.samples=1000"],
    );
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "check_failed");
}

#[test]
fn riskcheck_refuses_unigram_negatives() {
    let dir = tempfile::tempdir().unwrap();
    let out = rerm(dir.path(), &["riskcheck", "--set", "seed=1", "--set", "graph.path=fixture:path3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn zero_step_checkpoint_is_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let out = rerm(
        dir.path(),
        &[
            "train",
            "--set",
            "seed=99",
            "--set",
            "graph.path=fixture:petersen",
            "--set",
            "train.steps=0",
            "--set",
            "train.embedding_dim=6",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let ds = Dataset::new(fixtures::named("petersen").unwrap());
    let tc = TrainConfig {
        seed: 99,
        embedding_dim: 6,
        ..TrainConfig::default()
    };
    let mut expected = Vec::new();
    write_checkpoint(&init_params(&ds, &tc), &mut expected).unwrap();
    assert_eq!(read(dir.path().join("out/model.ckpt")), expected);
}

const TRAIN_ARGS: [&str; 10] = [
    "--set",
    "train.steps=300",
    "--set",
    "train.embedding_dim=8",
    "--set",
    "train.eval_every=100",
    "--set",
    "train.eval_samples=10",
    "--set",
    "sampler.walk_length=10",
];

fn run_in(dir: &Path, command: &str, seed: u64, extra: &[&str]) {
    let seed = format!("seed={seed}");
    let mut args = vec![command, "--set", &seed];
    args.extend_from_slice(extra);
    let out = rerm(dir, &args);
    assert!(out.status.success(), "{command}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let karate = fixture("karate.txt");
    let graph = format!("graph.path={}", karate.display());
    let mut train_args = vec!["--set", graph.as_str()];
    train_args.extend_from_slice(&TRAIN_ARGS);
    let eval_args = [
        "--set",
        "graph.path=synthetic:planted",
        "--set",
        "synthetic.block_size=20",
        "--set",
        "train.steps=300",
        "--set",
        "train.embedding_dim=8",
        "--set",
        "eval.seeds=2",
        "--set",
        "eval.schemes=[\"uniform_vertex\", \"random_walk\"]",
    ];
    let sim_args = [
        "--set",
        "simulate.experiment=risk_convergence",
        "--set",
        "simulate.sizes=[20, 40]",
        "--set",
        "simulate.replicates=3",
        "--set",
        "simulate.risk_samples=50",
    ];
    let cases: [(&str, &[&str], &[&str]); 4] = [
        ("train", &train_args, &["model.ckpt", "trace.jsonl", "embeddings.tsv"]),
        ("sample", &train_args, &["samples.jsonl"]),
        ("eval", &eval_args, &["results.csv"]),
        ("simulate", &sim_args, &["simulate.jsonl"]),
    ];
    for (command, args, files) in cases {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let c = tempfile::tempdir().unwrap();
        run_in(a.path(), command, 5, args);
        run_in(b.path(), command, 5, args);
        run_in(c.path(), command, 6, args);
        let mut differs = false;
        for f in files {
            let x = read(a.path().join("out").join(f));
            assert_eq!(x, read(b.path().join("out").join(f)), "{command}: {f} differs between runs");
            differs |= x != read(c.path().join("out").join(f));
        }
        assert!(differs, "{command}: changing the seed changed nothing");
    }
}

#[test]
fn outputs_carry_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let karate = fixture("karate.txt");
    let graph = format!("graph.path={}", karate.display());
    let mut args = vec!["--set", graph.as_str()];
    args.extend_from_slice(&TRAIN_ARGS);
    run_in(dir.path(), "train", 1234, &args);
    run_in(dir.path(), "sample", 1234, &args);
    let text = |f: &str| String::from_utf8(read(dir.path().join("out").join(f))).unwrap();
    assert!(text("embeddings.tsv").starts_with("# seed=1234\n"));
    let first: Value = serde_json::from_str(text("trace.jsonl").lines().next().unwrap()).unwrap();
    assert_eq!(first["seed"], 1234);
    let first: Value = serde_json::from_str(text("samples.jsonl").lines().next().unwrap()).unwrap();
    assert_eq!(first["seed"], 1234);
    // original ids 1..=34, one row each
    let ids: Vec<u64> = text("embeddings.tsv")
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ids, (1..=34).collect::<Vec<u64>>());
}

#[test]
fn validation_lists_every_violation_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "[sampler]\nretention = 2.0\nalgorithm = \"bogus\"\n[loss]\nq = 1.5\n[train]\nembedding_dim = 0\nsteps = -3\n[typo]\nkey = 1\n",
    )
    .unwrap();
    let out = rerm(dir.path(), &["train", "--config", cfg.to_str().unwrap(), "--set", "graph.path=fixture:k2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "invalid_config");
    let v: Vec<String> = err["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap().to_string())
        .collect();
    for needle in ["seed: required", "sampler.retention", "sampler.algorithm", "loss.q", "embedding_dim", "train.steps", "typo.key"] {
        assert!(v.iter().any(|m| m.contains(needle)), "{needle:?} not in {v:?}");
    }
    assert_eq!(v.len(), 7, "{v:?}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_input_is_a_path_error() {
    let dir = tempfile::tempdir().unwrap();
    for command in ["ingest", "sample", "train", "eval", "riskcheck"] {
        let out = rerm(dir.path(), &[command, "--set", "seed=1", "--set", "graph.path=does/not/exist.txt"]);
        assert_eq!(out.status.code(), Some(3), "{command}");
        let err = stderr_json(&out);
        assert_eq!(err["error"], "path");
        assert!(err["message"].as_str().unwrap().contains("does/not/exist.txt"));
    }
    let out = rerm(dir.path(), &["train", "--config", "nope.toml"]);
    assert_eq!(stderr_json(&out)["error"], "path");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn cached_graph_trains_like_the_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let karate = fixture("karate.txt");
    let text_graph = format!("graph.path={}", karate.display());
    run_in(dir.path(), "ingest", 0, &["--set", &text_graph, "--set", "output.dir=cache"]);
    assert!(dir.path().join("cache/graph.bin").exists());
    assert!(dir.path().join("cache/graph.ids").exists());

    let mut from_text = vec!["--set", text_graph.as_str(), "--set", "output.dir=a"];
    from_text.extend_from_slice(&TRAIN_ARGS);
    run_in(dir.path(), "train", 3, &from_text);
    let mut from_cache = vec!["--set", "graph.path=cache/graph.bin", "--set", "output.dir=b"];
    from_cache.extend_from_slice(&TRAIN_ARGS);
    run_in(dir.path(), "train", 3, &from_cache);
    assert_eq!(read(dir.path().join("a/embeddings.tsv")), read(dir.path().join("b/embeddings.tsv")));
    assert_eq!(read(dir.path().join("a/model.ckpt")), read(dir.path().join("b/model.ckpt")));
}

#[test]
fn eval_needs_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = rerm(dir.path(), &["eval", "--set", "seed=1", "--set", "graph.path=fixture:house"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn labels_are_read_through_original_ids() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.txt");
    let labels = dir.path().join("l.txt");
    // two triangles joined by one edge, ids far from dense
    std::fs::write(&edges, "100 200\n200 300\n100 300\n300 400\n400 500\n500 600\n400 600\n").unwrap();
    std::fs::write(&labels, "100 0\n200 0\n300 0\n400 1\n500 1\n600 1\n").unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "seed = 2\n[graph]\npath = \"g.txt\"\nlabels = \"l.txt\"\nlabel_dim = 2\n\
         [sampler]\nalgorithm = \"p_sampling\"\nretention = 0.8\nnegative = \"induced\"\n\
         [train]\nsteps = 500\nembedding_dim = 4\n[eval]\nseeds = 1\npredict = \"top_k\"\n",
    )
    .unwrap();
    // run from elsewhere: inputs resolve against the config's directory
    let elsewhere = tempfile::tempdir().unwrap();
    let out = rerm(elsewhere.path(), &["eval", "-c", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(read(elsewhere.path().join("out/results.csv"))).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# seed=2");
    assert_eq!(lines[1], "sampler,dataset,test_scheme,score");
    assert!(lines[2].starts_with("p_sampling+induced,g,uniform_vertex,"), "{csv}");
}

#[test]
fn bundled_configs_validate() {
    for name in ["riskcheck_path3.toml", "train_small.toml", "eval_planted.toml", "simulate_risk.toml"] {
        let dir = tempfile::tempdir().unwrap();
        // steps=0 and tiny budgets keep this a parse/validate smoke test
        let cfg = fixture(name);
        let command = match name {
            "riskcheck_path3.toml" => "riskcheck",
            "train_small.toml" => "train",
            "eval_planted.toml" => "eval",
            _ => "simulate",
        };
        let mut args = vec![command, "-c", cfg.to_str().unwrap()];
        let quick: &[&str] = match command {
            "riskcheck" => &["--set", "riskcheck.samples=100", "--set", "riskcheck.z_limit=100"],
            "train" => &["--set", "train.steps=10"],
            "eval" => &["--set", "train.steps=10", "--set", "eval.seeds=1"],
            _ => &["--set", "simulate.replicates=2", "--set", "simulate.risk_samples=10"],
        };
        args.extend_from_slice(quick);
        let out = rerm(dir.path(), &args);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
