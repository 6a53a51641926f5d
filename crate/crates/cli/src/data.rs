//! Resolving `graph.*` keys into a dataset.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rerm_core::eval::synthetic::{overlapping_communities, planted_partition};
use rerm_core::graph::{load_categories, load_edge_list, load_labels_mapped, read_cache, read_id_map, IdMap};
use rerm_core::{fixtures, rng, Dataset};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Seeds synthetic graph generation, independent of the training streams.
const SYNTHETIC_DOMAIN: u64 = 0x7379_6e74_6865_7469;

pub struct Loaded {
    pub dataset: Dataset,
    pub ids: IdMap,
    pub name: String,
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::path(path, e))
}

/// Every input file named by the config, so absence is reported before any work.
pub fn check_inputs(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let mut files: Vec<PathBuf> = Vec::new();
    if let Some(p) = &cfg.graph.path {
        if !p.contains(':') || Path::new(p).exists() {
            files.push(PathBuf::from(p));
        }
    }
    files.extend(cfg.graph.labels.iter().cloned());
    files.extend(cfg.graph.categories.iter().cloned());
    for f in files {
        if let Err(e) = std::fs::metadata(&f) {
            return Err(CliError::path(&f, e));
        }
    }
    Ok(())
}

pub fn load(cfg: &ExperimentConfig) -> Result<Loaded, CliError> {
    let spec = cfg
        .graph
        .path
        .as_deref()
        .ok_or_else(|| CliError::invalid(vec!["graph.path: required by this subcommand".into()]))?;
    check_inputs(cfg)?;

    let synth_rng = || rng::stream(rng::derive(cfg.seed, &[SYNTHETIC_DOMAIN]), 0);
    let (mut dataset, ids, default_name) = if let Some(name) = spec.strip_prefix("fixture:") {
        let graph = fixtures::named(name).ok_or_else(|| {
            CliError::invalid(vec![format!(
                "graph.path: unknown fixture {name:?} (expected one of: {})",
                fixtures::NAMES.join(", ")
            )])
        })?;
        let ids = IdMap::identity(graph.vertex_count());
        (Dataset::new(graph), ids, name.to_string())
    } else if let Some(kind) = spec.strip_prefix("synthetic:") {
        let s = &cfg.synthetic;
        let ds = match kind {
            "planted" => planted_partition(s.blocks, s.block_size, s.p_in, s.p_out, &mut synth_rng())?,
            "communities" => overlapping_communities(&s.communities, &mut synth_rng())?,
            other => {
                return Err(CliError::invalid(vec![format!(
                    "graph.path: unknown synthetic graph {other:?} (expected planted, communities)"
                )]))
            }
        };
        let ids = IdMap::identity(ds.graph.vertex_count());
        (ds, ids, kind.to_string())
    } else {
        let path = Path::new(spec);
        let stem = path.file_stem().map_or("graph".into(), |s| s.to_string_lossy().into_owned());
        if path.extension().is_some_and(|e| e == "bin") {
            let graph = read_cache(open(path)?)?;
            let ids_path = path.with_extension("ids");
            let ids = if ids_path.exists() {
                read_id_map(open(&ids_path)?)?
            } else {
                IdMap::identity(graph.vertex_count())
            };
            if ids.len() != graph.vertex_count() {
                return Err(CliError::new(
                    "data",
                    format!("{}: {} ids for {} vertices", ids_path.display(), ids.len(), graph.vertex_count()),
                ));
            }
            (Dataset::new(graph), ids, stem)
        } else {
            let loaded = load_edge_list(open(path)?, cfg.graph.load)?;
            (Dataset::new(loaded.graph), loaded.ids, stem)
        }
    };

    if let (Some(path), Some(dim)) = (&cfg.graph.labels, cfg.graph.label_dim) {
        let (labels, _skipped) = load_labels_mapped(open(path)?, &ids, dim)?;
        dataset.labels = Some(labels);
    }
    if let (Some(path), Some(count)) = (&cfg.graph.categories, cfg.graph.category_count) {
        let dense = translate_ids(open(path)?, &ids)?;
        dataset.categories = Some(load_categories(dense.as_bytes(), ids.len(), count)?);
    }

    let name = cfg.graph.name.clone().unwrap_or(default_name);
    Ok(Loaded { dataset, ids, name })
}

/// Rewrite `vertex value` lines from original to dense vertex ids, dropping
/// vertices the graph does not contain. Line numbers are preserved.
fn translate_ids(source: impl BufRead, ids: &IdMap) -> Result<String, CliError> {
    let mut out = String::new();
    for line in source.lines() {
        let line = line?;
        let mut fields = line.split_whitespace();
        if let (Some(v), Some(rest)) = (fields.next(), fields.next()) {
            if !v.starts_with('#') {
                if let Some(d) = v.parse::<u64>().ok().and_then(|v| ids.dense(v)) {
                    out.push_str(&format!("{d} {rest}"));
                    for f in fields {
                        out.push(' ');
                        out.push_str(f);
                    }
                }
                out.push('\n');
                continue;
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_maps_and_drops() {
        let ids = IdMap::new(vec![10, 20, 30]);
        let text = "# c\n20 1\n99 0\n30 2\n";
        let out = translate_ids(text.as_bytes(), &ids).unwrap();
        assert_eq!(out, "# c\n1 1\n\n2 2\n");
    }
}
