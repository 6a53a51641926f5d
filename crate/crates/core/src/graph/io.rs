//! Text edge lists, the binary adjacency cache, and original-id maps.
//!
//! Cache layout, all integers little-endian `u64` after the magic:
//!
//! ```text
//! magic "RERMGRPH" | version | vertex_count | edge_count
//! offsets[vertex_count + 1] | neighbors[2 * edge_count] | edges[edge_count] as (u, v)
//! ```

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Read, Write};

use super::{validate, Graph, Pair, Vertex};
use crate::error::{Error, Result};

const CACHE_MAGIC: &[u8; 8] = b"RERMGRPH";
const CACHE_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Merge repeated edges (including `v u` after `u v`); otherwise a repeat is an error.
    pub deduplicate: bool,
    /// Drop `v v` lines; otherwise a self-loop is an error.
    pub drop_self_loops: bool,
    pub largest_component_only: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            deduplicate: true,
            drop_self_loops: true,
            largest_component_only: false,
        }
    }
}

/// Dense index -> original identifier.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    original: Vec<u64>,
    lookup: HashMap<u64, Vertex>,
}

impl IdMap {
    pub fn new(original: Vec<u64>) -> IdMap {
        let lookup = original.iter().enumerate().map(|(i, &o)| (o, i)).collect();
        IdMap { original, lookup }
    }

    pub fn identity(n: usize) -> IdMap {
        IdMap::new((0..n as u64).collect())
    }

    pub fn original(&self, v: Vertex) -> u64 {
        self.original[v]
    }

    pub fn dense(&self, original: u64) -> Option<Vertex> {
        self.lookup.get(&original).copied()
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.original
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub graph: Graph,
    pub ids: IdMap,
}

/// Parse a whitespace-separated `u v` edge list. Blank lines and lines
/// starting with `#` are skipped. Vertices are relabeled densely in
/// ascending order of their original identifiers.
pub fn load_edge_list(source: impl BufRead, options: LoadOptions) -> Result<Loaded> {
    let mut raw: Vec<(u64, u64)> = Vec::new();
    let mut mentioned = BTreeSet::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (u, v) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (parse_id(a, lineno)?, parse_id(b, lineno)?),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected two vertex ids, got {trimmed:?}"),
                })
            }
        };
        mentioned.insert(u);
        mentioned.insert(v);
        if u == v {
            if options.drop_self_loops {
                continue;
            }
            return Err(Error::Parse {
                line: lineno,
                message: format!("self-loop on vertex {u}"),
            });
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            if options.deduplicate {
                continue;
            }
            return Err(Error::Parse {
                line: lineno,
                message: format!("duplicate edge {} {}", key.0, key.1),
            });
        }
        raw.push(key);
    }
    if raw.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let ids = IdMap::new(mentioned.into_iter().collect());
    let edges = raw
        .iter()
        .map(|&(u, v)| (ids.dense(u).unwrap(), ids.dense(v).unwrap()));
    let graph = Graph::from_edges(ids.len(), edges);

    let loaded = Loaded { graph, ids };
    if options.largest_component_only {
        Ok(largest_component(&loaded))
    } else {
        Ok(loaded)
    }
}

fn parse_id(field: &str, line: usize) -> Result<u64> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("not a non-negative integer: {field:?}"),
    })
}

fn largest_component(loaded: &Loaded) -> Loaded {
    let graph = &loaded.graph;
    let n = graph.vertex_count();
    let mut component = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for s in 0..n {
        if component[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        component[s] = id;
        stack.push(s);
        while let Some(u) = stack.pop() {
            size += 1;
            for &v in graph.neighbors(u) {
                if component[v] == usize::MAX {
                    component[v] = id;
                    stack.push(v);
                }
            }
        }
        sizes.push(size);
    }
    // first component wins ties
    let best = (0..sizes.len()).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap();
    let keep: Vec<Vertex> = (0..n).filter(|&v| component[v] == best).collect();
    let mut remap = vec![usize::MAX; n];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = new;
    }
    let edges = graph
        .edges()
        .iter()
        .filter(|&&(u, _)| component[u] == best)
        .map(|&(u, v)| (remap[u], remap[v]));
    Loaded {
        graph: Graph::from_edges(keep.len(), edges),
        ids: IdMap::new(keep.iter().map(|&v| loaded.ids.original(v)).collect()),
    }
}

/// Write one `u v` line per edge, in edge-list order.
pub fn write_edge_list(graph: &Graph, mut sink: impl Write) -> Result<()> {
    for &(u, v) in graph.edges() {
        writeln!(sink, "{u} {v}")?;
    }
    Ok(())
}

pub fn write_id_map(ids: &IdMap, mut sink: impl Write) -> Result<()> {
    for id in ids.as_slice() {
        writeln!(sink, "{id}")?;
    }
    Ok(())
}

pub fn read_id_map(source: impl BufRead) -> Result<IdMap> {
    let mut ids = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        ids.push(parse_id(t, idx + 1)?);
    }
    Ok(IdMap::new(ids))
}

pub fn write_cache(graph: &Graph, mut sink: impl Write) -> Result<()> {
    sink.write_all(CACHE_MAGIC)?;
    let mut put = |x: u64| sink.write_all(&x.to_le_bytes());
    put(CACHE_VERSION)?;
    put(graph.vertex_count() as u64)?;
    put(graph.edge_count() as u64)?;
    for &o in graph.offsets() {
        put(o as u64)?;
    }
    for &v in graph.neighbor_block() {
        put(v as u64)?;
    }
    for &(u, v) in graph.edges() {
        put(u as u64)?;
        put(v as u64)?;
    }
    Ok(())
}

/// Read a cache written by [`write_cache`]; the decoded graph is validated.
pub fn read_cache(mut source: impl Read) -> Result<Graph> {
    let mut magic = [0u8; 8];
    source.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Format("not a graph cache (bad magic)".into()));
    }
    let mut get = || -> Result<u64> {
        let mut b = [0u8; 8];
        source.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    };
    let version = get()?;
    if version != CACHE_VERSION {
        return Err(Error::Format(format!("unsupported cache version {version}")));
    }
    let n = get()? as usize;
    let m = get()? as usize;
    let offsets = (0..=n).map(|_| get().map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
    let neighbors = (0..2 * m).map(|_| get().map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
    let edges = (0..m)
        .map(|_| Ok((get()? as usize, get()? as usize)))
        .collect::<Result<Vec<Pair>>>()?;
    let graph = Graph::from_raw_parts(offsets, neighbors, edges);
    let report = validate(&graph);
    if !report.is_empty() {
        return Err(Error::Format(format!("cache fails validation: {report:?}")));
    }
    Ok(graph)
}
