//! Embedding exports and parameter checkpoints.
//!
//! Checkpoint layout, little-endian:
//!
//! ```text
//! magic "RERMCKPT" | version u64 | dim u64 | vertex_count u64 | label_dim u64
//! | category_count u64 (u64::MAX when absent) | seed u64
//! | keys[vertex_count] u64 | embeddings f64 | weights f64 | bias f64 | categories f64
//! ```

use std::io::{Read, Write};

use super::ParamStore;
use crate::error::{Error, Result};
use crate::graph::IdMap;

const CKPT_MAGIC: &[u8; 8] = b"RERMCKPT";
const CKPT_VERSION: u64 = 1;

fn write_rows(rows: &[f64], dim: usize, id: impl Fn(usize) -> u64, mut sink: impl Write) -> Result<()> {
    for (i, row) in rows.chunks(dim).enumerate() {
        write!(sink, "{}", id(i))?;
        for x in row {
            write!(sink, "\t{x}")?;
        }
        writeln!(sink)?;
    }
    Ok(())
}

/// One tab-separated line per vertex: id, then the `d` coordinates.
/// With `ids`, vertices are written under their original identifiers.
pub fn write_embeddings(params: &ParamStore, ids: Option<&IdMap>, sink: impl Write) -> Result<()> {
    write_rows(
        &params.embeddings,
        params.dim,
        |v| ids.map_or(v as u64, |m| m.original(v)),
        sink,
    )
}

pub fn write_category_embeddings(params: &ParamStore, sink: impl Write) -> Result<()> {
    let table = params
        .categories
        .as_ref()
        .ok_or_else(|| Error::config("parameters have no category table"))?;
    write_rows(table, params.dim, |c| c as u64, sink)
}

pub fn write_checkpoint(params: &ParamStore, mut sink: impl Write) -> Result<()> {
    sink.write_all(CKPT_MAGIC)?;
    let cat_count = params
        .categories
        .as_ref()
        .map_or(u64::MAX, |c| (c.len() / params.dim) as u64);
    for x in [
        CKPT_VERSION,
        params.dim as u64,
        params.keys.len() as u64,
        params.label_dim as u64,
        cat_count,
        params.seed,
    ] {
        sink.write_all(&x.to_le_bytes())?;
    }
    for &k in &params.keys {
        sink.write_all(&k.to_le_bytes())?;
    }
    let floats = params
        .embeddings
        .iter()
        .chain(&params.weights)
        .chain(&params.bias)
        .chain(params.categories.iter().flatten());
    for x in floats {
        sink.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint(mut source: impl Read) -> Result<ParamStore> {
    let mut magic = [0u8; 8];
    source.read_exact(&mut magic)?;
    if &magic != CKPT_MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let mut word = || -> Result<[u8; 8]> {
        let mut b = [0u8; 8];
        source.read_exact(&mut b)?;
        Ok(b)
    };
    let mut header = [0u64; 6];
    for h in &mut header {
        *h = u64::from_le_bytes(word()?);
    }
    let [version, dim, n, label_dim, cat_count, seed] = header;
    if version != CKPT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    if dim == 0 {
        return Err(Error::Format("zero embedding dimension".into()));
    }
    let (dim, n, label_dim) = (dim as usize, n as usize, label_dim as usize);
    let keys = (0..n).map(|_| word().map(u64::from_le_bytes)).collect::<Result<Vec<_>>>()?;
    let mut floats = |count: usize| -> Result<Vec<f64>> {
        (0..count).map(|_| word().map(f64::from_le_bytes)).collect()
    };
    let embeddings = floats(n * dim)?;
    let weights = floats(dim * label_dim)?;
    let bias = floats(label_dim)?;
    let categories = if cat_count == u64::MAX {
        None
    } else {
        Some(floats(cat_count as usize * dim)?)
    };
    Ok(ParamStore {
        dim,
        label_dim,
        seed,
        keys,
        embeddings,
        weights,
        bias,
        categories,
    })
}
