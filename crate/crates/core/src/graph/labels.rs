use std::io::BufRead;

use super::{IdMap, Vertex};
use crate::error::{Error, Result};

/// Per-vertex multi-label bitsets plus a mask of labels visible at training time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTable {
    label_dim: usize,
    bits: Vec<bool>,
    mask: Vec<bool>,
}

impl LabelTable {
    /// All-zero labels, every vertex observed.
    pub fn new(vertex_count: usize, label_dim: usize) -> LabelTable {
        LabelTable {
            label_dim,
            bits: vec![false; vertex_count * label_dim],
            mask: vec![true; vertex_count],
        }
    }

    pub fn label_dim(&self) -> usize {
        self.label_dim
    }

    pub fn vertex_count(&self) -> usize {
        self.mask.len()
    }

    pub fn row(&self, v: Vertex) -> &[bool] {
        &self.bits[v * self.label_dim..(v + 1) * self.label_dim]
    }

    pub fn get(&self, v: Vertex, label: usize) -> bool {
        self.bits[v * self.label_dim + label]
    }

    pub fn set(&mut self, v: Vertex, label: usize, value: bool) {
        self.bits[v * self.label_dim + label] = value;
    }

    pub fn is_observed(&self, v: Vertex) -> bool {
        self.mask[v]
    }

    pub fn set_observed(&mut self, v: Vertex, observed: bool) {
        self.mask[v] = observed;
    }

    /// Copy with the labels of `hidden` censored.
    pub fn censored(&self, hidden: impl IntoIterator<Item = Vertex>) -> LabelTable {
        let mut out = self.clone();
        for v in hidden {
            out.mask[v] = false;
        }
        out
    }

    pub fn label_count(&self, v: Vertex) -> usize {
        self.row(v).iter().filter(|&&b| b).count()
    }
}

/// Parse `vertex label` lines over dense vertex ids.
pub fn load_labels(source: impl BufRead, vertex_count: usize, label_dim: usize) -> Result<LabelTable> {
    let mut table = LabelTable::new(vertex_count, label_dim);
    for_each_pair(source, |line, v, l| {
        let v = v as usize;
        if v >= vertex_count {
            return Err(Error::OutOfRange {
                what: "vertex",
                index: v,
                limit: vertex_count,
                line,
            });
        }
        check_label(l, label_dim, line)?;
        table.set(v, l as usize, true);
        Ok(())
    })?;
    Ok(table)
}

/// Parse `vertex label` lines over original vertex ids, translating through
/// `ids`. Lines naming vertices absent from the graph (for instance removed by
/// largest-component restriction) are skipped; their count is returned.
pub fn load_labels_mapped(
    source: impl BufRead,
    ids: &IdMap,
    label_dim: usize,
) -> Result<(LabelTable, usize)> {
    let mut table = LabelTable::new(ids.len(), label_dim);
    let mut skipped = 0;
    for_each_pair(source, |line, v, l| {
        check_label(l, label_dim, line)?;
        match ids.dense(v) {
            Some(d) => table.set(d, l as usize, true),
            None => skipped += 1,
        }
        Ok(())
    })?;
    Ok((table, skipped))
}

fn check_label(l: u64, label_dim: usize, line: usize) -> Result<()> {
    if l as usize >= label_dim {
        return Err(Error::OutOfRange {
            what: "label",
            index: l as usize,
            limit: label_dim,
            line,
        });
    }
    Ok(())
}

fn for_each_pair(
    source: impl BufRead,
    mut f: impl FnMut(usize, u64, u64) -> Result<()>,
) -> Result<()> {
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let parsed = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => a.parse::<u64>().ok().zip(b.parse::<u64>().ok()),
            _ => None,
        };
        let (a, b) = parsed.ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("expected two non-negative integers, got {t:?}"),
        })?;
        f(lineno, a, b)?;
    }
    Ok(())
}

/// Vertex -> category memberships.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMap {
    category_count: usize,
    memberships: Vec<Vec<usize>>,
}

impl CategoryMap {
    pub fn new(category_count: usize, memberships: Vec<Vec<usize>>) -> Result<CategoryMap> {
        for (v, cats) in memberships.iter().enumerate() {
            if let Some(&c) = cats.iter().find(|&&c| c >= category_count) {
                return Err(Error::config(format!(
                    "vertex {v} has category {c} >= category_count {category_count}"
                )));
            }
        }
        Ok(CategoryMap {
            category_count,
            memberships,
        })
    }

    pub fn category_count(&self) -> usize {
        self.category_count
    }

    pub fn vertex_count(&self) -> usize {
        self.memberships.len()
    }

    pub fn categories(&self, v: Vertex) -> &[usize] {
        &self.memberships[v]
    }
}

/// Parse `vertex category` lines over dense vertex ids.
pub fn load_categories(
    source: impl BufRead,
    vertex_count: usize,
    category_count: usize,
) -> Result<CategoryMap> {
    let mut memberships = vec![Vec::new(); vertex_count];
    for_each_pair(source, |line, v, c| {
        let v = v as usize;
        if v >= vertex_count {
            return Err(Error::OutOfRange {
                what: "vertex",
                index: v,
                limit: vertex_count,
                line,
            });
        }
        if c as usize >= category_count {
            return Err(Error::OutOfRange {
                what: "category",
                index: c as usize,
                limit: category_count,
                line,
            });
        }
        if !memberships[v].contains(&(c as usize)) {
            memberships[v].push(c as usize);
        }
        Ok(())
    })?;
    CategoryMap::new(category_count, memberships)
}
