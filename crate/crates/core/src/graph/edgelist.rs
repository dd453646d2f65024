//! Plain-text edge lists (`t,src,dst`) and the node-id registry.
//!
//! Time labels are either integers or ISO dates (`YYYY-MM-DD`). Dates are
//! mapped to day numbers so that consecutive calendar days become
//! consecutive integer labels. A first line whose time field parses as
//! neither is treated as a header.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;

use chrono::{Datelike, NaiveDate};

use super::{DirectedGraph, GraphSeries};
use crate::error::{Error, Result};

/// One edge observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRecord {
    pub t: i64,
    pub src: String,
    pub dst: String,
}

impl EdgeRecord {
    pub fn new(t: i64, src: impl Into<String>, dst: impl Into<String>) -> Self {
        Self {
            t,
            src: src.into(),
            dst: dst.into(),
        }
    }
}

/// How time labels in a parsed file were written.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeFormat {
    Integer,
    /// ISO dates; labels are days since 0001-01-01 (proleptic Gregorian).
    Date,
}

/// Bidirectional mapping between external node ids and graph indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeRegistry {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut r = Self::new();
        for id in ids {
            r.intern(&id.into());
        }
        r
    }

    /// Returns the index for `id`, registering it if new.
    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&k) = self.index.get(id) {
            return k;
        }
        let k = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), k);
        k
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, k: usize) -> Option<&str> {
        self.ids.get(k).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// CSV with header `index,id`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,id\n");
        for (k, id) in self.ids.iter().enumerate() {
            let _ = writeln!(s, "{k},{id}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = Self::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (n == 0 && line.starts_with("index")) {
                continue;
            }
            let (k, id) = line.split_once(',').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: "expected `index,id`".into(),
            })?;
            let k: usize = k.trim().parse().map_err(|_| Error::Parse {
                line: n + 1,
                message: format!("bad index `{k}`"),
            })?;
            if k != r.len() {
                return Err(Error::Parse {
                    line: n + 1,
                    message: format!("registry indices must be consecutive, got {k}"),
                });
            }
            r.intern(id.trim());
        }
        Ok(r)
    }
}

pub fn parse_label(field: &str) -> Option<(i64, TimeFormat)> {
    if let Ok(t) = field.parse::<i64>() {
        return Some((t, TimeFormat::Integer));
    }
    NaiveDate::parse_from_str(field, "%Y-%m-%d")
        .ok()
        .map(|d| (i64::from(d.num_days_from_ce()), TimeFormat::Date))
}

impl TimeFormat {
    /// Writes a label the way it was read.
    pub fn format(self, t: i64) -> String {
        match self {
            TimeFormat::Integer => t.to_string(),
            TimeFormat::Date => i32::try_from(t)
                .ok()
                .and_then(NaiveDate::from_num_days_from_ce_opt)
                .map_or_else(|| t.to_string(), |d| d.format("%Y-%m-%d").to_string()),
        }
    }
}

/// Parses `t,src,dst` records. Blank lines and `#` comments are skipped.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<(Vec<EdgeRecord>, TimeFormat)> {
    let mut out = Vec::new();
    let mut format = None;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let Some((t, f)) = parse_label(fields[0]) else {
            if out.is_empty() && format.is_none() {
                continue; // header
            }
            return Err(Error::Parse {
                line: n + 1,
                message: format!("bad time label `{}`", fields[0]),
            });
        };
        match format {
            None => format = Some(f),
            Some(prev) if prev != f => {
                return Err(Error::Parse {
                    line: n + 1,
                    message: "mixed integer and date time labels".into(),
                })
            }
            _ => {}
        }
        out.push(EdgeRecord::new(t, fields[1], fields[2]));
    }
    Ok((out, format.unwrap_or(TimeFormat::Integer)))
}

/// Result of ingesting an edge list.
#[derive(Clone, Debug)]
pub struct Ingested {
    pub series: GraphSeries,
    pub registry: NodeRegistry,
    pub dropped_self_loops: usize,
    pub collapsed_duplicates: usize,
}

/// Builds one graph per time label over the union node set.
///
/// Without a registry, ids are indexed in lexicographic order. A supplied
/// registry keeps its indices and gains any unseen ids at the end.
pub fn from_edge_list(records: &[EdgeRecord], registry: Option<NodeRegistry>) -> Result<Ingested> {
    if records.is_empty() {
        return Err(Error::EmptyIngest {
            dropped_self_loops: 0,
        });
    }
    let mut registry = match registry {
        Some(r) => r,
        None => {
            let ids: BTreeSet<&str> = records
                .iter()
                .flat_map(|r| [r.src.as_str(), r.dst.as_str()])
                .collect();
            NodeRegistry::from_ids(ids)
        }
    };

    let mut dropped = 0;
    let mut by_time: BTreeMap<i64, BTreeSet<(usize, usize)>> = BTreeMap::new();
    let mut kept = 0usize;
    for r in records {
        let i = registry.intern(&r.src);
        let j = registry.intern(&r.dst);
        let cells = by_time.entry(r.t).or_default();
        if i == j {
            dropped += 1;
            continue;
        }
        cells.insert((i, j));
        kept += 1;
    }
    let distinct: usize = by_time.values().map(BTreeSet::len).sum();
    if distinct == 0 {
        return Err(Error::EmptyIngest {
            dropped_self_loops: dropped,
        });
    }

    let first = *by_time.keys().next().expect("non-empty");
    let last = *by_time.keys().next_back().expect("non-empty");
    let missing: Vec<i64> = (first..=last).filter(|t| !by_time.contains_key(t)).collect();
    if !missing.is_empty() {
        return Err(Error::NonContiguousSeries { missing });
    }

    let n = registry.len();
    let graphs = by_time
        .values()
        .map(|cells| {
            let mut g = DirectedGraph::new(n)?;
            for &(i, j) in cells {
                g.put(i, j, true);
            }
            Ok(g)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ingested {
        series: GraphSeries::new(first, graphs)?,
        registry,
        dropped_self_loops: dropped,
        collapsed_duplicates: kept - distinct,
    })
}

/// Serializes a series as `t,src,dst` lines with a header. Nodes without a
/// registry entry are written as their decimal index.
pub fn to_edge_list(series: &GraphSeries, registry: Option<&NodeRegistry>) -> String {
    let mut s = String::from("t,src,dst\n");
    let name = |k: usize| -> String {
        registry
            .and_then(|r| r.id(k))
            .map_or_else(|| k.to_string(), str::to_owned)
    };
    for (t, g) in series.iter() {
        for (i, j) in g.edges() {
            let _ = writeln!(s, "{t},{},{}", name(i), name(j));
        }
    }
    s
}

/// Registry with zero-padded ids (`v000`, `v001`, ...) whose lexicographic
/// order matches the index order.
pub fn padded_registry(n: usize) -> NodeRegistry {
    let width = n.saturating_sub(1).to_string().len().max(3);
    NodeRegistry::from_ids((0..n).map(|k| format!("v{k:0width$}")))
}
