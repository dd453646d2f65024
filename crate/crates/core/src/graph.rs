//! Directed graphs over a fixed node set and time-labelled graph series.
//!
//! Adjacency is stored densely as packed bit rows twice over: once by source
//! (`out`) and once by target (`inc`). Keeping both orientations makes the
//! two-path counts behind triangle change statistics a handful of popcounts.

pub mod edgelist;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
pub(crate) fn and_count(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

/// Directed graph without self-loops on nodes `0..order`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DirectedGraph {
    n: usize,
    words: usize,
    out: Vec<u64>,
    inc: Vec<u64>,
    edges: usize,
}

impl std::fmt::Debug for DirectedGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectedGraph")
            .field("order", &self.n)
            .field("edges", &self.edges)
            .finish()
    }
}

impl DirectedGraph {
    /// Edgeless graph on `n` nodes.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidOrder(n));
        }
        let words = n.div_ceil(WORD);
        Ok(Self {
            n,
            words,
            out: vec![0; n * words],
            inc: vec![0; n * words],
            edges: 0,
        })
    }

    /// Builds a graph from a list of directed edges. Self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n)?;
        for &(i, j) in edges {
            g.set_edge(i, j, true)?;
        }
        Ok(g)
    }

    /// The complete digraph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::new(n)?;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.put(i, j, true);
                }
            }
        }
        Ok(g)
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Number of ordered node pairs, `n(n-1)`.
    #[inline]
    pub fn dyad_cells(&self) -> usize {
        self.n * (self.n - 1)
    }

    pub fn density(&self) -> f64 {
        self.edges as f64 / self.dyad_cells() as f64
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out[i * self.words + j / WORD] >> (j % WORD) & 1 == 1
    }

    /// Sets cell `(i, j)`, validating indices.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::IndexError { i, j, n: self.n });
        }
        if i == j {
            return Err(Error::SelfLoopRejected(i));
        }
        self.put(i, j, present);
        Ok(())
    }

    /// Value-returning variant of [`set_edge`](Self::set_edge).
    pub fn with_edge(mut self, i: usize, j: usize, present: bool) -> Result<Self> {
        self.set_edge(i, j, present)?;
        Ok(self)
    }

    /// Unchecked cell write; callers guarantee `i != j` and both in range.
    #[inline]
    pub(crate) fn put(&mut self, i: usize, j: usize, present: bool) {
        debug_assert!(i != j && i < self.n && j < self.n);
        let (ow, ob) = (i * self.words + j / WORD, j % WORD);
        let was = self.out[ow] >> ob & 1 == 1;
        if was == present {
            return;
        }
        let (iw, ib) = (j * self.words + i / WORD, i % WORD);
        if present {
            self.out[ow] |= 1 << ob;
            self.inc[iw] |= 1 << ib;
            self.edges += 1;
        } else {
            self.out[ow] &= !(1 << ob);
            self.inc[iw] &= !(1 << ib);
            self.edges -= 1;
        }
    }

    /// Packed successor set of `i`.
    #[inline]
    pub fn out_row(&self, i: usize) -> &[u64] {
        &self.out[i * self.words..(i + 1) * self.words]
    }

    /// Packed predecessor set of `j`.
    #[inline]
    pub fn in_row(&self, j: usize) -> &[u64] {
        &self.inc[j * self.words..(j + 1) * self.words]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.in_row(j).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Iterates over directed edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            let row = self.out_row(i);
            row.iter().enumerate().flat_map(move |(w, &bits)| {
                BitIter(bits).map(move |b| (i, w * WORD + b))
            })
        })
    }

    /// Successors of `i` in increasing order.
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_row(i)
            .iter()
            .enumerate()
            .flat_map(|(w, &bits)| BitIter(bits).map(move |b| w * WORD + b))
    }

    /// Graph with every off-diagonal cell flipped.
    pub fn complement(&self) -> Self {
        let mut g = Self::new(self.n).expect("order already validated");
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && !self.has_edge(i, j) {
                    g.put(i, j, true);
                }
            }
        }
        g
    }

    /// Relabels nodes so that node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::OrderMismatch(self.n, perm.len()));
        }
        let mut g = Self::new(self.n)?;
        for (i, j) in self.edges() {
            g.put(perm[i], perm[j], true);
        }
        Ok(g)
    }

    /// Maps a linear index in `0..n(n-1)` onto an off-diagonal cell.
    #[inline]
    pub fn cell_from_index(&self, k: usize) -> (usize, usize) {
        let i = k / (self.n - 1);
        let r = k % (self.n - 1);
        (i, if r < i { r } else { r + 1 })
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

/// Ordered sequence of equal-order graphs with consecutive integer labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphSeries {
    start: i64,
    graphs: Vec<DirectedGraph>,
}

impl GraphSeries {
    pub fn new(start: i64, graphs: Vec<DirectedGraph>) -> Result<Self> {
        if let Some(first) = graphs.first() {
            if let Some(bad) = graphs.iter().find(|g| g.order() != first.order()) {
                return Err(Error::OrderMismatch(first.order(), bad.order()));
            }
        }
        Ok(Self { start, graphs })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Label of the last graph, or `start - 1` when empty.
    pub fn end(&self) -> i64 {
        self.start + self.graphs.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn order(&self) -> Option<usize> {
        self.graphs.first().map(DirectedGraph::order)
    }

    pub fn graphs(&self) -> &[DirectedGraph] {
        &self.graphs
    }

    pub fn into_graphs(self) -> Vec<DirectedGraph> {
        self.graphs
    }

    pub fn get(&self, t: i64) -> Option<&DirectedGraph> {
        let k = t.checked_sub(self.start)?;
        usize::try_from(k).ok().and_then(|k| self.graphs.get(k))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &DirectedGraph)> {
        self.graphs
            .iter()
            .enumerate()
            .map(move |(k, g)| (self.start + k as i64, g))
    }

    /// The `len` graphs ending at label `t` (inclusive).
    pub fn window(&self, t: i64, len: usize) -> Option<&[DirectedGraph]> {
        let end = usize::try_from(t - self.start).ok()? + 1;
        if end > self.graphs.len() || len > end {
            return None;
        }
        Some(&self.graphs[end - len..end])
    }

    /// Sub-series covering labels `from..=to`.
    pub fn slice(&self, from: i64, to: i64) -> Option<GraphSeries> {
        let a = usize::try_from(from - self.start).ok()?;
        let b = usize::try_from(to - self.start).ok()?;
        if a > b || b >= self.graphs.len() {
            return None;
        }
        Some(GraphSeries {
            start: from,
            graphs: self.graphs[a..=b].to_vec(),
        })
    }
}
