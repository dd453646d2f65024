//! Network statistics `s(Y_t, Y_{t-1})`, their change statistics and a few
//! descriptive measures.
//!
//! Counts are exact integers internally; conversion to `f64` happens only
//! when a [`StatVector`] is produced.
//!
//! The directed triangle statistic is the number of transitive triples
//! (`i→j, j→k, i→k`, one per configuration) plus the number of directed
//! 3-cycles (each cycle once, not once per rotation).

pub mod structure;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{and_count, DirectedGraph};

/// A single network term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Edges,
    #[serde(alias = "triangle")]
    Triangles,
    #[serde(alias = "asymmetric")]
    AsymmetricDyads,
    #[serde(alias = "mutual")]
    MutualDyads,
    /// Cells (edges and non-edges) unchanged since the previous graph.
    #[serde(alias = "memory")]
    Stability,
}

impl Term {
    pub fn name(self) -> &'static str {
        match self {
            Term::Edges => "edges",
            Term::Triangles => "triangles",
            Term::AsymmetricDyads => "asymmetric",
            Term::MutualDyads => "mutual",
            Term::Stability => "stability",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "edges" | "edge" => Ok(Term::Edges),
            "triangles" | "triangle" => Ok(Term::Triangles),
            "asymmetric" | "asymmetric_dyads" | "asym" => Ok(Term::AsymmetricDyads),
            "mutual" | "mutual_dyads" => Ok(Term::MutualDyads),
            "stability" | "memory" => Ok(Term::Stability),
            other => Err(Error::InvalidTermSet(format!("unknown term `{other}`"))),
        }
    }
}

/// Ordered, duplicate-free list of terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct TermSet {
    terms: Vec<Term>,
}

impl TryFrom<Vec<Term>> for TermSet {
    type Error = Error;

    fn try_from(terms: Vec<Term>) -> Result<Self> {
        TermSet::new(terms)
    }
}

impl From<TermSet> for Vec<Term> {
    fn from(t: TermSet) -> Self {
        t.terms
    }
}

impl TermSet {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidTermSet("empty term set".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if terms[..k].contains(t) {
                return Err(Error::InvalidTermSet(format!("duplicate term `{t}`")));
            }
        }
        Ok(Self { terms })
    }

    /// Edges, triangles, asymmetric dyads and stability: the monitored model.
    pub fn monitoring() -> Self {
        Self {
            terms: vec![
                Term::Edges,
                Term::Triangles,
                Term::AsymmetricDyads,
                Term::Stability,
            ],
        }
    }

    /// Edges, triangles and asymmetric dyads: the base-network model.
    pub fn base_network() -> Self {
        Self {
            terms: vec![Term::Edges, Term::Triangles, Term::AsymmetricDyads],
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_temporal(&self) -> bool {
        self.terms.contains(&Term::Stability)
    }

    /// True when every term's change statistic depends only on the dyad
    /// itself and the previous graph (no triangles).
    pub fn is_dyad_separable(&self) -> bool {
        !self.terms.contains(&Term::Triangles)
    }

    pub fn position(&self, term: Term) -> Option<usize> {
        self.terms.iter().position(|&t| t == term)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.terms.iter().map(|t| t.name()).collect()
    }

    fn check<'a>(
        &self,
        y: &DirectedGraph,
        prev: Option<&'a DirectedGraph>,
    ) -> Result<Option<&'a DirectedGraph>> {
        if let Some(p) = prev {
            if p.order() != y.order() {
                return Err(Error::OrderMismatch(y.order(), p.order()));
            }
        } else if self.is_temporal() {
            return Err(Error::MissingPredecessor);
        }
        Ok(prev)
    }

    /// Integer statistic counts, aligned with the term order.
    pub fn counts(&self, y: &DirectedGraph, prev: Option<&DirectedGraph>) -> Result<Vec<i64>> {
        let prev = self.check(y, prev)?;
        let mut mutual = None;
        let mut mutual_of = |y: &DirectedGraph| *mutual.get_or_insert_with(|| mutual_dyads(y));
        Ok(self
            .terms
            .iter()
            .map(|t| match t {
                Term::Edges => y.edge_count() as i64,
                Term::MutualDyads => mutual_of(y),
                Term::AsymmetricDyads => y.edge_count() as i64 - 2 * mutual_of(y),
                Term::Triangles => triangles(y),
                Term::Stability => stability(y, prev.expect("checked")),
            })
            .collect())
    }

    /// Writes the change statistic for cell `(i, j)` into `out` without
    /// validation. `prev` must be present for temporal term sets.
    #[inline]
    pub fn change_into(
        &self,
        y: &DirectedGraph,
        prev: Option<&DirectedGraph>,
        i: usize,
        j: usize,
        out: &mut [i64],
    ) {
        for (slot, t) in out.iter_mut().zip(&self.terms) {
            *slot = match t {
                Term::Edges => 1,
                Term::MutualDyads => i64::from(y.has_edge(j, i)),
                Term::AsymmetricDyads => 1 - 2 * i64::from(y.has_edge(j, i)),
                Term::Triangles => triangle_change(y, i, j),
                Term::Stability => {
                    2 * i64::from(prev.expect("stability needs a predecessor").has_edge(i, j)) - 1
                }
            };
        }
    }

    /// Checked change statistic `s(y with y_ij=1) - s(y with y_ij=0)`.
    pub fn change_counts(
        &self,
        y: &DirectedGraph,
        prev: Option<&DirectedGraph>,
        i: usize,
        j: usize,
    ) -> Result<Vec<i64>> {
        let prev = self.check(y, prev)?;
        let n = y.order();
        if i >= n || j >= n {
            return Err(Error::IndexError { i, j, n });
        }
        if i == j {
            return Err(Error::SelfLoopRejected(i));
        }
        let mut out = vec![0; self.len()];
        self.change_into(y, prev, i, j, &mut out);
        Ok(out)
    }
}

/// Real-valued statistic vector aligned with a [`TermSet`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatVector {
    pub values: Vec<f64>,
}

impl StatVector {
    pub fn from_counts(c: &[i64]) -> Self {
        Self {
            values: c.iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn compute_stats(
    terms: &TermSet,
    y: &DirectedGraph,
    prev: Option<&DirectedGraph>,
) -> Result<StatVector> {
    terms.counts(y, prev).map(|c| StatVector::from_counts(&c))
}

pub fn change_stats(
    terms: &TermSet,
    y: &DirectedGraph,
    prev: Option<&DirectedGraph>,
    i: usize,
    j: usize,
) -> Result<StatVector> {
    terms
        .change_counts(y, prev, i, j)
        .map(|c| StatVector::from_counts(&c))
}

pub fn mutual_dyads(y: &DirectedGraph) -> i64 {
    let twice: u32 = (0..y.order())
        .map(|i| and_count(y.out_row(i), y.in_row(i)))
        .sum();
    i64::from(twice / 2)
}

/// Transitive triples `i→j, j→k, i→k`, one per configuration.
pub fn transitive_triples(y: &DirectedGraph) -> i64 {
    y.edges()
        .map(|(i, j)| i64::from(and_count(y.out_row(i), y.out_row(j))))
        .sum()
}

/// Directed 3-cycles, each counted once.
pub fn cyclic_triples(y: &DirectedGraph) -> i64 {
    let thrice: i64 = y
        .edges()
        .map(|(i, j)| i64::from(and_count(y.out_row(j), y.in_row(i))))
        .sum();
    thrice / 3
}

pub fn triangles(y: &DirectedGraph) -> i64 {
    transitive_triples(y) + cyclic_triples(y)
}

/// Cells with equal value in `y` and `prev`, over all `n(n-1)` ordered pairs.
pub fn stability(y: &DirectedGraph, prev: &DirectedGraph) -> i64 {
    let changed: u32 = (0..y.order())
        .map(|i| {
            y.out_row(i)
                .iter()
                .zip(prev.out_row(i))
                .map(|(a, b)| (a ^ b).count_ones())
                .sum::<u32>()
        })
        .sum();
    y.dyad_cells() as i64 - i64::from(changed)
}

/// Change in the triangle count when `(i, j)` is switched on.
#[inline]
pub fn triangle_change(y: &DirectedGraph, i: usize, j: usize) -> i64 {
    let (oi, oj, ii, ij) = (y.out_row(i), y.out_row(j), y.in_row(i), y.in_row(j));
    // j→k,i→k ; k→i,k→j ; i→k,k→j close transitive triples, j→k,k→i closes a cycle.
    i64::from(and_count(oi, oj) + and_count(ii, ij) + and_count(oi, ij) + and_count(oj, ii))
}

/// Directed 2-paths `i→j→k` with `i != k`.
pub fn two_paths(y: &DirectedGraph) -> i64 {
    (0..y.order())
        .map(|j| {
            let through = y.in_degree(j) as i64 * y.out_degree(j) as i64;
            through - i64::from(and_count(y.out_row(j), y.in_row(j)))
        })
        .sum()
}

/// Density, reciprocity and transitivity of one graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub density: f64,
    /// Share of edges whose reverse is present; 1.0 for an edgeless graph.
    pub reciprocity: f64,
    /// Closed over all directed 2-paths; 0.0 when there are none.
    pub transitivity: f64,
}

pub fn descriptive(y: &DirectedGraph) -> Descriptive {
    let edges = y.edge_count() as f64;
    let reciprocity = if y.edge_count() == 0 {
        1.0
    } else {
        2.0 * mutual_dyads(y) as f64 / edges
    };
    let paths = two_paths(y);
    let transitivity = if paths == 0 {
        0.0
    } else {
        transitive_triples(y) as f64 / paths as f64
    };
    Descriptive {
        density: y.density(),
        reciprocity,
        transitivity,
    }
}
