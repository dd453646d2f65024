//! Structural summaries used for goodness-of-fit: degree distributions,
//! edgewise shared partners, geodesic distances and the triad census.

use std::collections::VecDeque;

use crate::graph::{and_count, DirectedGraph};

/// Holland–Leinhardt triad classes in the conventional order.
pub const TRIAD_CLASSES: [&str; 16] = [
    "003", "012", "102", "021D", "021U", "021C", "111D", "111U", "030T", "030C", "201", "120D",
    "120U", "120C", "210", "300",
];

/// `out[d]` = number of nodes with in-degree `d`, for `d` in `0..n`.
pub fn in_degree_distribution(y: &DirectedGraph) -> Vec<u64> {
    let mut out = vec![0; y.order()];
    for v in 0..y.order() {
        out[y.in_degree(v)] += 1;
    }
    out
}

pub fn out_degree_distribution(y: &DirectedGraph) -> Vec<u64> {
    let mut out = vec![0; y.order()];
    for v in 0..y.order() {
        out[y.out_degree(v)] += 1;
    }
    out
}

/// Edgewise shared partners (outgoing two-path form): for every edge
/// `i→j`, the number of `k` with `i→k→j`. Index `s` counts edges with `s`
/// partners, `s` in `0..n-1`.
pub fn edgewise_shared_partners(y: &DirectedGraph) -> Vec<u64> {
    let mut out = vec![0; y.order() - 1];
    for (i, j) in y.edges() {
        out[and_count(y.out_row(i), y.in_row(j)) as usize] += 1;
    }
    out
}

/// Shortest-path lengths over ordered pairs `(i, j)`, `i != j`, with unit
/// edge lengths. Index `d - 1` counts pairs at distance `d` for `d` in
/// `1..n`; the last slot (index `n - 1`) counts unreachable pairs.
pub fn geodesic_distribution(y: &DirectedGraph) -> Vec<u64> {
    let n = y.order();
    let mut out = vec![0; n];
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        dist.fill(usize::MAX);
        dist[s] = 0;
        queue.clear();
        queue.push_back(s);
        let mut reached = 0;
        while let Some(u) = queue.pop_front() {
            for v in y.successors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    out[dist[v] - 1] += 1;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        out[n - 1] += (n - 1 - reached) as u64;
    }
    out
}

/// Classifies the triad on nodes `a, b, c` into an index of [`TRIAD_CLASSES`].
pub fn triad_class(y: &DirectedGraph, a: usize, b: usize, c: usize) -> usize {
    let nodes = [a, b, c];
    let e = |u: usize, v: usize| y.has_edge(nodes[u], nodes[v]);
    // dyads as (u, v, w) where w is the third node
    let pairs = [(0, 1, 2), (0, 2, 1), (1, 2, 0)];
    let (mut m, mut asym) = (0, 0);
    for &(u, v, _) in &pairs {
        match (e(u, v), e(v, u)) {
            (true, true) => m += 1,
            (true, false) | (false, true) => asym += 1,
            _ => {}
        }
    }
    let outd = |u: usize| (0..3).filter(|&v| v != u && e(u, v)).count();
    let ind = |u: usize| (0..3).filter(|&v| v != u && e(v, u)).count();
    match (m, asym) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 0) => 2,
        (0, 2) => {
            // shared node of the two asymmetric dyads
            let centre = (0..3).find(|&u| outd(u) + ind(u) == 2).expect("two dyads share a node");
            match (outd(centre), ind(centre)) {
                (2, 0) => 3,
                (0, 2) => 4,
                _ => 5,
            }
        }
        (1, 1) => {
            // the asymmetric edge either enters (D) or leaves (U) the mutual pair
            let &(u, v, w) = pairs
                .iter()
                .find(|&&(u, v, _)| e(u, v) && e(v, u))
                .expect("one mutual dyad");
            let into_pair = e(w, u) || e(w, v);
            if into_pair {
                6
            } else {
                7
            }
        }
        (0, 3) => {
            if (0..3).any(|u| outd(u) == 2) {
                8
            } else {
                9
            }
        }
        (2, 0) => 10,
        (1, 2) => {
            let &(_, _, w) = pairs
                .iter()
                .find(|&&(u, v, _)| e(u, v) && e(v, u))
                .expect("one mutual dyad");
            match (outd(w), ind(w)) {
                (2, 0) => 11,
                (0, 2) => 12,
                _ => 13,
            }
        }
        (2, 1) => 14,
        (3, 0) => 15,
        _ => unreachable!("three dyads per triad"),
    }
}

/// Counts of the 16 triad classes over all unordered node triples.
pub fn triad_census(y: &DirectedGraph) -> [u64; 16] {
    let n = y.order();
    let mut out = [0u64; 16];
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                out[triad_class(y, a, b, c)] += 1;
            }
        }
    }
    out
}
