use nalgebra::{DMatrix, DVector};
use netwatch::simgen::metropolis_sweeps;
use netwatch::stats::{mutual_dyads, triangles};
use netwatch::tergm::simulate_from_fit;
use netwatch::{mple_fit, stream_rng, DirectedGraph, Term, TermSet};
use rand::Rng;

fn random_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> DirectedGraph {
    let mut g = DirectedGraph::new(n).unwrap();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen::<f64>() < p {
                g.set_edge(i, j, true).unwrap();
            }
        }
    }
    g
}

fn cells(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}

fn graph_from_mask(n: usize, mask: u64) -> DirectedGraph {
    let mut g = DirectedGraph::new(n).unwrap();
    for (b, (i, j)) in cells(n).into_iter().enumerate() {
        if mask >> b & 1 == 1 {
            g.set_edge(i, j, true).unwrap();
        }
    }
    g
}

/// Counts by explicit enumeration over node triples and pairs.
fn brute_counts(y: &DirectedGraph, prev: &DirectedGraph, terms: &[Term]) -> Vec<i64> {
    let n = y.order();
    let e = |i: usize, j: usize| y.has_edge(i, j);
    let mut transitive = 0;
    let mut cyclic = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                if e(i, j) && e(j, k) && e(i, k) {
                    transitive += 1;
                }
                if e(i, j) && e(j, k) && e(k, i) {
                    cyclic += 1;
                }
            }
        }
    }
    let (mut mutual, mut asym, mut edges, mut same) = (0, 0, 0, 0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            edges += i64::from(e(i, j));
            same += i64::from(e(i, j) == prev.has_edge(i, j));
            if i < j {
                match (e(i, j), e(j, i)) {
                    (true, true) => mutual += 1,
                    (true, false) | (false, true) => asym += 1,
                    _ => {}
                }
            }
        }
    }
    terms
        .iter()
        .map(|t| match t {
            Term::Edges => edges,
            Term::Triangles => transitive + cyclic / 3,
            Term::AsymmetricDyads => asym,
            Term::MutualDyads => mutual,
            Term::Stability => same,
        })
        .collect()
}

fn all_terms() -> TermSet {
    TermSet::new(vec![
        Term::Edges,
        Term::Triangles,
        Term::AsymmetricDyads,
        Term::MutualDyads,
        Term::Stability,
    ])
    .unwrap()
}

#[test]
fn statistics_match_brute_force() {
    let terms = all_terms();
    let mut rng = stream_rng(11, 0);
    for case in 0..50 {
        let n = 3 + case % 8;
        let p = 0.1 + 0.8 * rng.gen::<f64>();
        let y = random_graph(n, p, &mut rng);
        let prev = random_graph(n, p, &mut rng);
        assert_eq!(
            terms.counts(&y, Some(&prev)).unwrap(),
            brute_counts(&y, &prev, terms.terms()),
            "case {case}"
        );
        assert_eq!(mutual_dyads(&y), brute_counts(&y, &prev, &[Term::MutualDyads])[0]);
        assert_eq!(triangles(&y), brute_counts(&y, &prev, &[Term::Triangles])[0]);
    }
}

#[test]
fn change_statistics_match_toggle_difference() {
    let terms = all_terms();
    let mut rng = stream_rng(12, 0);
    for case in 0..50 {
        let n = 3 + case % 8;
        let y = random_graph(n, 0.1 + 0.8 * rng.gen::<f64>(), &mut rng);
        let prev = random_graph(n, 0.5, &mut rng);
        for (i, j) in cells(n) {
            let on = y.clone().with_edge(i, j, true).unwrap();
            let off = y.clone().with_edge(i, j, false).unwrap();
            let expected: Vec<i64> = brute_counts(&on, &prev, terms.terms())
                .iter()
                .zip(brute_counts(&off, &prev, terms.terms()))
                .map(|(a, b)| a - b)
                .collect();
            assert_eq!(terms.change_counts(&y, Some(&prev), i, j).unwrap(), expected);
        }
    }
}

#[test]
fn edges_only_mple_is_logit_of_pooled_density() {
    let terms = TermSet::new(vec![Term::Edges]).unwrap();
    let mut rng = stream_rng(13, 0);
    let window: Vec<DirectedGraph> = (0..7).map(|_| random_graph(12, 0.25, &mut rng)).collect();
    let fit = mple_fit(&window, &terms, 1).unwrap();
    let on: usize = window[1..].iter().map(DirectedGraph::edge_count).sum();
    let total = 6 * 12 * 11;
    let p = on as f64 / total as f64;
    assert!((fit.theta[0] - (p / (1.0 - p)).ln()).abs() < 1e-9);
}

/// Conditional MLE of `y` given `prev` by enumerating all graphs on 4 nodes.
fn exact_conditional_mle(y: &DirectedGraph, prev: &DirectedGraph, terms: &TermSet) -> Vec<f64> {
    let n = y.order();
    let cells = n * (n - 1);
    let stats: Vec<DVector<f64>> = (0..1u64 << cells)
        .map(|m| {
            let g = graph_from_mask(n, m);
            DVector::from_iterator(terms.len(), terms.counts(&g, Some(prev)).unwrap().into_iter().map(|c| c as f64))
        })
        .collect();
    let obs = DVector::from_iterator(terms.len(), terms.counts(y, Some(prev)).unwrap().into_iter().map(|c| c as f64));
    let mut theta = DVector::zeros(terms.len());
    for _ in 0..100 {
        let logw: Vec<f64> = stats.iter().map(|s| s.dot(&theta)).collect();
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = w.iter().sum();
        let mean = stats.iter().zip(&w).fold(DVector::zeros(terms.len()), |acc, (s, &wi)| acc + s * wi) / z;
        let cov = stats.iter().zip(&w).fold(DMatrix::zeros(terms.len(), terms.len()), |acc, (s, &wi)| {
            let d = s - &mean;
            acc + &d * d.transpose() * wi
        }) / z;
        let step = cov.lu().solve(&(&obs - &mean)).unwrap();
        theta += &step;
        if step.norm() < 1e-13 {
            break;
        }
    }
    theta.iter().copied().collect()
}

#[test]
fn dyad_independent_mple_equals_exact_mle() {
    let terms = TermSet::new(vec![Term::Edges, Term::Stability]).unwrap();
    let prev = graph_from_mask(4, 0b1010_0110_0101);
    let y = graph_from_mask(4, 0b1000_0111_0011);
    let exact = exact_conditional_mle(&y, &prev, &terms);
    let fit = mple_fit(&[prev, y], &terms, 1).unwrap();
    for (a, b) in fit.theta.iter().zip(&exact) {
        assert!((a - b).abs() < 1e-6, "mple {:?} vs exact {:?}", fit.theta, exact);
    }
}

fn exact_distribution(n: usize, terms: &TermSet, theta: &[f64], prev: Option<&DirectedGraph>) -> Vec<f64> {
    let cells = n * (n - 1);
    let w: Vec<f64> = (0..1u64 << cells)
        .map(|m| {
            let g = graph_from_mask(n, m);
            let s = terms.counts(&g, prev).unwrap();
            s.iter().zip(theta).map(|(&c, &t)| c as f64 * t).sum::<f64>().exp()
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

fn mask_of(g: &DirectedGraph) -> usize {
    cells(g.order())
        .into_iter()
        .enumerate()
        .filter(|(_, (i, j))| g.has_edge(*i, *j))
        .map(|(b, _)| 1 << b)
        .sum()
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

#[test]
fn metropolis_matches_exact_ergm_on_three_nodes() {
    let terms = TermSet::base_network();
    let theta = [-0.4, 0.6, -0.3];
    let exact = exact_distribution(3, &terms, &theta, None);
    let mut rng = stream_rng(14, 0);
    let mut g = DirectedGraph::new(3).unwrap();
    metropolis_sweeps(&mut g, &terms, &theta, None, 100, &mut rng);
    let draws = 200_000;
    let mut freq = vec![0.0; exact.len()];
    for _ in 0..draws {
        metropolis_sweeps(&mut g, &terms, &theta, None, 1, &mut rng);
        freq[mask_of(&g)] += 1.0 / draws as f64;
    }
    let tv = total_variation(&freq, &exact);
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn gibbs_simulation_matches_exact_conditional() {
    let terms = TermSet::monitoring();
    let theta = [-0.8, 0.3, 0.2, 0.7];
    let prev = graph_from_mask(3, 0b01_1010);
    let exact = exact_distribution(3, &terms, &theta, Some(&prev));
    let mut rng = stream_rng(15, 0);
    let draws = 100_000;
    let mut freq = vec![0.0; exact.len()];
    for _ in 0..draws {
        let g = simulate_from_fit(&theta, &terms, &prev, 5, &mut rng).unwrap();
        freq[mask_of(&g)] += 1.0 / draws as f64;
    }
    let tv = total_variation(&freq, &exact);
    assert!(tv < 0.02, "TV {tv}");
}
