use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::stats::TermSet;

/// Draws `Y_t` from the fitted conditional model given `y_prev` by Gibbs
/// sampling. The chain starts at `y_prev`; each sweep visits every cell in a
/// fresh random order and sets it to 1 with probability `logistic(θ·δ_ij)`.
pub fn simulate_from_fit<R: Rng + ?Sized>(
    theta: &[f64],
    terms: &TermSet,
    y_prev: &DirectedGraph,
    sweeps: usize,
    rng: &mut R,
) -> Result<DirectedGraph> {
    if theta.len() != terms.len() {
        return Err(Error::DimensionMismatch {
            expected: terms.len(),
            got: theta.len(),
        });
    }
    if sweeps == 0 {
        return Err(Error::InvalidConfig("sweeps must be >= 1".into()));
    }
    let prev = terms.is_temporal().then_some(y_prev);
    let mut g = y_prev.clone();
    let mut order: Vec<usize> = (0..g.dyad_cells()).collect();
    let mut delta = vec![0i64; terms.len()];
    for _ in 0..sweeps {
        order.shuffle(rng);
        for &k in &order {
            let (i, j) = g.cell_from_index(k);
            terms.change_into(&g, prev, i, j, &mut delta);
            let eta: f64 = delta.iter().zip(theta).map(|(&d, &c)| d as f64 * c).sum();
            let on = rng.gen::<f64>() * (1.0 + (-eta).exp()) < 1.0;
            g.put(i, j, on);
        }
    }
    Ok(g)
}
