//! Maximum pseudolikelihood for the conditional model of `Y_t` given
//! `Y_{t-1}`.
//!
//! Every ordered dyad of every pooled transition contributes one Bernoulli
//! row: response `y_ij`, design row `δ_ij(Y_t, Y_{t-1})`. Change statistics
//! are small integers, so rows are aggregated into `(design, #zeros, #ones)`
//! buckets. The pseudolikelihood over buckets is identical to the one over
//! raw rows, and a transition's buckets can be reused by every window that
//! contains it.

use nalgebra::{DMatrix, DVector};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::stats::TermSet;

pub(crate) const MAX_TERMS: usize = 5;
const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 20;
// |η| beyond this on an occupied bucket means fitted probabilities are
// saturating, i.e. the responses are (quasi-)separated.
const SATURATED_ETA: f64 = 23.0;

type Key = [i32; MAX_TERMS];

/// Aggregated pseudolikelihood design for one or more transitions.
#[derive(Clone, Debug, Default)]
pub struct DesignRows {
    p: usize,
    buckets: FxHashMap<Key, [u64; 2]>,
    dyads: u64,
}

impl DesignRows {
    pub fn empty(p: usize) -> Self {
        Self {
            p,
            buckets: FxHashMap::default(),
            dyads: 0,
        }
    }

    /// Buckets every ordered dyad of `y` given `prev`.
    pub fn from_transition(
        terms: &TermSet,
        y: &DirectedGraph,
        prev: Option<&DirectedGraph>,
    ) -> Result<Self> {
        if let Some(p) = prev {
            if p.order() != y.order() {
                return Err(Error::OrderMismatch(y.order(), p.order()));
            }
        } else if terms.is_temporal() {
            return Err(Error::MissingPredecessor);
        }
        let p = terms.len();
        let mut rows = Self::empty(p);
        let mut delta = [0i64; MAX_TERMS];
        let n = y.order();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                terms.change_into(y, prev, i, j, &mut delta[..p]);
                let mut key = [0i32; MAX_TERMS];
                for (k, d) in key.iter_mut().zip(&delta[..p]) {
                    *k = *d as i32;
                }
                rows.buckets.entry(key).or_default()[usize::from(y.has_edge(i, j))] += 1;
            }
        }
        rows.dyads = (n * (n - 1)) as u64;
        Ok(rows)
    }

    pub fn merge(&mut self, other: &DesignRows) {
        debug_assert_eq!(self.p, other.p);
        for (k, c) in &other.buckets {
            let e = self.buckets.entry(*k).or_default();
            e[0] += c[0];
            e[1] += c[1];
        }
        self.dyads += other.dyads;
    }

    pub fn dimension(&self) -> usize {
        self.p
    }

    pub fn pooled_dyads(&self) -> u64 {
        self.dyads
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    /// `(#zeros, #ones)` over all pooled dyads.
    pub fn response_totals(&self) -> (u64, u64) {
        self.buckets
            .values()
            .fold((0, 0), |(a, b), c| (a + c[0], b + c[1]))
    }

    fn flat(&self) -> Vec<([f64; MAX_TERMS], f64, f64)> {
        let mut v: Vec<_> = self
            .buckets
            .iter()
            .map(|(k, c)| {
                let mut x = [0.0; MAX_TERMS];
                for (xi, ki) in x.iter_mut().zip(k) {
                    *xi = f64::from(*ki);
                }
                (x, c[0] as f64, c[1] as f64)
            })
            .collect();
        // hash order is not stable across runs; sort for reproducible sums
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite keys"));
        v
    }

    /// Log pseudolikelihood, gradient and Hessian at `theta`.
    pub fn evaluate(&self, theta: &[f64]) -> Evaluation {
        evaluate_flat(&self.flat(), self.p, theta)
    }
}

/// Value, gradient and Hessian of the log pseudolikelihood.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub log_pl: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn evaluate_flat(rows: &[([f64; MAX_TERMS], f64, f64)], p: usize, theta: &[f64]) -> Evaluation {
    let mut ll = 0.0;
    let mut g = DVector::zeros(p);
    let mut h = DMatrix::zeros(p, p);
    for (x, n0, n1) in rows {
        let x = &x[..p];
        let eta: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
        let total = n0 + n1;
        ll += n1 * eta - total * softplus(eta);
        let prob = logistic(eta);
        let resid = n1 - total * prob;
        let w = total * prob * (1.0 - prob);
        for a in 0..p {
            g[a] += x[a] * resid;
            for b in 0..=a {
                h[(a, b)] -= w * x[a] * x[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            h[(b, a)] = h[(a, b)];
        }
    }
    Evaluation {
        log_pl: ll,
        gradient: g,
        hessian: h,
    }
}

/// Outcome of a pseudolikelihood fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TergmFit {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub pooled_dyads: u64,
    pub log_pl: f64,
    pub gradient_norm: f64,
}

fn non_convergence(iterations: usize, reason: impl Into<String>, log: Vec<String>) -> Error {
    Error::NonConvergence {
        iterations,
        reason: reason.into(),
        log,
    }
}

/// Newton–Raphson with step halving on aggregated rows.
pub fn fit_rows(rows: &DesignRows) -> Result<TergmFit> {
    let p = rows.p;
    let (zeros, ones) = rows.response_totals();
    if zeros == 0 || ones == 0 {
        return Err(non_convergence(
            0,
            "all responses identical; the pseudolikelihood has no finite maximiser",
            Vec::new(),
        ));
    }
    let flat = rows.flat();
    let mut theta = vec![0.0; p];
    let mut log = Vec::new();
    let mut cur = evaluate_flat(&flat, p, &theta);
    for iter in 0..=MAX_ITER {
        let gnorm = cur.gradient.amax();
        log.push(format!("iter {iter}: log_pl={:.12e} |grad|={gnorm:.3e}", cur.log_pl));
        if !gnorm.is_finite() || !cur.log_pl.is_finite() {
            return Err(non_convergence(iter, "non-finite objective", log));
        }
        if gnorm < GRAD_TOL {
            let saturated = flat.iter().any(|(x, _, _)| {
                let eta: f64 = x[..p].iter().zip(&theta).map(|(a, b)| a * b).sum();
                eta.abs() > SATURATED_ETA
            });
            if saturated {
                return Err(non_convergence(iter, "fitted probabilities saturate (separation)", log));
            }
            return Ok(TergmFit {
                theta,
                iterations: iter,
                converged: true,
                pooled_dyads: rows.dyads,
                log_pl: cur.log_pl,
                gradient_norm: gnorm,
            });
        }
        if iter == MAX_ITER {
            break;
        }
        let info = -&cur.hessian;
        let Some(chol) = info.cholesky() else {
            return Err(non_convergence(iter, "information matrix is singular", log));
        };
        let step = chol.solve(&cur.gradient);
        if step.iter().any(|s| !s.is_finite()) {
            return Err(non_convergence(iter, "non-finite Newton step", log));
        }
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + scale * s).collect();
            let ev = evaluate_flat(&flat, p, &trial);
            // ties are accepted: near the optimum the objective is flat to rounding
            if ev.log_pl.is_finite() && ev.log_pl >= cur.log_pl - 1e-12 * cur.log_pl.abs() {
                accepted = Some((trial, ev));
                break;
            }
            scale *= 0.5;
        }
        let Some((t, ev)) = accepted else {
            return Err(non_convergence(iter, "step halving failed to improve the objective", log));
        };
        theta = t;
        cur = ev;
    }
    Err(non_convergence(MAX_ITER, "iteration limit reached", log))
}

/// Pooled MPLE over the `z - v` transitions inside a window of `z` graphs.
pub fn mple_fit(window: &[DirectedGraph], terms: &TermSet, v: usize) -> Result<TergmFit> {
    super::check_lag(v)?;
    if window.len() < v + 1 {
        return Err(Error::WindowTooShort {
            got: window.len(),
            need: v + 1,
        });
    }
    let mut rows = DesignRows::empty(terms.len());
    for pair in window.windows(2) {
        rows.merge(&DesignRows::from_transition(terms, &pair[1], Some(&pair[0]))?);
    }
    fit_rows(&rows)
}
