//! Synthetic network time series.
//!
//! A base network is drawn from an ERGM by single-cell Metropolis updates.
//! Each later state is produced from its predecessor by choosing a fraction
//! `phi` of the off-diagonal cells without replacement and redrawing each
//! selected cell from the two-state transition matrix. After `burn_in`
//! discarded steps the retained states are labelled `1..=length`.
//!
//! Anomalies switch the transition matrix (type A) or the fraction (type B)
//! for every `t >= tau`, or reciprocate a fraction of asymmetric dyads once
//! at `t = tau` (type C).

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, GraphSeries};
use crate::rng::SimRng;
use crate::stats::TermSet;

pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Two-state cell transition probabilities; `m01` is P(0 → 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub m00: f64,
    pub m01: f64,
    pub m10: f64,
    pub m11: f64,
}

impl TransitionMatrix {
    pub fn new(m00: f64, m01: f64, m10: f64, m11: f64) -> Result<Self> {
        let m = Self { m00, m01, m10, m11 };
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix from the two switching probabilities.
    pub fn from_switching(p01: f64, p10: f64) -> Result<Self> {
        Self::new(1.0 - p01, p01, p10, 1.0 - p10)
    }

    /// ((0.9, 0.1), (0.4, 0.6)).
    pub fn in_control() -> Self {
        Self {
            m00: 0.9,
            m01: 0.1,
            m10: 0.4,
            m11: 0.6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.m00, self.m01, self.m10, self.m11];
        if all.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig(format!("transition probabilities must lie in [0,1]: {all:?}")));
        }
        if (self.m00 + self.m01 - 1.0).abs() > 1e-12 || (self.m10 + self.m11 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig("transition matrix rows must sum to 1".into()));
        }
        Ok(())
    }

    /// Probability that a selected cell currently at `from` becomes 1.
    #[inline]
    pub fn prob_one(&self, from: bool) -> f64 {
        if from {
            self.m11
        } else {
            self.m01
        }
    }

    /// Stationary `(pi0, pi1)`.
    pub fn stationary(&self) -> Result<(f64, f64)> {
        stationary_distribution(self)
    }
}

pub fn stationary_distribution(m: &TransitionMatrix) -> Result<(f64, f64)> {
    let s = m.m01 + m.m10;
    if s <= 0.0 {
        return Err(Error::NoUniqueStationary);
    }
    let pi1 = m.m01 / s;
    Ok((1.0 - pi1, pi1))
}

/// Generator parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_nodes: usize,
    pub phi: f64,
    pub m: TransitionMatrix,
    /// Coefficients for edges, triangles and asymmetric dyads.
    pub base_coeffs: Vec<f64>,
    pub base_sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_nodes: 100,
            phi: 0.01,
            m: TransitionMatrix::in_control(),
            base_coeffs: vec![logit(0.2), 0.0, 0.0],
            base_sweeps: 50,
            burn_in: 1000,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(Error::InvalidOrder(self.n_nodes));
        }
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return Err(Error::InvalidConfig(format!("phi must lie in (0,1], got {}", self.phi)));
        }
        self.m.validate()?;
        if self.base_coeffs.len() != TermSet::base_network().len() {
            return Err(Error::DimensionMismatch {
                expected: TermSet::base_network().len(),
                got: self.base_coeffs.len(),
            });
        }
        Ok(())
    }

    /// Expected long-run edge count `pi1 * n(n-1)`.
    pub fn expected_edges(&self) -> Result<f64> {
        let (_, pi1) = self.m.stationary()?;
        Ok(pi1 * (self.n_nodes * (self.n_nodes - 1)) as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum AnomalyKind {
    /// New transition matrix from `tau` on.
    A { m1: TransitionMatrix },
    /// New selection fraction from `tau` on.
    B { phi1: f64 },
    /// Reciprocate a fraction `zeta` of asymmetric dyads at `tau`.
    C { zeta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub kind: AnomalyKind,
    pub tau: i64,
}

impl AnomalySpec {
    pub fn new(kind: AnomalyKind, tau: i64) -> Result<Self> {
        let a = Self { kind, tau };
        a.validate()?;
        Ok(a)
    }

    /// Named anomaly cases: A.1–A.3, B.1–B.3, C.1–C.3 (plus C.2b, ζ = 0.02).
    /// Type A cases change the listed entries; the complementary entry of
    /// each touched row is set so rows stay stochastic.
    pub fn case(name: &str, tau: i64) -> Result<Self> {
        let m0 = TransitionMatrix::in_control();
        let kind = match name.trim().to_ascii_uppercase().as_str() {
            "A.1" => AnomalyKind::A {
                m1: TransitionMatrix::new(0.89, 0.11, m0.m10, m0.m11)?,
            },
            "A.2" => AnomalyKind::A {
                m1: TransitionMatrix::new(m0.m00, m0.m01, 0.6, 0.4)?,
            },
            "A.3" => AnomalyKind::A {
                m1: TransitionMatrix::new(0.5, 0.5, 0.5, 0.5)?,
            },
            "B.1" => AnomalyKind::B { phi1: 0.009 },
            "B.2" => AnomalyKind::B { phi1: 0.015 },
            "B.3" => AnomalyKind::B { phi1: 0.02 },
            "C.1" => AnomalyKind::C { zeta: 0.005 },
            "C.2" => AnomalyKind::C { zeta: 0.01 },
            "C.2B" => AnomalyKind::C { zeta: 0.02 },
            "C.3" => AnomalyKind::C { zeta: 0.05 },
            other => return Err(Error::InvalidAnomaly(format!("unknown case `{other}`"))),
        };
        Self::new(kind, tau)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau < 1 {
            return Err(Error::InvalidAnomaly(format!("tau must be >= 1, got {}", self.tau)));
        }
        match &self.kind {
            AnomalyKind::A { m1 } => m1
                .validate()
                .map_err(|e| Error::InvalidAnomaly(e.to_string())),
            AnomalyKind::B { phi1 } if !(*phi1 > 0.0 && *phi1 <= 1.0) => {
                Err(Error::InvalidAnomaly(format!("phi1 must lie in (0,1], got {phi1}")))
            }
            AnomalyKind::C { zeta } if !(0.0..=1.0).contains(zeta) => {
                Err(Error::InvalidAnomaly(format!("zeta must lie in [0,1], got {zeta}")))
            }
            _ => Ok(()),
        }
    }
}

/// Runs `sweeps` Metropolis sweeps targeting `exp(coeffs · s(y, prev))`.
/// Each sweep proposes a toggle of every off-diagonal cell once, in a fresh
/// random order.
pub fn metropolis_sweeps<R: Rng + ?Sized>(
    g: &mut DirectedGraph,
    terms: &TermSet,
    coeffs: &[f64],
    prev: Option<&DirectedGraph>,
    sweeps: usize,
    rng: &mut R,
) {
    let mut order: Vec<usize> = (0..g.dyad_cells()).collect();
    let mut delta = vec![0i64; terms.len()];
    for _ in 0..sweeps {
        order.shuffle(rng);
        for &k in &order {
            let (i, j) = g.cell_from_index(k);
            terms.change_into(g, prev, i, j, &mut delta);
            let score: f64 = delta.iter().zip(coeffs).map(|(&d, &c)| d as f64 * c).sum();
            let log_ratio = if g.has_edge(i, j) { -score } else { score };
            if log_ratio >= 0.0 || rng.gen::<f64>() < log_ratio.exp() {
                let on = !g.has_edge(i, j);
                g.put(i, j, on);
            }
        }
    }
}

/// Draws the base network from an ERGM on edges, triangles and asymmetric
/// dyads, starting from the empty graph.
pub fn sample_base_network<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Result<DirectedGraph> {
    cfg.validate()?;
    let mut g = DirectedGraph::new(cfg.n_nodes)?;
    metropolis_sweeps(
        &mut g,
        &TermSet::base_network(),
        &cfg.base_coeffs,
        None,
        cfg.base_sweeps,
        rng,
    );
    Ok(g)
}

/// One Markov step: redraw `round(phi * n(n-1))` distinct cells from `m`.
pub fn step_markov<R: Rng + ?Sized>(
    y_prev: &DirectedGraph,
    phi: f64,
    m: &TransitionMatrix,
    rng: &mut R,
) -> DirectedGraph {
    let mut g = y_prev.clone();
    step_markov_in_place(&mut g, phi, m, rng);
    g
}

pub(crate) fn step_markov_in_place<R: Rng + ?Sized>(
    g: &mut DirectedGraph,
    phi: f64,
    m: &TransitionMatrix,
    rng: &mut R,
) {
    let cells = g.dyad_cells();
    let count = round_half_up(phi * cells as f64).min(cells);
    if count == 0 {
        return;
    }
    for k in index::sample(rng, cells, count) {
        let (i, j) = g.cell_from_index(k);
        let p = m.prob_one(g.has_edge(i, j));
        let on = rng.gen::<f64>() < p;
        g.put(i, j, on);
    }
}

/// Adds the missing reverse edge to `round(zeta * |A|)` asymmetric dyads
/// chosen uniformly without replacement.
pub fn convert_asym_to_mutual<R: Rng + ?Sized>(
    y: &DirectedGraph,
    zeta: f64,
    rng: &mut R,
) -> DirectedGraph {
    let asym: Vec<(usize, usize)> = y.edges().filter(|&(i, j)| !y.has_edge(j, i)).collect();
    let count = round_half_up(zeta * asym.len() as f64).min(asym.len());
    let mut g = y.clone();
    if count == 0 {
        return g;
    }
    for k in index::sample(rng, asym.len(), count) {
        let (i, j) = asym[k];
        g.put(j, i, true);
    }
    g
}

/// Streaming generator of retained states `t = 1, 2, ...`.
#[derive(Clone, Debug)]
pub struct SeriesGenerator {
    cfg: GenConfig,
    anomaly: Option<AnomalySpec>,
    current: DirectedGraph,
    next_label: i64,
    rng: SimRng,
    // anomaly randomness is kept apart so in-control dynamics are unaffected
    event_rng: SimRng,
}

impl SeriesGenerator {
    /// Draws the base network and runs the burn-in.
    pub fn new(cfg: &GenConfig, anomaly: Option<AnomalySpec>, mut rng: SimRng) -> Result<Self> {
        cfg.validate()?;
        if let Some(a) = &anomaly {
            a.validate()?;
        }
        let event_rng = SimRng::seed_from_u64(rng.gen());
        let mut current = sample_base_network(cfg, &mut rng)?;
        for _ in 0..cfg.burn_in {
            step_markov_in_place(&mut current, cfg.phi, &cfg.m, &mut rng);
        }
        Ok(Self {
            cfg: cfg.clone(),
            anomaly,
            current,
            next_label: 1,
            rng,
            event_rng,
        })
    }

    /// Label of the state the next call to [`advance`](Self::advance) yields.
    pub fn next_label(&self) -> i64 {
        self.next_label
    }

    /// The most recently produced state (the last burn-in state initially).
    pub fn current(&self) -> &DirectedGraph {
        &self.current
    }

    /// Produces the next retained state and its label.
    pub fn advance(&mut self) -> (i64, &DirectedGraph) {
        let t = self.next_label;
        let (mut phi, mut m) = (self.cfg.phi, self.cfg.m);
        let mut convert = None;
        if let Some(a) = self.anomaly.as_ref().filter(|a| t >= a.tau) {
            match a.kind {
                AnomalyKind::A { m1 } => m = m1,
                AnomalyKind::B { phi1 } => phi = phi1,
                AnomalyKind::C { zeta } if t == a.tau => convert = Some(zeta),
                AnomalyKind::C { .. } => {}
            }
        }
        step_markov_in_place(&mut self.current, phi, &m, &mut self.rng);
        if let Some(zeta) = convert {
            self.current = convert_asym_to_mutual(&self.current, zeta, &mut self.event_rng);
        }
        self.next_label += 1;
        (t, &self.current)
    }
}

impl Iterator for SeriesGenerator {
    type Item = DirectedGraph;

    fn next(&mut self) -> Option<DirectedGraph> {
        Some(self.advance().1.clone())
    }
}

/// Generates `length` retained states labelled `1..=length`.
pub fn generate_series(
    cfg: &GenConfig,
    length: usize,
    anomaly: Option<AnomalySpec>,
    rng: SimRng,
) -> Result<GraphSeries> {
    if length == 0 {
        return Err(Error::InvalidConfig("series length must be >= 1".into()));
    }
    let gen = SeriesGenerator::new(cfg, anomaly, rng)?;
    GraphSeries::new(1, gen.take(length).collect())
}
