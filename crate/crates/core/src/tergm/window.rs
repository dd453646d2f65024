//! Moving-window estimation.
//!
//! An estimate at label `t` uses the trailing window ending at `t`:
//! `ŝ_t` averages the statistics of the `z` transitions into
//! `t-z+1..=t`, while `θ̂_t` pools the `z - v` transitions between the `z`
//! graphs `t-z+1..=t`. Both estimators first report at
//! `start + z + v - 1`, so their streams are aligned.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::mple::{fit_rows, DesignRows};
use super::{check_lag, CharEstimate, EstimatorKind};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, GraphSeries};
use crate::stats::{StatVector, TermSet};

/// Terms, window, lag, estimator and stride of an estimation pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub terms: TermSet,
    pub window: usize,
    pub lag: usize,
    pub kind: EstimatorKind,
    pub stride: usize,
}

impl PipelineConfig {
    pub fn new(kind: EstimatorKind, window: usize) -> Self {
        Self {
            terms: TermSet::monitoring(),
            window,
            lag: 1,
            kind,
            stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_terms(mut self, terms: TermSet) -> Self {
        self.terms = terms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_lag(self.lag)?;
        let need = match self.kind {
            EstimatorKind::ThetaHat => self.lag + 1,
            EstimatorKind::SBar => 1,
        };
        if self.window < need {
            return Err(Error::WindowTooShort {
                got: self.window,
                need,
            });
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Graphs consumed before the first estimate.
    pub fn warmup(&self) -> usize {
        self.window + self.lag
    }

    /// Number of estimates produced from a series of `len` graphs.
    pub fn estimate_count(&self, len: usize) -> usize {
        if len < self.warmup() {
            0
        } else {
            (len - self.warmup()) / self.stride + 1
        }
    }
}

/// `ŝ` over the last `z` transitions of `graphs` (needs `z + v` graphs).
pub fn sbar_estimate(graphs: &[DirectedGraph], terms: &TermSet, z: usize, v: usize) -> Result<StatVector> {
    check_lag(v)?;
    if z == 0 || graphs.len() < z + v {
        return Err(Error::WindowTooShort {
            got: graphs.len(),
            need: z + v,
        });
    }
    let tail = &graphs[graphs.len() - z - v..];
    let mut sum = vec![0i64; terms.len()];
    for pair in tail.windows(2) {
        for (s, c) in sum.iter_mut().zip(terms.counts(&pair[1], Some(&pair[0]))?) {
            *s += c;
        }
    }
    Ok(StatVector {
        values: sum.iter().map(|&s| s as f64 / z as f64).collect(),
    })
}

enum Transition {
    Rows(DesignRows),
    Counts(Vec<i64>),
}

/// Incremental estimator fed one graph at a time.
///
/// Per-transition work (design buckets or statistic counts) is computed
/// once and shared by every window containing that transition.
pub struct EstimateStream {
    cfg: PipelineConfig,
    prev: Option<DirectedGraph>,
    first_label: Option<i64>,
    transitions: VecDeque<Transition>,
}

impl EstimateStream {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            prev: None,
            first_label: None,
            transitions: VecDeque::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    fn keep(&self) -> usize {
        match self.cfg.kind {
            EstimatorKind::SBar => self.cfg.window,
            EstimatorKind::ThetaHat => self.cfg.window - self.cfg.lag,
        }
    }

    /// Feeds the graph labelled `t`; labels must be consecutive.
    pub fn push(&mut self, t: i64, g: &DirectedGraph) -> Result<Option<CharEstimate>> {
        let first = *self.first_label.get_or_insert(t);
        if let Some(prev) = &self.prev {
            if prev.order() != g.order() {
                return Err(Error::OrderMismatch(prev.order(), g.order()));
            }
            let tr = match self.cfg.kind {
                EstimatorKind::ThetaHat => {
                    Transition::Rows(DesignRows::from_transition(&self.cfg.terms, g, Some(prev))?)
                }
                EstimatorKind::SBar => Transition::Counts(self.cfg.terms.counts(g, Some(prev))?),
            };
            self.transitions.push_back(tr);
            if self.transitions.len() > self.keep() {
                self.transitions.pop_front();
            }
        }
        match &mut self.prev {
            Some(p) => p.clone_from(g),
            None => self.prev = Some(g.clone()),
        }

        let first_out = first + self.cfg.warmup() as i64 - 1;
        if t < first_out || (t - first_out) % self.cfg.stride as i64 != 0 {
            return Ok(None);
        }
        let values = match self.cfg.kind {
            EstimatorKind::ThetaHat => {
                let mut rows = DesignRows::empty(self.cfg.terms.len());
                for tr in &self.transitions {
                    if let Transition::Rows(r) = tr {
                        rows.merge(r);
                    }
                }
                fit_rows(&rows)?.theta
            }
            EstimatorKind::SBar => {
                let mut sum = vec![0i64; self.cfg.terms.len()];
                for tr in &self.transitions {
                    if let Transition::Counts(c) = tr {
                        for (s, x) in sum.iter_mut().zip(c) {
                            *s += x;
                        }
                    }
                }
                let z = self.cfg.window as f64;
                sum.iter().map(|&s| s as f64 / z).collect()
            }
        };
        Ok(Some(CharEstimate {
            values,
            kind: self.cfg.kind,
            t,
            z: self.cfg.window,
            v: self.cfg.lag,
        }))
    }
}

/// Estimates along a whole series.
pub fn estimate_series(series: &GraphSeries, cfg: &PipelineConfig) -> Result<Vec<CharEstimate>> {
    cfg.validate()?;
    if series.len() < cfg.warmup() {
        return Err(Error::WindowTooShort {
            got: series.len(),
            need: cfg.warmup(),
        });
    }
    let mut stream = EstimateStream::new(cfg.clone())?;
    let mut out = Vec::with_capacity(cfg.estimate_count(series.len()));
    for (t, g) in series.iter() {
        if let Some(e) = stream.push(t, g)? {
            out.push(e);
        }
    }
    Ok(out)
}
