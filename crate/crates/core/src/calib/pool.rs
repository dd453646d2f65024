use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_se, TAG_ARL};
use crate::charts::{ChartConfig, ChartState, ChartTarget};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::simgen::{AnomalySpec, GenConfig, SeriesGenerator};
use crate::tergm::{EstimateStream, PipelineConfig};

const MIN_CHUNK: usize = 16;
const MAX_DOUBLINGS: usize = 20;
const MAX_BISECTIONS: usize = 30;

/// First-signal index of one monitored stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLength {
    pub length: usize,
    pub censored: bool,
}

/// Run length of a chart over an estimate stream: 1-based index of the
/// first signal, or `horizon` with `censored` set.
pub fn run_length<'a, I>(
    chart: &ChartConfig,
    target: &ChartTarget,
    estimates: I,
    ucl: f64,
    horizon: usize,
) -> Result<RunLength>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut state = chart.start(target.dim())?;
    for (i, c) in estimates.into_iter().take(horizon).enumerate() {
        if state.step(c, target, ucl, false)?.signal {
            return Ok(RunLength {
                length: i + 1,
                censored: false,
            });
        }
    }
    Ok(RunLength {
        length: horizon,
        censored: true,
    })
}

struct Trace {
    state: ChartState,
    running_max: Vec<f64>,
}

/// One replication: a lazily extended series, its estimate stream and the
/// statistic traces of every chart evaluated on it.
struct Replication {
    gen: SeriesGenerator,
    stream: EstimateStream,
    labels: Vec<i64>,
    estimates: Vec<Vec<f64>>,
    traces: Vec<Trace>,
}

impl Replication {
    fn extend_to(&mut self, len: usize) -> Result<()> {
        while self.estimates.len() < len {
            let (t, g) = self.gen.advance();
            if let Some(e) = self.stream.push(t, g)? {
                self.labels.push(e.t);
                self.estimates.push(e.values);
            }
        }
        Ok(())
    }

    fn trace_to(&mut self, slot: usize, len: usize, target: &ChartTarget) -> Result<()> {
        self.extend_to(len)?;
        let tr = &mut self.traces[slot];
        while tr.running_max.len() < len {
            let i = tr.running_max.len();
            // no reset: a run ends at its first signal, so the trace does not depend on the UCL
            let s = tr.state.step(&self.estimates[i], target, f64::INFINITY, false)?.statistic;
            let m = tr.running_max.last().map_or(s, |&m| m.max(s));
            tr.running_max.push(m);
        }
        Ok(())
    }

    /// Index of the first statistic `>= ucl` among the first `cap` steps.
    fn first_signal(&mut self, slot: usize, ucl: f64, cap: usize, target: &ChartTarget) -> Result<Option<usize>> {
        self.trace_to(slot, cap, target)?;
        let i = self.traces[slot].running_max[..cap].partition_point(|&m| m < ucl);
        Ok((i < cap).then_some(i))
    }

    fn cached(&self, slot: usize) -> usize {
        self.traces[slot].running_max.len()
    }
}

/// Replicated in-control (or Phase-II) streams shared by every chart and
/// UCL evaluated on them, giving common random numbers across a
/// calibration.
pub struct ReplicationPool {
    target: ChartTarget,
    charts: Vec<ChartConfig>,
    reps: Vec<Replication>,
    horizon: usize,
}

/// Monte-Carlo ARL at one UCL.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArlEstimate {
    pub ucl: f64,
    pub arl: f64,
    pub se: f64,
    pub censored: usize,
    pub replications: usize,
    /// False when `arl` is only a lower bound from truncated runs.
    pub exact: bool,
}

impl ArlEstimate {
    /// Share of censored runs is at least 20%.
    pub fn unreliable(&self) -> bool {
        self.censored * 5 >= self.replications
    }
}

impl ReplicationPool {
    /// Builds `replications` generators seeded from `(seed, index)`.
    pub fn new(
        gen: &GenConfig,
        pipeline: &PipelineConfig,
        anomaly: Option<&AnomalySpec>,
        target: ChartTarget,
        replications: usize,
        horizon: usize,
        seed: u64,
    ) -> Result<Self> {
        pipeline.validate()?;
        if replications < 2 {
            return Err(Error::InvalidConfig("replications must be >= 2".into()));
        }
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be >= 1".into()));
        }
        if target.dim() != pipeline.terms.len() {
            return Err(Error::DimensionMismatch {
                expected: pipeline.terms.len(),
                got: target.dim(),
            });
        }
        let reps = (0..replications)
            .into_par_iter()
            .map(|r| {
                Ok(Replication {
                    gen: SeriesGenerator::new(gen, anomaly.cloned(), stream_rng(seed, r as u64))?,
                    stream: EstimateStream::new(pipeline.clone())?,
                    labels: Vec::new(),
                    estimates: Vec::new(),
                    traces: Vec::new(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            target,
            charts: Vec::new(),
            reps,
            horizon,
        })
    }

    pub fn replications(&self) -> usize {
        self.reps.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn target(&self) -> &ChartTarget {
        &self.target
    }

    fn slot(&mut self, chart: &ChartConfig) -> Result<usize> {
        if let Some(i) = self.charts.iter().position(|c| c == chart) {
            return Ok(i);
        }
        let state = chart.start(self.target.dim())?;
        for rep in &mut self.reps {
            rep.traces.push(Trace {
                state: state.clone(),
                running_max: Vec::new(),
            });
        }
        self.charts.push(*chart);
        Ok(self.charts.len() - 1)
    }

    /// Run lengths at `ucl`, extending streams as needed up to the horizon.
    pub fn run_lengths(&mut self, chart: &ChartConfig, ucl: f64) -> Result<Vec<RunLength>> {
        let slot = self.slot(chart)?;
        let (target, horizon) = (&self.target, self.horizon);
        self.reps
            .par_iter_mut()
            .map(|rep| {
                let mut cap = rep.cached(slot).clamp(MIN_CHUNK.min(horizon), horizon);
                loop {
                    if let Some(i) = rep.first_signal(slot, ucl, cap, target)? {
                        return Ok(RunLength {
                            length: i + 1,
                            censored: false,
                        });
                    }
                    if cap == horizon {
                        return Ok(RunLength {
                            length: horizon,
                            censored: true,
                        });
                    }
                    cap = (cap * 2).min(horizon);
                }
            })
            .collect()
    }

    /// ARL at `ucl`. With `stop_above`, extension stops as soon as the
    /// truncated mean (a lower bound) reaches that value.
    pub fn arl(&mut self, chart: &ChartConfig, ucl: f64, stop_above: Option<f64>) -> Result<ArlEstimate> {
        let Some(bound) = stop_above else {
            let rl = self.run_lengths(chart, ucl)?;
            return Ok(summarize(ucl, &rl, true));
        };
        let slot = self.slot(chart)?;
        let (target, horizon) = (&self.target, self.horizon);
        let mut caps: Vec<usize> = self
            .reps
            .iter()
            .map(|r| r.cached(slot).clamp(MIN_CHUNK.min(horizon), horizon))
            .collect();
        loop {
            let found: Vec<Option<usize>> = self
                .reps
                .par_iter_mut()
                .zip(&caps)
                .map(|(rep, &cap)| rep.first_signal(slot, ucl, cap, target))
                .collect::<Result<_>>()?;
            let rl: Vec<RunLength> = found
                .iter()
                .zip(&caps)
                .map(|(f, &cap)| match f {
                    Some(i) => RunLength {
                        length: i + 1,
                        censored: false,
                    },
                    None => RunLength {
                        length: cap,
                        censored: true,
                    },
                })
                .collect();
            let open = rl.iter().zip(&caps).any(|(r, &c)| r.censored && c < horizon);
            let est = summarize(ucl, &rl, !open);
            if !open || est.arl >= bound {
                return Ok(est);
            }
            for (r, cap) in rl.iter().zip(caps.iter_mut()) {
                if r.censored {
                    *cap = (*cap * 2).min(horizon);
                }
            }
        }
    }

    /// Bisection on the UCL so that the pooled ARL meets `arl0` within
    /// `tolerance * arl0`.
    pub fn calibrate(&mut self, chart: &ChartConfig, arl0: f64, tolerance: f64) -> Result<CalibResult> {
        if !(arl0 >= 1.0) {
            return Err(Error::InvalidConfig(format!("ARL0 must be >= 1, got {arl0}")));
        }
        if !(tolerance > 0.0 && tolerance <= 0.2) {
            return Err(Error::InvalidConfig(format!("tolerance must lie in (0, 0.2], got {tolerance}")));
        }
        chart.validate()?;
        let n = self.replications();
        let result = |est: ArlEstimate, bracket: (f64, f64), evaluations: usize| CalibResult {
            chart: *chart,
            arl0,
            ucl: est.ucl,
            arl_hat: est.arl,
            arl_se: est.se,
            replications: n,
            bracket,
            evaluations,
            censored: est.censored,
        };
        if arl0 == 1.0 {
            let est = self.arl(chart, 0.0, None)?;
            return Ok(result(est, (0.0, 0.0), 1));
        }

        let mut evaluations = 0;
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut doublings = 0;
        loop {
            evaluations += 1;
            let est = self.arl(chart, hi, Some(arl0))?;
            if est.arl >= arl0 {
                break;
            }
            if doublings == MAX_DOUBLINGS {
                return Err(Error::BracketFailure {
                    doublings,
                    hi,
                    arl: est.arl,
                });
            }
            lo = hi;
            hi *= 2.0;
            doublings += 1;
        }

        let accept = tolerance * arl0;
        let mut last = None;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            evaluations += 1;
            let est = self.arl(chart, mid, Some(arl0 + accept))?;
            if est.exact && (est.arl - arl0).abs() <= accept {
                return Ok(result(est, (lo, hi), evaluations));
            }
            last = Some((mid, (lo, hi)));
            if est.arl < arl0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (mid, bracket) = last.expect("at least one bisection step");
        evaluations += 1;
        let est = self.arl(chart, mid, None)?;
        Ok(result(est, bracket, evaluations))
    }

    /// Label of the first signal (if any) and the last label examined, per
    /// replication; monitoring runs for `horizon` steps from label `tau`.
    pub(crate) fn first_signal_labels(
        &mut self,
        chart: &ChartConfig,
        ucl: f64,
        tau: i64,
    ) -> Result<Vec<(Option<i64>, i64)>> {
        let slot = self.slot(chart)?;
        let (target, horizon) = (&self.target, self.horizon);
        self.reps
            .par_iter_mut()
            .map(|rep| {
                rep.extend_to(1)?;
                let pre = (tau - rep.labels[0]).max(0) as usize;
                let limit = pre + horizon;
                let mut cap = rep.cached(slot).clamp((pre + 1).max(MIN_CHUNK).min(limit), limit);
                loop {
                    if let Some(i) = rep.first_signal(slot, ucl, cap, target)? {
                        return Ok((Some(rep.labels[i]), rep.labels[cap - 1]));
                    }
                    if cap == limit {
                        return Ok((None, rep.labels[cap - 1]));
                    }
                    cap = (cap * 2).min(limit);
                }
            })
            .collect()
    }
}

fn summarize(ucl: f64, rl: &[RunLength], exact: bool) -> ArlEstimate {
    let xs: Vec<f64> = rl.iter().map(|r| r.length as f64).collect();
    let (arl, se) = mean_se(&xs);
    ArlEstimate {
        ucl,
        arl,
        se,
        censored: rl.iter().filter(|r| r.censored).count(),
        replications: rl.len(),
        exact,
    }
}

/// Outcome of a UCL calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibResult {
    pub chart: ChartConfig,
    pub arl0: f64,
    pub ucl: f64,
    pub arl_hat: f64,
    pub arl_se: f64,
    pub replications: usize,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    pub censored: usize,
}

/// In-control ARL at a fixed UCL over fresh replications.
pub fn estimate_arl(
    chart: &ChartConfig,
    gen: &GenConfig,
    pipeline: &PipelineConfig,
    target: &ChartTarget,
    ucl: f64,
    replications: usize,
    horizon: usize,
    seed: u64,
) -> Result<ArlEstimate> {
    let key = derive_seed(seed, TAG_ARL);
    let mut pool = ReplicationPool::new(gen, pipeline, None, target.clone(), replications, horizon, key)?;
    pool.arl(chart, ucl, None)
}

/// Calibrates one chart; the horizon defaults to `20 * arl0`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_ucl(
    chart: &ChartConfig,
    gen: &GenConfig,
    pipeline: &PipelineConfig,
    target: &ChartTarget,
    arl0: f64,
    replications: usize,
    tolerance: f64,
    seed: u64,
) -> Result<CalibResult> {
    let horizon = (20.0 * arl0).ceil().max(1.0) as usize;
    let key = derive_seed(seed, TAG_ARL);
    let mut pool = ReplicationPool::new(gen, pipeline, None, target.clone(), replications, horizon, key)?;
    pool.calibrate(chart, arl0, tolerance)
}

/// UCL grid: one row per ARL₀, one column
/// per chart parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UclTable {
    pub parameter: String,
    pub columns: Vec<f64>,
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl UclTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("arl0/{}", self.parameter);
        for c in &self.columns {
            s.push_str(&format!(",{c}"));
        }
        s.push('\n');
        for (arl0, ucls) in &self.rows {
            s.push_str(&arl0.to_string());
            for u in ucls {
                s.push_str(&format!(",{u:.2}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn get(&self, arl0: f64, parameter: f64) -> Option<f64> {
        let c = self.columns.iter().position(|&p| p == parameter)?;
        let row = self.rows.iter().find(|(a, _)| *a == arl0)?;
        row.1.get(c).copied()
    }
}

/// Calibrates every chart of a grid at every ARL₀ on one shared pool.
pub fn calibrate_grid(
    pool: &mut ReplicationPool,
    charts: &[ChartConfig],
    arl0s: &[f64],
    tolerance: f64,
) -> Result<(UclTable, Vec<CalibResult>)> {
    let parameter = match charts.first() {
        Some(ChartConfig::Mewma { .. }) => "lambda",
        Some(ChartConfig::Mcusum { .. }) => "k",
        None => return Err(Error::InvalidConfig("empty chart grid".into())),
    };
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for &a in arl0s {
        let mut ucls = Vec::new();
        for c in charts {
            let r = pool.calibrate(c, a, tolerance)?;
            ucls.push(r.ucl);
            results.push(r);
        }
        rows.push((a, ucls));
    }
    Ok((
        UclTable {
            parameter: parameter.into(),
            columns: charts.iter().map(ChartConfig::parameter).collect(),
            rows,
        },
        results,
    ))
}
