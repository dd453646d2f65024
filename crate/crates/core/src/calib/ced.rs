use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pool::ReplicationPool;
use super::{mean_se, TAG_CED};
use crate::charts::{ChartConfig, ChartTarget};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::simgen::{AnomalySpec, GenConfig};
use crate::tergm::PipelineConfig;

/// CED of one chart setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterCed {
    pub chart: ChartConfig,
    pub ucl: f64,
    pub ced: f64,
    pub se: f64,
    pub valid_runs: usize,
    pub discarded_false_alarm_runs: usize,
    pub censored_runs: usize,
}

/// Conditional expected delay over a grid of chart settings; the headline
/// fields refer to the setting with the smallest CED.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CedResult {
    pub ced: f64,
    pub se: f64,
    pub valid_runs: usize,
    pub discarded_false_alarm_runs: usize,
    pub censored_runs: usize,
    pub replications: usize,
    pub tau: i64,
    pub best: ChartConfig,
    /// Parameter (λ or k, as text) → CED.
    pub per_parameter: BTreeMap<String, f64>,
    pub settings: Vec<ParameterCed>,
}

impl CedResult {
    pub fn setting(&self, parameter: f64) -> Option<&ParameterCed> {
        self.settings.iter().find(|s| s.chart.parameter() == parameter)
    }
}

fn evaluate(pool: &mut ReplicationPool, chart: &ChartConfig, ucl: f64, tau: i64) -> Result<ParameterCed> {
    let runs = pool.first_signal_labels(chart, ucl, tau)?;
    let mut delays = Vec::new();
    let (mut discarded, mut censored) = (0, 0);
    for (signal, last) in runs {
        match signal {
            Some(t) if t < tau => discarded += 1,
            Some(t) => delays.push((t - tau + 1) as f64),
            None => {
                censored += 1;
                delays.push((last - tau + 1) as f64);
            }
        }
    }
    if delays.is_empty() {
        return Err(Error::NoValidRuns(discarded));
    }
    let (ced, se) = mean_se(&delays);
    Ok(ParameterCed {
        chart: *chart,
        ucl,
        ced,
        se,
        valid_runs: delays.len(),
        discarded_false_alarm_runs: discarded,
        censored_runs: censored,
    })
}

/// CED for each `(chart, ucl)` on a shared pool of Phase-II series with
/// change point `tau`. Runs signalling before `tau` are discarded; a signal
/// at `tau` has delay 1.
pub fn estimate_ced_grid(pool: &mut ReplicationPool, grid: &[(ChartConfig, f64)], tau: i64) -> Result<CedResult> {
    if tau < 2 {
        return Err(Error::InvalidAnomaly(format!("tau must be >= 2, got {tau}")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty chart grid".into()));
    }
    let settings: Vec<ParameterCed> = grid
        .iter()
        .map(|(c, u)| evaluate(pool, c, *u, tau))
        .collect::<Result<_>>()?;
    let best = settings
        .iter()
        .min_by(|a, b| a.ced.total_cmp(&b.ced))
        .expect("non-empty grid")
        .clone();
    Ok(CedResult {
        ced: best.ced,
        se: best.se,
        valid_runs: best.valid_runs,
        discarded_false_alarm_runs: best.discarded_false_alarm_runs,
        censored_runs: best.censored_runs,
        replications: pool.replications(),
        tau,
        best: best.chart,
        per_parameter: settings
            .iter()
            .map(|s| (s.chart.parameter().to_string(), s.ced))
            .collect(),
        settings,
    })
}

/// CED of one chart over fresh Phase-II replications. `anomaly = None` is
/// the control experiment; `horizon` bounds monitoring after the change.
#[allow(clippy::too_many_arguments)]
pub fn estimate_ced(
    chart: &ChartConfig,
    gen: &GenConfig,
    pipeline: &PipelineConfig,
    target: &ChartTarget,
    anomaly: Option<&AnomalySpec>,
    tau: i64,
    ucl: f64,
    replications: usize,
    horizon: usize,
    seed: u64,
) -> Result<CedResult> {
    if let Some(a) = anomaly {
        if a.tau != tau {
            return Err(Error::InvalidAnomaly(format!(
                "anomaly tau {} differs from evaluation tau {tau}",
                a.tau
            )));
        }
    }
    let key = derive_seed(seed, TAG_CED);
    let mut pool = ReplicationPool::new(gen, pipeline, anomaly, target.clone(), replications, horizon, key)?;
    estimate_ced_grid(&mut pool, &[(*chart, ucl)], tau)
}
