//! Phase-I targets, Monte-Carlo run-length experiments, UCL calibration,
//! CED evaluation and ACF diagnostics.

mod ced;
mod pool;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charts::ChartTarget;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::simgen::{generate_series, GenConfig};
use crate::tergm::{estimate_series, CharEstimate, PipelineConfig};

pub use ced::{estimate_ced, estimate_ced_grid, CedResult, ParameterCed};
pub use pool::{
    calibrate_grid, calibrate_ucl, estimate_arl, run_length, ArlEstimate, CalibResult, ReplicationPool,
    RunLength, UclTable,
};

pub const TAG_PHASE1: u64 = 0x5048_4153_4531;
pub const TAG_ARL: u64 = 0x4152_4c;
pub const TAG_CED: u64 = 0x4345_44;

/// Sample mean and covariance of Phase-I estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseISummary {
    pub c_bar: Vec<f64>,
    /// Row-major `p × p` unbiased sample covariance.
    pub s: Vec<Vec<f64>>,
    pub n_samples: usize,
}

impl PhaseISummary {
    pub fn dim(&self) -> usize {
        self.c_bar.len()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let p = self.dim();
        DMatrix::from_fn(p, p, |i, j| self.s[i][j])
    }

    pub fn target(&self) -> Result<ChartTarget> {
        ChartTarget::new(self.c_bar.clone(), self.covariance())
    }
}

pub fn phase1_summary(estimates: &[CharEstimate]) -> Result<PhaseISummary> {
    let n = estimates.len();
    if n < 2 {
        return Err(Error::WindowTooShort { got: n, need: 2 });
    }
    let (p, kind) = (estimates[0].dim(), estimates[0].kind);
    if let Some(e) = estimates.iter().find(|e| e.dim() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: e.dim(),
        });
    }
    if estimates.iter().any(|e| e.kind != kind) {
        return Err(Error::InvalidConfig("Phase-I estimates mix estimator kinds".into()));
    }
    let mut c_bar = vec![0.0; p];
    for e in estimates {
        for (m, x) in c_bar.iter_mut().zip(&e.values) {
            *m += x;
        }
    }
    c_bar.iter_mut().for_each(|m| *m /= n as f64);
    let mut s = vec![vec![0.0; p]; p];
    for e in estimates {
        for a in 0..p {
            let da = e.values[a] - c_bar[a];
            for b in 0..=a {
                s[a][b] += da * (e.values[b] - c_bar[b]);
            }
        }
    }
    for a in 0..p {
        for b in 0..=a {
            s[a][b] /= (n - 1) as f64;
            s[b][a] = s[a][b];
        }
    }
    let summary = PhaseISummary {
        c_bar,
        s,
        n_samples: n,
    };
    if n <= p {
        return Err(Error::SingularCovariance(format!(
            "{n} Phase-I samples cannot give a nonsingular {p}x{p} covariance; use more Phase-I data or a ridge"
        )));
    }
    summary.target()?;
    Ok(summary)
}

/// How the Phase-I target is simulated: `series` independent in-control
/// series of `length` retained states each, estimates pooled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseIDesign {
    pub series: usize,
    pub length: usize,
}

impl Default for PhaseIDesign {
    fn default() -> Self {
        Self {
            series: 200,
            length: 100,
        }
    }
}

/// Estimates from simulated in-control Phase-I series.
pub fn phase1_estimates(
    gen: &GenConfig,
    pipeline: &PipelineConfig,
    design: PhaseIDesign,
    seed: u64,
) -> Result<Vec<CharEstimate>> {
    pipeline.validate()?;
    if design.series == 0 || design.length < pipeline.warmup() {
        return Err(Error::InvalidConfig(format!(
            "Phase-I design needs >= 1 series of length >= {}",
            pipeline.warmup()
        )));
    }
    let key = derive_seed(seed, TAG_PHASE1);
    let per_series: Vec<Vec<CharEstimate>> = (0..design.series)
        .into_par_iter()
        .map(|r| {
            let s = generate_series(gen, design.length, None, stream_rng(key, r as u64))?;
            estimate_series(&s, pipeline)
        })
        .collect::<Result<_>>()?;
    Ok(per_series.into_iter().flatten().collect())
}

/// Phase-I summary and chart target for a generator and pipeline.
pub fn phase1_target(
    gen: &GenConfig,
    pipeline: &PipelineConfig,
    design: PhaseIDesign,
    seed: u64,
) -> Result<(PhaseISummary, ChartTarget)> {
    let summary = phase1_summary(&phase1_estimates(gen, pipeline, design, seed)?)?;
    let target = summary.target()?;
    Ok((summary, target))
}

/// Sample autocorrelations `ρ(0..=max_lag)`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag {
        return Err(Error::WindowTooShort {
            got: n,
            need: max_lag + 1,
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = dev.iter().map(|d| d * d).sum();
    if !(c0 > 0.0) {
        return Err(Error::UndefinedAcf);
    }
    Ok((0..=max_lag)
        .map(|h| dev[..n - h].iter().zip(&dev[h..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// Mean and standard error of a sample.
pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
