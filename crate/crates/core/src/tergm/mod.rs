//! Window estimation of the monitored characteristic `ĉ_t`, either TERGM
//! coefficients by pooled pseudolikelihood or averaged statistics, plus
//! conditional simulation and goodness-of-fit.

pub mod gof;
pub mod mple;
pub mod sim;
pub mod window;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gof::{gof_summary, GofBin, GofFamily, GofReport};
pub use mple::{fit_rows, mple_fit, DesignRows, Evaluation, TergmFit};
pub use sim::simulate_from_fit;
pub use window::{estimate_series, sbar_estimate, EstimateStream, PipelineConfig};

/// Which characteristic is estimated per window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Pseudolikelihood TERGM coefficients.
    #[serde(alias = "theta")]
    ThetaHat,
    /// Window average of the network statistics.
    #[serde(alias = "sbar", alias = "stats")]
    SBar,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::ThetaHat => "theta_hat",
            EstimatorKind::SBar => "s_bar",
        })
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theta" | "theta_hat" | "thetahat" | "mple" => Ok(EstimatorKind::ThetaHat),
            "sbar" | "s_bar" | "stats" => Ok(EstimatorKind::SBar),
            other => Err(Error::InvalidConfig(format!("unknown estimator `{other}`"))),
        }
    }
}

/// One window estimate, labelled by the last graph of its window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharEstimate {
    pub values: Vec<f64>,
    pub kind: EstimatorKind,
    pub t: i64,
    pub z: usize,
    pub v: usize,
}

impl CharEstimate {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Only first-order temporal dependence is modelled.
pub(crate) fn check_lag(v: usize) -> Result<()> {
    if v != 1 {
        return Err(Error::InvalidConfig(format!("only lag v = 1 is supported, got {v}")));
    }
    Ok(())
}
