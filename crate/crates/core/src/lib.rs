//! Surveillance of directed temporal networks.
//!
//! Graph series are summarised window by window, either by pseudolikelihood
//! estimates of a temporal ERGM or by averaged network statistics, and the
//! resulting stream is monitored with multivariate CUSUM / EWMA charts whose
//! control limits are calibrated by Monte-Carlo simulation.

pub mod calib;
pub mod charts;
pub mod error;
pub mod graph;
pub mod rng;
pub mod simgen;
pub mod stats;
pub mod tergm;

pub use calib::{
    acf, calibrate_ucl, estimate_arl, estimate_ced, phase1_summary, phase1_target, CalibResult, CedResult,
    PhaseIDesign, PhaseISummary, ReplicationPool,
};
pub use charts::{mahalanobis, ChartConfig, ChartState, ChartTarget, McusumState, MewmaState, StepOutcome};
pub use error::{Error, Result};
pub use graph::{DirectedGraph, GraphSeries};
pub use rng::{derive_seed, stream_rng, SimRng};
pub use simgen::{AnomalyKind, AnomalySpec, GenConfig, SeriesGenerator, TransitionMatrix};
pub use stats::{StatVector, Term, TermSet};
pub use tergm::{estimate_series, mple_fit, CharEstimate, EstimatorKind, PipelineConfig, TergmFit};
