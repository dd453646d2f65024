//! Multivariate control charts on the estimated characteristic `ĉ_t`:
//! Hotelling/Mahalanobis distance, Crosier's MCUSUM and the MEWMA.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_CONDITION: f64 = 1e12;

/// In-control mean `c0` and covariance `sigma` with a cached inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartTarget {
    c0: DVector<f64>,
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
}

impl ChartTarget {
    pub fn new(c0: Vec<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let p = c0.len();
        if p == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if sigma.nrows() != p || sigma.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: sigma.nrows(),
            });
        }
        let scale = sigma.amax().max(f64::MIN_POSITIVE);
        if (&sigma - sigma.transpose()).amax() > 1e-10 * scale {
            return Err(Error::SingularCovariance("covariance matrix is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(sigma.clone()).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return Err(Error::SingularCovariance(format!(
                "covariance is singular or ill-conditioned (eigenvalues {lo:.3e}..{hi:.3e}); \
                 add a ridge of 1e-8*diag(S) or use more Phase-I data"
            )));
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularCovariance("Cholesky factorization failed".into()))?;
        let sigma_inv = chol.inverse();
        Ok(Self {
            c0: DVector::from_vec(c0),
            sigma,
            sigma_inv,
        })
    }

    /// Adds `eps * diag(sigma)` to the diagonal before construction.
    pub fn with_ridge(c0: Vec<f64>, mut sigma: DMatrix<f64>, eps: f64) -> Result<Self> {
        for i in 0..sigma.nrows().min(sigma.ncols()) {
            sigma[(i, i)] *= 1.0 + eps;
        }
        Self::new(c0, sigma)
    }

    pub fn dim(&self) -> usize {
        self.c0.len()
    }

    pub fn c0(&self) -> &DVector<f64> {
        &self.c0
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    fn check(&self, c_hat: &[f64]) -> Result<()> {
        if c_hat.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: c_hat.len(),
            });
        }
        Ok(())
    }

    fn deviation(&self, c_hat: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim(), c_hat.iter().zip(self.c0.iter()).map(|(a, b)| a - b))
    }

    /// `x' Σ⁻¹ x`, clamped at zero against rounding.
    pub fn quad(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.sigma_inv * x)).max(0.0)
    }
}

/// Squared Mahalanobis distance of `c_hat` from the target mean.
pub fn mahalanobis(c_hat: &[f64], target: &ChartTarget) -> Result<f64> {
    target.check(c_hat)?;
    Ok(target.quad(&target.deviation(c_hat)))
}

/// Result of one chart update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub statistic: f64,
    pub signal: bool,
    pub t: usize,
}

/// Crosier's multivariate CUSUM.
#[derive(Clone, Debug, PartialEq)]
pub struct McusumState {
    r: DVector<f64>,
    k: f64,
    t: usize,
}

impl McusumState {
    pub fn new(p: usize, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidConfig(format!("MCUSUM reference value k must be > 0, got {k}")));
        }
        Ok(Self {
            r: DVector::zeros(p),
            k,
            t: 0,
        })
    }

    pub fn r(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn reset(&mut self) {
        self.r.fill(0.0);
    }

    /// Signals when `√(r' Σ⁻¹ r) ≥ ucl`.
    pub fn step(
        &mut self,
        c_hat: &[f64],
        target: &ChartTarget,
        ucl: f64,
        reset_on_signal: bool,
    ) -> Result<StepOutcome> {
        target.check(c_hat)?;
        if self.r.len() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got: self.r.len(),
            });
        }
        self.t += 1;
        let s = &self.r + target.deviation(c_hat);
        let c = target.quad(&s).sqrt();
        if c <= self.k {
            self.r.fill(0.0);
        } else {
            self.r = s * (1.0 - self.k / c);
        }
        let statistic = target.quad(&self.r).sqrt();
        let signal = statistic >= ucl;
        if signal && reset_on_signal {
            self.reset();
        }
        Ok(StepOutcome {
            statistic,
            signal,
            t: self.t,
        })
    }
}

/// Multivariate EWMA with the exact finite-`t` covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct MewmaState {
    l: DVector<f64>,
    lambda: f64,
    t: usize,
    t_since_reset: usize,
}

impl MewmaState {
    pub fn new(p: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidConfig(format!("MEWMA lambda must lie in (0, 1], got {lambda}")));
        }
        Ok(Self {
            l: DVector::zeros(p),
            lambda,
            t: 0,
            t_since_reset: 0,
        })
    }

    pub fn l(&self) -> &DVector<f64> {
        &self.l
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn reset(&mut self) {
        self.l.fill(0.0);
        self.t_since_reset = 0;
    }

    /// Scale of `Σ_{l_t}` relative to `Σ` after `t` updates.
    pub fn variance_factor(lambda: f64, t: usize) -> f64 {
        let decay = (1.0 - lambda).powi(2 * t.min(i32::MAX as usize / 2) as i32);
        lambda / (2.0 - lambda) * (1.0 - decay)
    }

    /// Signals when `l' Σ_{l_t}⁻¹ l ≥ ucl`.
    pub fn step(
        &mut self,
        c_hat: &[f64],
        target: &ChartTarget,
        ucl: f64,
        reset_on_signal: bool,
    ) -> Result<StepOutcome> {
        target.check(c_hat)?;
        if self.l.len() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got: self.l.len(),
            });
        }
        self.t += 1;
        self.t_since_reset += 1;
        let dev = target.deviation(c_hat);
        self.l = dev * self.lambda + &self.l * (1.0 - self.lambda);
        let statistic = target.quad(&self.l) / Self::variance_factor(self.lambda, self.t_since_reset);
        let signal = statistic >= ucl;
        if signal && reset_on_signal {
            self.reset();
        }
        Ok(StepOutcome {
            statistic,
            signal,
            t: self.t,
        })
    }
}

/// Chart family with its tuning parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChartConfig {
    Mewma { lambda: f64 },
    Mcusum { k: f64 },
}

impl ChartConfig {
    pub fn validate(&self) -> Result<()> {
        self.start(1).map(|_| ())
    }

    /// The chart parameter (λ or k).
    pub fn parameter(&self) -> f64 {
        match *self {
            ChartConfig::Mewma { lambda } => lambda,
            ChartConfig::Mcusum { k } => k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChartConfig::Mewma { .. } => "mewma",
            ChartConfig::Mcusum { .. } => "mcusum",
        }
    }

    pub fn with_parameter(&self, value: f64) -> Self {
        match self {
            ChartConfig::Mewma { .. } => ChartConfig::Mewma { lambda: value },
            ChartConfig::Mcusum { .. } => ChartConfig::Mcusum { k: value },
        }
    }

    pub fn start(&self, p: usize) -> Result<ChartState> {
        Ok(match *self {
            ChartConfig::Mewma { lambda } => ChartState::Mewma(MewmaState::new(p, lambda)?),
            ChartConfig::Mcusum { k } => ChartState::Mcusum(McusumState::new(p, k)?),
        })
    }
}

impl fmt::Display for ChartConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartConfig::Mewma { lambda } => write!(f, "MEWMA(lambda={lambda})"),
            ChartConfig::Mcusum { k } => write!(f, "MCUSUM(k={k})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChartState {
    Mewma(MewmaState),
    Mcusum(McusumState),
}

impl ChartState {
    pub fn step(
        &mut self,
        c_hat: &[f64],
        target: &ChartTarget,
        ucl: f64,
        reset_on_signal: bool,
    ) -> Result<StepOutcome> {
        match self {
            ChartState::Mewma(s) => s.step(c_hat, target, ucl, reset_on_signal),
            ChartState::Mcusum(s) => s.step(c_hat, target, ucl, reset_on_signal),
        }
    }

    pub fn reset(&mut self) {
        match self {
            ChartState::Mewma(s) => s.reset(),
            ChartState::Mcusum(s) => s.reset(),
        }
    }
}

/// One row of a chart trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: i64,
    pub statistic: f64,
    pub ucl: f64,
    pub signal: bool,
}

/// Trace as CSV with header `t,statistic,ucl,signal`.
pub fn trace_csv(points: &[TracePoint]) -> String {
    let mut s = String::from("t,statistic,ucl,signal\n");
    for p in points {
        s.push_str(&format!("{},{},{},{}\n", p.t, p.statistic, p.ucl, u8::from(p.signal)));
    }
    s
}

/// Runs a chart over labelled estimates.
pub fn run_chart<'a, I>(
    cfg: &ChartConfig,
    target: &ChartTarget,
    estimates: I,
    ucl: f64,
    reset_on_signal: bool,
) -> Result<Vec<TracePoint>>
where
    I: IntoIterator<Item = (i64, &'a [f64])>,
{
    let mut state = cfg.start(target.dim())?;
    estimates
        .into_iter()
        .map(|(t, c)| {
            let o = state.step(c, target, ucl, reset_on_signal)?;
            Ok(TracePoint {
                t,
                statistic: o.statistic,
                ucl,
                signal: o.signal,
            })
        })
        .collect()
}
