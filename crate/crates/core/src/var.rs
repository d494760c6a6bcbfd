//! Quantile engine: extreme-value VaR, alpha-root multi-period scaling and the
//! Gaussian square-root-of-time baseline.
//!
//! All VaR figures are positive loss magnitudes in percent.

use std::fmt;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garch::Forecast;
use crate::series::ReturnSeries;
use crate::special::norm_ppf;
use crate::tail::{order_statistic, Tail, TailEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarMethod {
    EvtUnconditional,
    EvtConditional,
    GaussianConditional,
}

impl fmt::Display for VarMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarMethod::EvtUnconditional => "evt_unconditional",
            VarMethod::EvtConditional => "evt_conditional",
            VarMethod::GaussianConditional => "gaussian_conditional",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarEstimate {
    pub p: f64,
    pub confidence: f64,
    pub horizon_n: usize,
    pub var_pct: f64,
    pub method: VarMethod,
    /// Multiplier applied for the horizon (1 for a single period).
    pub scale_q: f64,
    /// Tail index behind `scale_q`; `None` for the Gaussian rule.
    pub alpha_used: Option<f64>,
}

fn check_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("probability {p} must lie in (0, 1)")));
    }
    Ok(())
}

fn check_lower(est: &TailEstimate) -> Result<()> {
    est.validate()?;
    if est.tail != Tail::Lower {
        return Err(Error::InvalidTailEstimate("VaR needs a lower-tail estimate".into()));
    }
    Ok(())
}

/// Lower-tail quantile magnitude `|r_{m,n}| * (m / (n p))^gamma`.
/// `quiet` suppresses the boundary warning where the caller anchored there on purpose.
fn evt_magnitude(est: &TailEstimate, n: usize, p: f64, quiet: bool) -> Result<f64> {
    check_probability(p)?;
    check_lower(est)?;
    let boundary = est.m as f64 / n as f64;
    if p > boundary {
        return Err(Error::InteriorQuantile { p, boundary });
    }
    if p == boundary && !quiet {
        warn!("p = m/n = {p}: quantile equals the threshold itself");
    }
    Ok(est.threshold.abs() * (boundary / p).powf(est.gamma))
}

/// Single-period unconditional VaR from a lower-tail estimate on returns.
pub fn evt_var_unconditional(est: &TailEstimate, n: usize, p: f64) -> Result<VarEstimate> {
    unconditional_single(est, n, p, false)
}

fn unconditional_single(est: &TailEstimate, n: usize, p: f64, quiet: bool) -> Result<VarEstimate> {
    Ok(VarEstimate {
        p,
        confidence: 1.0 - p,
        horizon_n: 1,
        var_pct: evt_magnitude(est, n, p, quiet)?,
        method: VarMethod::EvtUnconditional,
        scale_q: 1.0,
        alpha_used: Some(est.alpha),
    })
}

/// Multiplies a single-period VaR by `q = horizon_n^(1/alpha)`.
pub fn scale_var(v: &VarEstimate, horizon_n: usize, alpha: f64) -> Result<VarEstimate> {
    if v.horizon_n != 1 {
        return Err(Error::InvalidInput(format!(
            "only single-period estimates can be scaled (horizon {})",
            v.horizon_n
        )));
    }
    if horizon_n < 1 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must be positive")));
    }
    let q = alpha_root_multiplier(horizon_n, alpha);
    Ok(VarEstimate { horizon_n, var_pct: v.var_pct * q, scale_q: q, alpha_used: Some(alpha), ..*v })
}

pub fn alpha_root_multiplier(horizon_n: usize, alpha: f64) -> f64 {
    (horizon_n as f64).powf(1.0 / alpha)
}

pub fn sqrt_time_multiplier(horizon_n: usize) -> f64 {
    (horizon_n as f64).sqrt()
}

/// Conditional VaR: `-(mu_{t+1} + sigma_{t+1} * z_p)` with `z_p` the negative
/// lower-tail quantile of the filtered residuals, then alpha-root scaled.
pub fn evt_var_conditional(
    forecast: &Forecast,
    z_est: &TailEstimate,
    n: usize,
    p: f64,
    horizon_n: usize,
) -> Result<VarEstimate> {
    conditional_single(forecast, z_est, n, p, horizon_n, false)
}

fn conditional_single(
    forecast: &Forecast,
    z_est: &TailEstimate,
    n: usize,
    p: f64,
    horizon_n: usize,
    quiet: bool,
) -> Result<VarEstimate> {
    let z_p = -evt_magnitude(z_est, n, p, quiet)?;
    let single = VarEstimate {
        p,
        confidence: 1.0 - p,
        horizon_n: 1,
        var_pct: loss_from_return(forecast.mu_next + forecast.sigma_next * z_p),
        method: VarMethod::EvtConditional,
        scale_q: 1.0,
        alpha_used: Some(z_est.alpha),
    };
    scale_var(&single, horizon_n, z_est.alpha)
}

fn loss_from_return(r: f64) -> f64 {
    if r >= 0.0 {
        warn!("forecast mean dominates the tail quantile (return quantile {r}); VaR reported as 0");
        0.0
    } else {
        -r
    }
}

/// Gaussian conditional VaR `-(mu + sigma * Phi^{-1}(p))`, scaled by `sqrt(horizon_n)`.
pub fn gaussian_var_conditional(forecast: &Forecast, p: f64, horizon_n: usize) -> Result<VarEstimate> {
    check_probability(p)?;
    if horizon_n < 1 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let single = loss_from_return(forecast.mu_next + forecast.sigma_next * norm_ppf(p));
    let q = sqrt_time_multiplier(horizon_n);
    Ok(VarEstimate {
        p,
        confidence: 1.0 - p,
        horizon_n,
        var_pct: single * q,
        method: VarMethod::GaussianConditional,
        scale_q: q,
        alpha_used: None,
    })
}

/// Moves the threshold of `est` outward to `ceil(p n)` when `p` would otherwise
/// sit inside it, keeping the tail exponent. At the new anchor `p = m/n` holds
/// within rounding, so the quantile is the anchoring order statistic scaled by
/// at most one observation's worth of extrapolation.
pub fn anchor_for_probability(series: &ReturnSeries, est: &TailEstimate, p: f64) -> Result<TailEstimate> {
    check_probability(p)?;
    let n = series.len();
    if p * n as f64 <= est.m as f64 {
        return Ok(*est);
    }
    let m = (p * n as f64).ceil() as usize;
    debug!("p = {p} lies inside the threshold (m = {}); re-anchoring at m = {m}", est.m);
    let threshold = order_statistic(series, est.tail, m)?;
    let mut out = *est;
    out.m = m;
    out.threshold = threshold;
    out.implied_scale = (m as f64 / n as f64) * threshold.abs().powf(est.alpha);
    out.validate()?;
    Ok(out)
}

/// Unconditional EVT grid: for each `p` the estimate is anchored (see
/// [`anchor_for_probability`]), evaluated once and scaled to every horizon.
/// Rows are ordered by probability, then horizon.
pub fn unconditional_grid(
    series: &ReturnSeries,
    est: &TailEstimate,
    probabilities: &[f64],
    horizons: &[usize],
) -> Result<Vec<VarEstimate>> {
    let mut rows = Vec::with_capacity(probabilities.len() * horizons.len());
    for &p in probabilities {
        let anchored = anchor_for_probability(series, est, p)?;
        let single = unconditional_single(&anchored, series.len(), p, anchored.m != est.m)?;
        for &h in horizons {
            rows.push(scale_var(&single, h, anchored.alpha)?);
        }
    }
    Ok(rows)
}

/// Conditional EVT grid on the filtered residuals `z` with tail estimate `z_est`.
pub fn conditional_grid(
    forecast: &Forecast,
    z: &ReturnSeries,
    z_est: &TailEstimate,
    probabilities: &[f64],
    horizons: &[usize],
) -> Result<Vec<VarEstimate>> {
    let mut rows = Vec::with_capacity(probabilities.len() * horizons.len());
    for &p in probabilities {
        let anchored = anchor_for_probability(z, z_est, p)?;
        for &h in horizons {
            rows.push(conditional_single(forecast, &anchored, z.len(), p, h, anchored.m != z_est.m)?);
        }
    }
    Ok(rows)
}

pub fn gaussian_grid(forecast: &Forecast, probabilities: &[f64], horizons: &[usize]) -> Result<Vec<VarEstimate>> {
    let mut rows = Vec::with_capacity(probabilities.len() * horizons.len());
    for &p in probabilities {
        for &h in horizons {
            rows.push(gaussian_var_conditional(forecast, p, h)?);
        }
    }
    Ok(rows)
}

/// One confidence level of a table row: the single-period figure followed by
/// the scaled multi-period figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarLevel {
    pub confidence: f64,
    pub p: f64,
    pub single_period: Option<f64>,
    pub multi_period: Vec<HorizonValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonValue {
    pub horizon: usize,
    pub var_pct: f64,
}

/// Grid regrouped the way the published VaR tables lay it out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarTable {
    pub method: VarMethod,
    pub alpha_used: Option<f64>,
    pub levels: Vec<VarLevel>,
}

impl VarTable {
    pub fn from_rows(rows: &[VarEstimate]) -> Option<Self> {
        let first = rows.first()?;
        let mut levels: Vec<VarLevel> = Vec::new();
        for r in rows {
            if levels.last().is_none_or(|l| l.p != r.p) {
                levels.push(VarLevel {
                    confidence: r.confidence,
                    p: r.p,
                    single_period: None,
                    multi_period: Vec::new(),
                });
            }
            let level = levels.last_mut().expect("pushed above");
            if r.horizon_n == 1 {
                level.single_period = Some(r.var_pct);
            } else {
                level.multi_period.push(HorizonValue { horizon: r.horizon_n, var_pct: r.var_pct });
            }
        }
        Some(VarTable { method: first.method, alpha_used: first.alpha_used, levels })
    }
}

/// Rows of a `(p, horizon)` grid for one method.
pub fn write_csv<W: std::io::Write>(rows: &[VarEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "p", "horizon", "var_pct", "scale_q", "alpha_used"])?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.p.to_string(),
            r.horizon_n.to_string(),
            r.var_pct.to_string(),
            r.scale_q.to_string(),
            r.alpha_used.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
