//! Semi-parametric tail estimation on one side of a return distribution.
//!
//! The Hill estimator over the `m` most extreme observations `r_1, ..., r_m`
//! (sorted by decreasing magnitude) is
//!
//! ```text
//! gamma = 1/(m-1) * sum_{i=1}^{m-1} [ ln|r_i| - ln|r_m| ]
//! ```
//!
//! with the threshold sitting at the m-th observation itself. `gamma = 1/alpha`
//! where `alpha` is the tail index. Every estimate carries both scales.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{sample_variance, ReturnSeries};
use crate::special::norm_ppf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    #[default]
    Lower,
    Upper,
}

impl Tail {
    fn qualifies(self, v: f64) -> bool {
        match self {
            Tail::Lower => v < 0.0,
            Tail::Upper => v > 0.0,
        }
    }
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tail::Lower => "lower",
            Tail::Upper => "upper",
        })
    }
}

impl std::str::FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Tail::Lower),
            "upper" => Ok(Tail::Upper),
            other => Err(Error::InvalidInput(format!("unknown tail `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TailMethod {
    Fixed,
    Phillips,
    #[default]
    Huisman,
}

impl fmt::Display for TailMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailMethod::Fixed => "fixed",
            TailMethod::Phillips => "phillips",
            TailMethod::Huisman => "huisman",
        })
    }
}

impl std::str::FromStr for TailMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(TailMethod::Fixed),
            "phillips" => Ok(TailMethod::Phillips),
            "huisman" => Ok(TailMethod::Huisman),
            other => Err(Error::InvalidInput(format!("unknown tail method `{other}`"))),
        }
    }
}

/// A tail-index estimate. `gamma` is on the exponent scale (1/alpha), `alpha`
/// on the tail-index scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub gamma: f64,
    pub alpha: f64,
    /// Number of order statistics; the threshold is the m-th most extreme value.
    pub m: usize,
    /// Signed threshold value `r_{m,n}` (percent).
    pub threshold: f64,
    pub se_gamma: f64,
    /// Pareto scale `(m / n) * |r_{m,n}|^alpha`.
    pub implied_scale: f64,
    pub tail: Tail,
    pub method: TailMethod,
    /// Sample size of the series the estimate came from.
    pub n: usize,
}

impl TailEstimate {
    fn new(gamma: f64, se_gamma: f64, m: usize, threshold: f64, n: usize, tail: Tail, method: TailMethod) -> Self {
        let alpha = 1.0 / gamma;
        Self {
            gamma,
            alpha,
            m,
            threshold,
            se_gamma,
            implied_scale: (m as f64 / n as f64) * threshold.abs().powf(alpha),
            tail,
            method,
            n,
        }
    }

    /// Standard error on the alpha scale by the delta method, `alpha^2 * se_gamma`.
    pub fn se_alpha(&self) -> f64 {
        self.alpha * self.alpha * self.se_gamma
    }

    /// Checks the estimate is usable for quantile extrapolation.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidTailEstimate(format!("gamma = {}", self.gamma)));
        }
        if self.m < 2 || self.m > self.n {
            return Err(Error::InvalidTailEstimate(format!("m = {} with n = {}", self.m, self.n)));
        }
        if !self.tail.qualifies(self.threshold) {
            return Err(Error::InvalidTailEstimate(format!(
                "threshold {} has the wrong sign for the {} tail",
                self.threshold, self.tail
            )));
        }
        if !(self.se_gamma >= 0.0) {
            return Err(Error::InvalidTailEstimate(format!("se_gamma = {}", self.se_gamma)));
        }
        Ok(())
    }
}

/// Signed values ordered from most to least extreme for `tail`; ties keep input order.
fn ordered(series: &ReturnSeries, tail: Tail) -> Vec<f64> {
    let mut v = series.values().to_vec();
    match tail {
        Tail::Lower => v.sort_by(f64::total_cmp),
        Tail::Upper => v.sort_by(|a, b| b.total_cmp(a)),
    }
    v
}

fn qualifying_count(sorted: &[f64], tail: Tail) -> usize {
    sorted.iter().take_while(|v| tail.qualifies(**v)).count()
}

/// Number of observations strictly on the `tail` side of zero.
pub fn tail_count(series: &ReturnSeries, tail: Tail) -> usize {
    series.values().iter().filter(|v| tail.qualifies(**v)).count()
}

fn check_window(sorted: &[f64], m: usize, tail: Tail) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("threshold count m = {m} must be at least 2")));
    }
    if m > sorted.len() {
        return Err(Error::InsufficientTail { m, available: sorted.len() });
    }
    if !tail.qualifies(sorted[m - 1]) {
        return Err(Error::WrongSignInTailWindow { m });
    }
    Ok(())
}

/// The m-th most extreme value of the chosen tail (1-based).
pub fn order_statistic(series: &ReturnSeries, tail: Tail, m: usize) -> Result<f64> {
    let sorted = ordered(series, tail);
    if m == 0 || m > sorted.len() {
        return Err(Error::InsufficientTail { m, available: sorted.len() });
    }
    Ok(sorted[m - 1])
}

fn hill_sorted(sorted: &[f64], m: usize) -> f64 {
    let log_threshold = sorted[m - 1].abs().ln();
    sorted[..m - 1].iter().map(|v| v.abs().ln() - log_threshold).sum::<f64>() / (m - 1) as f64
}

/// Hill estimate over the `m` most extreme observations; `se_gamma = gamma / sqrt(m)`.
pub fn hill_estimate(series: &ReturnSeries, m: usize, tail: Tail) -> Result<TailEstimate> {
    let sorted = ordered(series, tail);
    check_window(&sorted, m, tail)?;
    let gamma = hill_sorted(&sorted, m);
    Ok(TailEstimate::new(gamma, gamma / (m as f64).sqrt(), m, sorted[m - 1], series.len(), tail, TailMethod::Fixed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillPoint {
    pub m: usize,
    pub gamma: f64,
    pub se: f64,
}

/// Hill estimates for `m = 2..=eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillTrace {
    pub tail: Tail,
    pub n: usize,
    pub entries: Vec<HillPoint>,
    /// Signed order statistics `r_1..=r_eta`, kept so thresholds can be read off.
    #[serde(skip)]
    thresholds: Vec<f64>,
}

impl HillTrace {
    /// Builds a trace from externally supplied `(m, gamma)` pairs, e.g. for regression checks.
    pub fn from_points(points: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let entries: Vec<HillPoint> =
            points.into_iter().map(|(m, gamma)| HillPoint { m, gamma, se: gamma / (m as f64).sqrt() }).collect();
        if entries.windows(2).any(|w| w[0].m >= w[1].m) {
            return Err(Error::InvalidInput("trace m values must be strictly increasing".into()));
        }
        Ok(Self { tail: Tail::Lower, n: 0, entries, thresholds: Vec::new() })
    }

    pub fn eta(&self) -> usize {
        self.entries.last().map_or(0, |e| e.m)
    }

    pub fn gamma_at(&self, m: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.m == m).map(|e| e.gamma)
    }

    /// Writes `m,gamma,se` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["m", "gamma", "se"])?;
        for e in &self.entries {
            w.write_record([e.m.to_string(), e.gamma.to_string(), e.se.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Hill estimates for every `m` in `2..=eta`, computed from running log sums.
pub fn hill_trace(series: &ReturnSeries, eta: usize, tail: Tail) -> Result<HillTrace> {
    let sorted = ordered(series, tail);
    check_window(&sorted, eta, tail)?;
    let logs: Vec<f64> = sorted[..eta].iter().map(|v| v.abs().ln()).collect();
    let mut entries = Vec::with_capacity(eta - 1);
    let mut running = logs[0];
    for m in 2..=eta {
        let gamma = running / (m - 1) as f64 - logs[m - 1];
        entries.push(HillPoint { m, gamma, se: gamma / (m as f64).sqrt() });
        running += logs[m - 1];
    }
    Ok(HillTrace { tail, n: series.len(), entries, thresholds: sorted[..eta].to_vec() })
}

/// Adaptive threshold count `m = round(lambda * n^(2/3))`.
///
/// `lambda = |(g1 / sqrt 2) * (n^(1/3) / m2) / (g1 - g2)|^(2/3)` from pilot Hill
/// estimates `g1` at `m1 = floor(n^(2/3))` and `g2` at `m2 = floor(n^(4/5))`.
/// The result is clamped to `[2, n/2]` and to the available tail observations.
/// Equal pilots fall back to `floor(n^(2/3))`.
pub fn phillips_threshold(series: &ReturnSeries, tail: Tail) -> Result<usize> {
    let n = series.len();
    if n < 100 {
        return Err(Error::TooFewObservations { needed: 100, got: n });
    }
    let nf = n as f64;
    let m1 = nf.powf(2.0 / 3.0).floor() as usize;
    let m2 = nf.powf(0.8).floor() as usize;
    let sorted = ordered(series, tail);
    check_window(&sorted, m2, tail)?;
    let g1 = hill_sorted(&sorted, m1);
    let g2 = hill_sorted(&sorted, m2);
    let available = qualifying_count(&sorted, tail);
    let upper = (n / 2).min(available).max(2);
    if g1 == g2 {
        return Ok(m1.clamp(2, upper));
    }
    let lambda = ((g1 / std::f64::consts::SQRT_2) * (nf.cbrt() / m2 as f64) / (g1 - g2)).abs().powf(2.0 / 3.0);
    let m = (lambda * nf.powf(2.0 / 3.0)).round();
    let m = if m.is_finite() { m.min(upper as f64) as usize } else { upper };
    Ok(m.clamp(2, upper))
}

/// Hill estimate at the adaptive threshold.
pub fn phillips_estimate(series: &ReturnSeries, tail: Tail) -> Result<TailEstimate> {
    let m = phillips_threshold(series, tail)?;
    let mut est = hill_estimate(series, m, tail)?;
    est.method = TailMethod::Phillips;
    Ok(est)
}

/// Weighted regression of a Hill trace on `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuismanFit {
    /// Intercept: the bias-corrected exponent as `m -> 0`.
    pub beta0: f64,
    pub beta1: f64,
    /// WLS standard error of the intercept; diagnostic only, see `huisman_estimate`.
    pub se_beta0: f64,
    /// Smallest `m` whose Hill estimate is closest to `beta0`.
    pub m_hkkp: usize,
}

/// Fits `gamma(m) = beta0 + beta1 * m` by least squares with weights `sqrt(m)`.
pub fn huisman_from_trace(trace: &HillTrace) -> Result<HuismanFit> {
    let k = trace.entries.len();
    if k < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: k });
    }
    let (mut s0, mut s1, mut s2, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for e in &trace.entries {
        let m = e.m as f64;
        let w = m.sqrt();
        s0 += w;
        s1 += w * m;
        s2 += w * m * m;
        sy += w * e.gamma;
        sxy += w * m * e.gamma;
    }
    let det = s0 * s2 - s1 * s1;
    if !(det > 1e-12 * s0 * s2) {
        return Err(Error::Numerical("weighted regression is rank deficient".into()));
    }
    let beta1 = (s0 * sxy - s1 * sy) / det;
    let beta0 = (sy - beta1 * s1) / s0;
    let rss: f64 = trace
        .entries
        .iter()
        .map(|e| {
            let m = e.m as f64;
            m.sqrt() * (e.gamma - beta0 - beta1 * m).powi(2)
        })
        .sum();
    let sigma2 = rss / (k - 2) as f64;
    let se_beta0 = (sigma2 * s2 / det).sqrt();
    let m_hkkp = trace
        .entries
        .iter()
        .fold((f64::INFINITY, 0), |(best, bm), e| {
            let d = (e.gamma - beta0).abs();
            if d < best {
                (d, e.m)
            } else {
                (best, bm)
            }
        })
        .1;
    Ok(HuismanFit { beta0, beta1, se_beta0, m_hkkp })
}

/// Default regression horizon: half of the observations on the chosen side of zero.
pub fn default_huisman_eta(series: &ReturnSeries, tail: Tail) -> usize {
    tail_count(series, tail) / 2
}

/// Small-sample corrected tail exponent from the weighted Hill-trace regression.
pub fn huisman_estimate(series: &ReturnSeries, eta: usize, tail: Tail) -> Result<TailEstimate> {
    if eta < 10 {
        return Err(Error::InvalidInput(format!("eta = {eta} must be at least 10")));
    }
    let trace = hill_trace(series, eta, tail)?;
    let fit = huisman_from_trace(&trace)?;
    if !(fit.beta0 > 0.0) {
        return Err(Error::InvalidTailEstimate(format!("regression intercept {} is not positive", fit.beta0)));
    }
    let threshold = trace.thresholds[fit.m_hkkp - 1];
    // The regression's own intercept error treats strongly overlapping Hill
    // estimates as independent and understates the spread by an order of
    // magnitude; the asymptotic Hill error at the selected m does not.
    Ok(TailEstimate::new(
        fit.beta0,
        fit.beta0 / (fit.m_hkkp as f64).sqrt(),
        fit.m_hkkp,
        threshold,
        series.len(),
        tail,
        TailMethod::Huisman,
    ))
}

/// Dispatches on `method`; `m` is used by `Fixed`, `eta` by `Huisman` (default when `None`).
pub fn estimate(
    series: &ReturnSeries,
    method: TailMethod,
    tail: Tail,
    m: Option<usize>,
    eta: Option<usize>,
) -> Result<TailEstimate> {
    match method {
        TailMethod::Fixed => {
            let m = m.ok_or_else(|| Error::InvalidInput("fixed method needs m".into()))?;
            hill_estimate(series, m, tail)
        }
        TailMethod::Phillips => phillips_estimate(series, tail),
        TailMethod::Huisman => {
            let eta = eta.unwrap_or_else(|| default_huisman_eta(series, tail));
            huisman_estimate(series, eta, tail)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteVarianceTest {
    pub z_stat: f64,
    pub finite_variance: bool,
}

/// One-sided 5% test of `alpha > 2` using `se_alpha = alpha^2 * se_gamma`.
pub fn finite_variance_test(est: &TailEstimate) -> Result<FiniteVarianceTest> {
    if !(est.gamma > 0.0 && est.gamma.is_finite()) || !(est.se_gamma > 0.0) {
        return Err(Error::InvalidTailEstimate(format!("gamma = {}, se_gamma = {}", est.gamma, est.se_gamma)));
    }
    let z_stat = (est.alpha - 2.0) / est.se_alpha();
    Ok(FiniteVarianceTest { z_stat, finite_variance: z_stat > 1.645 })
}

/// Normal quantiles (scaled by sample mean and sd) paired with the order statistics.
pub fn qq_normal_data(series: &ReturnSeries) -> Result<Vec<(f64, f64)>> {
    let n = series.len();
    if n < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: n });
    }
    let var = sample_variance(series.values());
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let (mu, sd) = (series.mean(), var.sqrt());
    let mut sorted = series.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted.into_iter().enumerate().map(|(i, x)| (mu + sd * norm_ppf((i as f64 + 0.5) / n as f64), x)).collect())
}

pub fn write_qq_csv<W: std::io::Write>(pairs: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["normal_q", "empirical_q"])?;
    for (q, e) in pairs {
        w.write_record([q.to_string(), e.to_string()])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
