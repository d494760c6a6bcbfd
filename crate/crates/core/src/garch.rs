//! AR(1)-GARCH(1,1) with unit-variance innovations.
//!
//! ```text
//! r_t       = mu_t + sigma_t * z_t,       mu_t = c + phi * r_{t-1}
//! sigma_t^2 = a0 + a1 * r_{t-1}^2 + b1 * sigma_{t-1}^2
//! ```
//!
//! `sigma_1^2` is the sample variance and `mu_1` the AR mean `c / (1 - phi)`.
//! The first observation only conditions the recursion and is left out of the
//! likelihood.

use serde::{Deserialize, Serialize};

use crate::dist::std_t_density;
pub use crate::dist::{std_t_logdensity, Innovation};
use crate::error::{Error, Result};
use crate::optim;
use crate::quad::integrate_real_line;
use crate::series::{sample_variance, ReturnSeries};

/// Persistence at or above this is reported as a unit-root boundary fit.
pub const BOUNDARY_PERSISTENCE: f64 = 1.0 - 1e-6;
const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub c: f64,
    pub phi: f64,
    pub a0: f64,
    pub a1: f64,
    pub b1: f64,
}

impl GarchParams {
    pub fn new(c: f64, phi: f64, a0: f64, a1: f64, b1: f64) -> Result<Self> {
        let p = Self { c, phi, a0, a1, b1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c, self.phi, self.a0, self.a1, self.b1];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite parameter in {self:?}")));
        }
        if !(self.a0 > 0.0) {
            return Err(Error::InvalidParams(format!("a0 = {} must be positive", self.a0)));
        }
        if self.a1 < 0.0 || self.b1 < 0.0 {
            return Err(Error::InvalidParams(format!("a1 = {}, b1 = {} must be non-negative", self.a1, self.b1)));
        }
        if self.a1 + self.b1 >= 1.0 {
            return Err(Error::InvalidParams(format!("a1 + b1 = {} must be below 1", self.a1 + self.b1)));
        }
        if self.phi.abs() >= 1.0 {
            return Err(Error::InvalidParams(format!("|phi| = {} must be below 1", self.phi.abs())));
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.a1 + self.b1
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.a0 / (1.0 - self.persistence())
    }

    fn to_vec(self) -> Vec<f64> {
        vec![self.c, self.phi, self.a0, self.a1, self.b1]
    }

    fn from_slice(v: &[f64]) -> Self {
        Self { c: v[0], phi: v[1], a0: v[2], a1: v[3], b1: v[4] }
    }
}

/// One-step-ahead conditional mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub mu_next: f64,
    pub sigma_next: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPath {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub z: Vec<f64>,
}

fn recursion(params: &GarchParams, r: &[f64], seed_var: f64) -> (Vec<f64>, Vec<f64>) {
    let n = r.len();
    let mut mu = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    mu.push(params.c / (1.0 - params.phi));
    var.push(seed_var);
    for t in 1..n {
        mu.push(params.c + params.phi * r[t - 1]);
        var.push(params.a0 + params.a1 * r[t - 1] * r[t - 1] + params.b1 * var[t - 1]);
    }
    (mu, var)
}

fn seed_variance(r: &[f64]) -> f64 {
    sample_variance(r)
}

/// Conditional mean, sd and standardized residual paths (all length n).
pub fn garch_filter(params: &GarchParams, series: &ReturnSeries) -> Result<FilterPath> {
    params.validate()?;
    let r = series.values();
    if r.len() < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: r.len() });
    }
    let (mu, var) = recursion(params, r, seed_variance(r));
    let mut sigma = Vec::with_capacity(r.len());
    let mut z = Vec::with_capacity(r.len());
    for t in 0..r.len() {
        let s = var[t].sqrt();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::NonFinite(format!("sigma at t = {}", t + 1)));
        }
        sigma.push(s);
        z.push((r[t] - mu[t]) / s);
    }
    Ok(FilterPath { mu, sigma, z })
}

/// Log-likelihood without parameter validation; used by the optimizer and
/// for finite differences that may step just outside the feasible set.
fn loglik_raw(params: &GarchParams, r: &[f64], innovation: Innovation) -> f64 {
    let n = r.len();
    let mut var = seed_variance(r);
    let mut total = 0.0;
    for t in 1..n {
        var = params.a0 + params.a1 * r[t - 1] * r[t - 1] + params.b1 * var;
        if !(var > 0.0) {
            return f64::NAN;
        }
        let mu = params.c + params.phi * r[t - 1];
        let sd = var.sqrt();
        total += innovation.logpdf((r[t] - mu) / sd) - sd.ln();
    }
    total
}

/// `sum_{t=2}^{n} [ln g(z_t) - ln sigma_t]` with standardized t(4) innovations.
pub fn garch_loglik(params: &GarchParams, series: &ReturnSeries) -> Result<f64> {
    garch_loglik_with(params, series, Innovation::StudentT4)
}

pub fn garch_loglik_with(params: &GarchParams, series: &ReturnSeries, innovation: Innovation) -> Result<f64> {
    params.validate()?;
    if series.len() < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: series.len() });
    }
    let ll = loglik_raw(params, series.values(), innovation);
    if !ll.is_finite() {
        return Err(Error::NonFinite("log-likelihood".into()));
    }
    Ok(ll)
}

/// Fitted model plus its filtered paths and one-step forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub params: GarchParams,
    pub innovation: Innovation,
    /// Standard errors for `(c, phi, a0, a1, b1)` from the inverse numerical Hessian.
    pub param_se: [f64; 5],
    pub loglik: f64,
    pub sigma: Vec<f64>,
    pub z: Vec<f64>,
    pub mu_next: f64,
    pub sigma_next: f64,
    pub n: usize,
    /// True when `a1 + b1` ended on the stationarity boundary.
    pub boundary: bool,
}

impl GarchFit {
    pub fn forecast(&self) -> Forecast {
        Forecast { mu_next: self.mu_next, sigma_next: self.sigma_next }
    }

    pub fn residuals(&self) -> Result<ReturnSeries> {
        ReturnSeries::new(self.z.clone())
    }

    /// Writes `t,sigma,z` rows (t is 1-based).
    pub fn write_path_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "sigma", "z"])?;
        for (t, (s, z)) in self.sigma.iter().zip(&self.z).enumerate() {
            w.write_record([(t + 1).to_string(), s.to_string(), z.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

// Unconstrained coordinates: c, atanh(phi), ln a0, logit(a1 + b1), logit(a1 / (a1 + b1)).
fn to_unconstrained(p: &GarchParams) -> Vec<f64> {
    let s = p.a1 + p.b1;
    let share = p.a1 / s;
    let logit = |x: f64| (x / (1.0 - x)).ln();
    vec![p.c, p.phi.atanh(), p.a0.ln(), logit(s), logit(share)]
}

fn from_unconstrained(u: &[f64]) -> GarchParams {
    let sigmoid = |x: f64| 1.0 / (1.0 + (-x).exp());
    let s = sigmoid(u[3]);
    let share = sigmoid(u[4]);
    GarchParams { c: u[0], phi: u[1].tanh(), a0: u[2].exp(), a1: s * share, b1: s * (1.0 - share) }
}

fn starting_points(r: &[f64]) -> Vec<GarchParams> {
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let var = sample_variance(r);
    [(0.05, 0.90), (0.10, 0.80), (0.20, 0.50)]
        .iter()
        .map(|&(a1, b1)| GarchParams { c: mean, phi: 0.0, a0: var * (1.0 - a1 - b1), a1, b1 })
        .collect()
}

/// Maximum-likelihood fit with standardized t(4) innovations.
pub fn garch_fit(series: &ReturnSeries) -> Result<GarchFit> {
    garch_fit_with(series, Innovation::StudentT4)
}

/// Maximum-likelihood fit from three deterministic starts; the best
/// log-likelihood wins, ties go to the earliest start.
pub fn garch_fit_with(series: &ReturnSeries, innovation: Innovation) -> Result<GarchFit> {
    let r = series.values();
    let n = r.len();
    if n < 250 {
        return Err(Error::TooFewObservations { needed: 250, got: n });
    }
    if sample_variance(r) <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    // Normalising by n keeps the optimizer tolerances independent of sample size.
    let scale = n as f64;
    let objective = |u: &[f64]| -> f64 {
        let p = from_unconstrained(u);
        let ll = loglik_raw(&p, r, innovation);
        if ll.is_finite() {
            -ll / scale
        } else {
            f64::INFINITY
        }
    };

    let mut best: Option<optim::Minimum> = None;
    let mut last_err = None;
    for start in starting_points(r) {
        let u0 = to_unconstrained(&start);
        let simplex = optim::nelder_mead(&objective, &u0, 0.25, MAX_ITERATIONS, 1e-12);
        match optim::bfgs(&objective, &simplex.x, MAX_ITERATIONS, 1e-8) {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.value < b.value) {
                    best = Some(m);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let best = best.ok_or_else(|| last_err.unwrap_or(Error::NoConvergence { iterations: MAX_ITERATIONS }))?;
    let params = newton_polish(from_unconstrained(&best.x), r, innovation);
    params.validate()?;

    let loglik = loglik_raw(&params, r, innovation);
    if !loglik.is_finite() {
        return Err(Error::NonFinite("log-likelihood at optimum".into()));
    }
    let path = garch_filter(&params, series)?;
    let last = n - 1;
    let sigma2_next = params.a0 + params.a1 * r[last] * r[last] + params.b1 * path.sigma[last].powi(2);

    let neg_ll = |v: &[f64]| -loglik_raw(&GarchParams::from_slice(v), r, innovation);
    let hess = optim::hessian(&neg_ll, &params.to_vec());
    let param_se = match optim::invert(&hess) {
        Ok(inv) => std::array::from_fn(|i| {
            let v = inv[i][i];
            if v > 0.0 {
                v.sqrt()
            } else {
                f64::NAN
            }
        }),
        Err(_) => [f64::NAN; 5],
    };

    Ok(GarchFit {
        params,
        innovation,
        param_se,
        loglik,
        mu_next: params.c + params.phi * r[last],
        sigma_next: sigma2_next.sqrt(),
        sigma: path.sigma,
        z: path.z,
        n,
        boundary: params.persistence() >= BOUNDARY_PERSISTENCE,
    })
}

/// A few damped Newton steps on the raw log-likelihood. The quasi-Newton search
/// in the transformed space stalls at a gradient of order 1e-3; this finishes
/// the job for interior optima and leaves boundary fits untouched.
fn newton_polish(mut params: GarchParams, r: &[f64], innovation: Innovation) -> GarchParams {
    let neg_ll = |v: &[f64]| -loglik_raw(&GarchParams::from_slice(v), r, innovation);
    let mut x = params.to_vec();
    let mut fx = neg_ll(&x);
    for _ in 0..8 {
        let g = optim::gradient(&neg_ll, &x);
        if g.iter().all(|v| v.abs() < 1e-6) {
            break;
        }
        let Ok(inv) = optim::invert(&optim::hessian(&neg_ll, &x)) else { break };
        let step: Vec<f64> = (0..x.len()).map(|i| (0..x.len()).map(|j| inv[i][j] * g[j]).sum()).collect();
        // only a Newton direction that descends is worth following
        if step.iter().zip(&g).map(|(s, gi)| s * gi).sum::<f64>() <= 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi - t * si).collect();
            let cand = GarchParams::from_slice(&trial);
            if cand.validate().is_ok() && cand.persistence() < 1.0 {
                let ft = neg_ll(&trial);
                if ft.is_finite() && ft <= fx {
                    x = trial;
                    fx = ft;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let polished = GarchParams::from_slice(&x);
    if polished.validate().is_ok() {
        params = polished;
    }
    params
}

/// Central finite-difference gradient of the log-likelihood in `(c, phi, a0, a1, b1)`.
pub fn loglik_gradient(params: &GarchParams, series: &ReturnSeries, innovation: Innovation) -> [f64; 5] {
    let r = series.values();
    let f = |v: &[f64]| loglik_raw(&GarchParams::from_slice(v), r, innovation);
    let g = optim::gradient(&f, &params.to_vec());
    std::array::from_fn(|i| g[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub sum_ok: bool,
    /// `E[ln|a1 z^2 + b1|]` under the standardized t(4) density.
    pub eq12_integral: f64,
    pub eq12_ok: bool,
    /// Set when `a1 = b1 = 0`: the integrand is `-inf` everywhere.
    pub degenerate: bool,
}

/// Covariance-stationarity (`a1 + b1 < 1`) and the strict-stationarity
/// log-moment condition, evaluated by quadrature over the whole real line.
pub fn stationarity_check(params: &GarchParams) -> Result<StationarityReport> {
    if !(params.a0 > 0.0) || params.a1 < 0.0 || params.b1 < 0.0 {
        return Err(Error::InvalidParams(format!("{params:?}")));
    }
    let sum_ok = params.persistence() < 1.0;
    if params.a1 == 0.0 && params.b1 == 0.0 {
        return Ok(StationarityReport { sum_ok, eq12_integral: f64::NEG_INFINITY, eq12_ok: true, degenerate: true });
    }
    let (a1, b1) = (params.a1, params.b1);
    let q = integrate_real_line(|z| (a1 * z * z + b1).abs().ln() * std_t_density(z), 1e-11, 0.0)?;
    Ok(StationarityReport {
        sum_ok,
        eq12_integral: q.value,
        eq12_ok: q.value < 0.0 && params.a0 > 0.0,
        degenerate: false,
    })
}

/// The persisted model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub c: f64,
    pub phi: f64,
    pub a0: f64,
    pub a1: f64,
    pub b1: f64,
    /// `null` for Gaussian innovations.
    pub df: Option<f64>,
    pub loglik: f64,
    pub mu_next: f64,
    pub sigma_next: f64,
    pub n: usize,
    pub eq12_integral: f64,
    pub innovation: Innovation,
    pub param_se: [Option<f64>; 5],
    /// Filtered residuals, kept so conditional tail estimates can be rebuilt.
    pub z: Vec<f64>,
}

impl ModelFile {
    pub fn from_fit(fit: &GarchFit) -> Result<Self> {
        let st = stationarity_check(&fit.params)?;
        Ok(Self {
            c: fit.params.c,
            phi: fit.params.phi,
            a0: fit.params.a0,
            a1: fit.params.a1,
            b1: fit.params.b1,
            df: fit.innovation.dof(),
            loglik: fit.loglik,
            mu_next: fit.mu_next,
            sigma_next: fit.sigma_next,
            n: fit.n,
            eq12_integral: st.eq12_integral,
            innovation: fit.innovation,
            param_se: fit.param_se.map(|v| v.is_finite().then_some(v)),
            z: fit.z.clone(),
        })
    }

    pub fn params(&self) -> Result<GarchParams> {
        GarchParams::new(self.c, self.phi, self.a0, self.a1, self.b1)
    }

    pub fn forecast(&self) -> Forecast {
        Forecast { mu_next: self.mu_next, sigma_next: self.sigma_next }
    }

    pub fn residuals(&self) -> Result<ReturnSeries> {
        ReturnSeries::new(self.z.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
