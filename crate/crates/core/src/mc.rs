//! Monte Carlo harness: simulate GARCH(1,1)-t(4) paths, run the unconditional
//! tail pipeline on each, and compare scaled quantile predictions with
//! empirical quantiles of non-overlapping multi-day sums.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::sample_std_t;
use crate::error::{Error, Result};
use crate::series::ReturnSeries;
use crate::tail::{default_huisman_eta, huisman_estimate, Tail};
use crate::var::{scale_var, unconditional_grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub a0: f64,
    pub a1: f64,
    pub b1: f64,
    pub n: usize,
    pub reps: usize,
    pub horizons: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub seed: u64,
    pub burn_in: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            a0: 0.1,
            a1: 0.15,
            b1: 0.8,
            n: 2000,
            reps: 200,
            horizons: vec![1, 2, 4, 5],
            probabilities: vec![0.05, 0.01],
            seed: 42,
            burn_in: 1000,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.a0 > 0.0) || self.a1 < 0.0 || self.b1 < 0.0 {
            return bad(format!("GARCH parameters ({}, {}, {})", self.a0, self.a1, self.b1));
        }
        if self.a1 + self.b1 >= 1.0 {
            return bad(format!("a1 + b1 = {} must be below 1", self.a1 + self.b1));
        }
        if self.n < 100 {
            return bad(format!("path length {} must be at least 100", self.n));
        }
        if self.reps < 1 {
            return bad("at least one replication is required".into());
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|&h| h < 1 || h > self.n) {
            return bad(format!("horizons {:?}", self.horizons));
        }
        if self.probabilities.is_empty() || self.probabilities.iter().any(|&p| !(p > 0.0 && p < 0.5)) {
            return bad(format!("probabilities {:?}", self.probabilities));
        }
        Ok(())
    }

    /// True for the published design: (0.1, 0.15, 0.8), n = 2000, 200 replications.
    pub fn is_reference_design(&self) -> bool {
        (self.a0, self.a1, self.b1) == (0.1, 0.15, 0.8) && self.n == 2000 && self.reps == 200
    }
}

/// Published averages for the reference design, keyed by (p, horizon):
/// `(predicted, theoretical)`.
pub const REFERENCE_TABLE: [(f64, usize, f64, f64); 8] = [
    (0.05, 1, 7.0413, 7.0900),
    (0.05, 2, 9.1925, 8.4315),
    (0.05, 4, 12.0010, 10.0268),
    (0.05, 5, 13.0764, 10.6020),
    (0.01, 1, 13.0764, 13.6000),
    (0.01, 2, 17.0714, 16.1732),
    (0.01, 4, 22.2869, 19.2333),
    (0.01, 5, 24.2842, 20.3367),
];

fn reference(p: f64, horizon: usize) -> Option<(f64, f64)> {
    REFERENCE_TABLE.iter().find(|r| r.0 == p && r.1 == horizon).map(|r| (r.2, r.3))
}

/// One simulated path. Replication `rep_index` draws from ChaCha20 stream
/// `rep_index` under key `seed`, so paths do not depend on scheduling.
pub fn simulate_garch_t(config: &McConfig, rep_index: u64) -> Result<ReturnSeries> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(rep_index);
    let total = config.burn_in + config.n;
    let mut var = config.a0 / (1.0 - config.a1 - config.b1);
    let mut prev = 0.0_f64;
    let mut out = Vec::with_capacity(config.n);
    for t in 0..total {
        if t > 0 {
            var = config.a0 + config.a1 * prev * prev + config.b1 * var;
        }
        let r = var.sqrt() * sample_std_t(&mut rng);
        if t >= config.burn_in {
            out.push(r);
        }
        prev = r;
    }
    ReturnSeries::new(out)
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub m_hkkp: usize,
    /// Predictions aligned with [`McReport::rows`].
    pub predictions: Vec<f64>,
    /// Single-period prediction per probability, aligned with `config.probabilities`.
    pub single_period: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub p: f64,
    pub horizon: usize,
    pub mean_pred: f64,
    pub sd_pred: f64,
    /// Pooled empirical loss quantile of non-overlapping `horizon`-day sums.
    pub empirical: f64,
    /// Mean over replications of `|pred - empirical| / empirical`.
    pub mean_abs_rel_error: f64,
    /// Published theoretical quantile for the reference design.
    pub paper_ref: Option<f64>,
    /// Published average prediction for the reference design.
    pub paper_pred: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub config: McConfig,
    pub reps_ok: usize,
    pub failures: usize,
    pub rows: Vec<McRow>,
    pub replications: Vec<Replication>,
}

impl McReport {
    pub fn row(&self, p: f64, horizon: usize) -> Option<&McRow> {
        self.rows.iter().find(|r| r.p == p && r.horizon == horizon)
    }

    /// Writes `p,horizon,mean_pred,sd_pred,empirical,paper_ref`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p", "horizon", "mean_pred", "sd_pred", "empirical", "paper_ref"])?;
        for r in &self.rows {
            w.write_record([
                r.p.to_string(),
                r.horizon.to_string(),
                r.mean_pred.to_string(),
                r.sd_pred.to_string(),
                r.empirical.to_string(),
                r.paper_ref.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

fn block_sums(x: &[f64], h: usize) -> impl Iterator<Item = f64> + '_ {
    x.chunks_exact(h).map(|c| c.iter().sum())
}

/// Loss magnitude at lower-tail probability `p`: minus the `ceil(p N)`-th smallest value.
pub fn empirical_loss_quantile(sorted: &[f64], p: f64) -> f64 {
    let k = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    -sorted[k - 1]
}

fn run_replication(config: &McConfig, index: usize, series: &ReturnSeries) -> Result<Replication> {
    let eta = default_huisman_eta(series, Tail::Lower);
    let est = huisman_estimate(series, eta, Tail::Lower)?;
    let singles = unconditional_grid(series, &est, &config.probabilities, &[1])?;
    let mut predictions = Vec::new();
    for single in &singles {
        for &h in &config.horizons {
            predictions.push(scale_var(single, h, est.alpha)?.var_pct);
        }
    }
    let single_period = singles.iter().map(|s| s.var_pct).collect();
    Ok(Replication { index, gamma: est.gamma, alpha: est.alpha, m_hkkp: est.m, predictions, single_period })
}

/// Runs every replication (in parallel) and aggregates in replication order.
pub fn run_mc(config: &McConfig) -> Result<McReport> {
    config.validate()?;
    let outcomes: Vec<(Vec<Vec<f64>>, Result<Replication>)> = (0..config.reps)
        .into_par_iter()
        .map(|i| {
            let series = match simulate_garch_t(config, i as u64) {
                Ok(s) => s,
                Err(e) => return (Vec::new(), Err(e)),
            };
            let sums = config.horizons.iter().map(|&h| block_sums(series.values(), h).collect()).collect();
            (sums, run_replication(config, i, &series))
        })
        .collect();

    let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); config.horizons.len()];
    let mut replications = Vec::with_capacity(config.reps);
    let mut failures = 0;
    for (sums, outcome) in outcomes {
        for (pool, s) in pooled.iter_mut().zip(sums) {
            pool.extend(s);
        }
        match outcome {
            Ok(r) => replications.push(r),
            Err(e) => {
                log::warn!("replication failed: {e}");
                failures += 1;
            }
        }
    }
    if failures * 10 > config.reps {
        return Err(Error::TooManyFailures { failed: failures, reps: config.reps });
    }
    for pool in &mut pooled {
        pool.sort_by(f64::total_cmp);
    }

    let reference_design = config.is_reference_design();
    let k = replications.len() as f64;
    let mut rows = Vec::new();
    let mut col = 0;
    for &p in &config.probabilities {
        for (hi, &h) in config.horizons.iter().enumerate() {
            let preds: Vec<f64> = replications.iter().map(|r| r.predictions[col]).collect();
            let mean = preds.iter().sum::<f64>() / k;
            let sd = if preds.len() > 1 {
                (preds.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            let empirical = empirical_loss_quantile(&pooled[hi], p);
            let rel = preds.iter().map(|v| ((v - empirical) / empirical).abs()).sum::<f64>() / k;
            let published = if reference_design { reference(p, h) } else { None };
            rows.push(McRow {
                p,
                horizon: h,
                mean_pred: mean,
                sd_pred: sd,
                empirical,
                mean_abs_rel_error: rel,
                paper_ref: published.map(|v| v.1),
                paper_pred: published.map(|v| v.0),
            });
            col += 1;
        }
    }

    Ok(McReport { config: config.clone(), reps_ok: replications.len(), failures, rows, replications })
}
