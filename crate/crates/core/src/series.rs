//! Return series ingestion and the distributional / serial-dependence diagnostics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{chi2_sf, norm_cdf};

/// Ordered percent log-returns with optional ISO-8601 date labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::build(values, None)
    }

    pub fn with_labels(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        Self::build(values, Some(labels))
    }

    fn build(values: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewObservations { needed: 1, got: 0 });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("return at index {i}")));
        }
        if let Some(labels) = &labels {
            if labels.len() != values.len() {
                return Err(Error::InvalidInput(format!("{} labels for {} values", labels.len(), values.len())));
            }
            if let Some(w) = labels.windows(2).find(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput(format!("labels not strictly increasing: `{}` then `{}`", w[0], w[1])));
            }
        }
        Ok(Self { values, labels })
    }

    /// Percent log-returns `100 * (ln P_t - ln P_{t-1})` from a price path.
    pub fn from_prices(prices: &[f64]) -> Result<Self> {
        if prices.len() < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: prices.len() });
        }
        if let Some((i, &p)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
            return Err(Error::NonPositivePrice { line: i as u64 + 1, price: p });
        }
        Self::new(log_returns(prices))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Every value multiplied by `c`; labels are kept.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::build(self.values.iter().map(|v| v * c).collect(), self.labels.clone())
    }

    pub fn negated(&self) -> Self {
        Self { values: self.values.iter().map(|v| -v).collect(), labels: self.labels.clone() }
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Sample standard deviation (n - 1 divisor).
    pub fn sd(&self) -> f64 {
        sample_variance(&self.values).sqrt()
    }
}

fn log_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| 100.0 * (w[1].ln() - w[0].ln())).collect()
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Which CSV column holds the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnMode {
    Price,
    Return,
}

impl ColumnMode {
    fn header(self) -> &'static str {
        match self {
            ColumnMode::Price => "price",
            ColumnMode::Return => "return",
        }
    }
}

impl std::str::FromStr for ColumnMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "price" => Ok(ColumnMode::Price),
            "return" => Ok(ColumnMode::Return),
            other => Err(Error::InvalidInput(format!("unknown column mode `{other}`"))),
        }
    }
}

/// Reads a `date,price` or `date,return` CSV. The date column is optional.
pub fn load_series(path: impl AsRef<Path>, column: ColumnMode) -> Result<ReturnSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_series(file, column)
}

pub fn read_series<R: std::io::Read>(reader: R, column: ColumnMode) -> Result<ReturnSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let value_idx = find(column.header()).ok_or_else(|| Error::MissingColumn(column.header().into()))?;
    let date_idx = find("date");

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw = record.get(value_idx).unwrap_or("");
        let v: f64 = raw.parse().map_err(|_| Error::MalformedRow { line, msg: format!("`{raw}` is not a number") })?;
        if !v.is_finite() {
            return Err(Error::MalformedRow { line, msg: format!("`{raw}` is not finite") });
        }
        if column == ColumnMode::Price && v <= 0.0 {
            return Err(Error::NonPositivePrice { line, price: v });
        }
        values.push(v);
        if let Some(d) = date_idx {
            labels.push(record.get(d).unwrap_or("").to_string());
        }
    }

    match column {
        ColumnMode::Price => {
            if values.len() < 2 {
                return Err(Error::TooFewObservations { needed: 2, got: values.len() });
            }
            let returns = log_returns(&values);
            match date_idx {
                Some(_) => ReturnSeries::with_labels(returns, labels.split_off(1)),
                None => ReturnSeries::new(returns),
            }
        }
        ColumnMode::Return => {
            if values.is_empty() {
                return Err(Error::TooFewObservations { needed: 1, got: 0 });
            }
            match date_idx {
                Some(_) => ReturnSeries::with_labels(values, labels),
                None => ReturnSeries::new(values),
            }
        }
    }
}

/// Moment and normality summary. Kurtosis is reported as excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Kolmogorov-Smirnov distance to the normal fitted by sample mean and sd.
    pub ks_stat: f64,
}

pub fn summary_stats(series: &ReturnSeries) -> Result<SummaryStats> {
    let x = series.values();
    let n = x.len();
    if n < 4 {
        return Err(Error::TooFewObservations { needed: 4, got: n });
    }
    let mean = mean(x);
    let nf = n as f64;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    if m2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / nf;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    let sd = sample_variance(x).sqrt();
    Ok(SummaryStats {
        n,
        mean,
        sd,
        min: x.iter().copied().fold(f64::INFINITY, f64::min),
        max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        ks_stat: ks_normal(x, mean, sd),
    })
}

/// `sup_x |F_n(x) - Phi((x - mu) / sd)|`, evaluated at both sides of every jump.
pub fn ks_normal(x: &[f64], mu: f64, sd: f64) -> f64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = norm_cdf((v - mu) / sd);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBoxResult {
    pub lags: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub squared: bool,
}

/// Sample autocorrelations `rho_1..=rho_lags` of a demeaned copy of `x`.
pub fn autocorrelations(x: &[f64], lags: usize) -> Result<Vec<f64>> {
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    if denom <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((1..=lags).map(|j| d[j..].iter().zip(&d[..d.len() - j]).map(|(a, b)| a * b).sum::<f64>() / denom).collect())
}

/// Ljung-Box portmanteau test with `lags` chi-square degrees of freedom.
pub fn ljung_box(series: &ReturnSeries, lags: usize, squared: bool) -> Result<LjungBoxResult> {
    ljung_box_values(series.values(), lags, squared)
}

pub fn ljung_box_values(values: &[f64], lags: usize, squared: bool) -> Result<LjungBoxResult> {
    let n = values.len();
    if lags == 0 {
        return Err(Error::InvalidInput("lags must be at least 1".into()));
    }
    if lags >= n {
        return Err(Error::TooFewObservations { needed: lags + 1, got: n });
    }
    let data: Vec<f64> = if squared { values.iter().map(|v| v * v).collect() } else { values.to_vec() };
    let rho = autocorrelations(&data, lags)?;
    let nf = n as f64;
    let q = nf * (nf + 2.0) * rho.iter().enumerate().map(|(i, r)| r * r / (nf - (i + 1) as f64)).sum::<f64>();
    Ok(LjungBoxResult { lags, statistic: q, p_value: chi2_sf(q, lags), squared })
}

/// Diagnostics JSON: summary keys at top level plus the Ljung-Box array.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(flatten)]
    pub summary: SummaryStats,
    pub ljung_box: Vec<LjungBoxResult>,
}

pub fn diagnostics(series: &ReturnSeries, lags: usize) -> Result<Diagnostics> {
    Ok(Diagnostics {
        summary: summary_stats(series)?,
        ljung_box: vec![ljung_box(series, lags, false)?, ljung_box(series, lags, true)?],
    })
}
