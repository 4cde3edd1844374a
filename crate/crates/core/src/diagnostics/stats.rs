//! Sampler-quality statistics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_ESS_LENGTH: usize = 10;

fn autocovariance(centered: &[f64], lag: usize) -> f64 {
    let n = centered.len();
    centered[..n - lag]
        .iter()
        .zip(&centered[lag..])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / n as f64
}

/// Effective sample size `N / τ` with `τ` from Geyer's initial monotone
/// positive sequence of paired autocovariances.
pub fn ess(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < MIN_ESS_LENGTH {
        return Err(Error::InvalidInput(format!(
            "ESS needs at least {MIN_ESS_LENGTH} values, got {n}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let gamma0 = autocovariance(&centered, 0);
    if !(gamma0 > 0.0) {
        return Ok(1.0);
    }
    let mut tau = -gamma0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = autocovariance(&centered, 2 * m) + autocovariance(&centered, 2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        tau += 2.0 * pair;
        prev = pair;
        m += 1;
    }
    let tau = (tau / gamma0).max(1.0 / n as f64);
    Ok(n as f64 / tau)
}

/// ESS of every column.
pub fn ess_columns(samples: &DMatrix<f64>) -> Result<Vec<f64>> {
    samples
        .column_iter()
        .map(|c| ess(&c.iter().copied().collect::<Vec<_>>()))
        .collect()
}

/// `c(α) = √(−ln(α/2)/2)`, the asymptotic Kolmogorov critical coefficient.
pub fn ks_coefficient(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

fn sorted(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("KS test needs samples".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("KS test sample contains NaN".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(sample)?;
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let f = cdf(x);
        acc.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}

pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<KsResult> {
    let statistic = ks_statistic(sample, cdf)?;
    let critical = ks_coefficient(level) / (sample.len() as f64).sqrt();
    Ok(KsResult {
        statistic,
        critical,
        pass: statistic <= critical,
    })
}

pub fn ks_two_sample_test(a: &[f64], b: &[f64], level: f64) -> Result<KsResult> {
    let statistic = ks_two_sample_statistic(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let critical = ks_coefficient(level) * ((n + m) / (n * m)).sqrt();
    Ok(KsResult {
        statistic,
        critical,
        pass: statistic <= critical,
    })
}
