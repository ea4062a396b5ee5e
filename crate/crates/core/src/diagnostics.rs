//! Summary statistics and goodness-of-fit measures.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::targets::Target;

/// Default QQ-outlier threshold, in target units.
pub const DEFAULT_QQ_DELTA: f64 = 0.5;

const KOLMOGOROV_TERMS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SixNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Type-7 quantile of already sorted data.
fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(quantile_sorted(&sorted(values), 0.5))
}

pub fn summary_stats(values: &[f64]) -> Result<SixNumberSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let v = sorted(values);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Ok(SixNumberSummary {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        mean,
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let v = sorted(samples);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(n.sqrt() * d),
    })
}

pub fn ks_statistic(samples: &[f64], target: &Target) -> Result<KsResult> {
    ks_test(samples, |x| target.cdf(x))
}

/// `P(K > lambda)` for the Kolmogorov distribution, from the alternating
/// series `2 * sum (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=KOLMOGOROV_TERMS {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as usize % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QqOutliers {
    pub count: usize,
    /// Positions in the sorted sample.
    pub indices: Vec<usize>,
}

/// Sorted-sample positions `i` whose value deviates from the theoretical
/// quantile at `(i + 0.5) / n` by more than `delta`.
pub fn qq_outliers(samples: &[f64], target: &Target, delta: f64) -> Result<QqOutliers> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must be positive")));
    }
    let v = sorted(samples);
    let n = v.len() as f64;
    let mut indices = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let q = target.quantile((i as f64 + 0.5) / n)?;
        if (x - q).abs() > delta {
            indices.push(i);
        }
    }
    Ok(QqOutliers {
        count: indices.len(),
        indices,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeMass {
    pub lo: f64,
    pub hi: f64,
    pub observed: f64,
    pub expected: f64,
}

/// Fractions of the sample falling between consecutive cut points
/// (`-inf`, cuts..., `+inf`), next to the target's mass in each region.
pub fn mode_masses(samples: &[f64], target: &Target, cuts: &[f64]) -> Vec<ModeMass> {
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend_from_slice(cuts);
    edges.push(f64::INFINITY);
    let n = samples.len().max(1) as f64;
    edges
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let count = samples.iter().filter(|&&x| x >= lo && x < hi).count();
            let upper = if hi.is_finite() { target.cdf(hi) } else { 1.0 };
            let lower = if lo.is_finite() { target.cdf(lo) } else { 0.0 };
            ModeMass {
                lo,
                hi,
                observed: count as f64 / n,
                expected: upper - lower,
            }
        })
        .collect()
}

/// Pearson correlation; 0 when either input is constant.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}
