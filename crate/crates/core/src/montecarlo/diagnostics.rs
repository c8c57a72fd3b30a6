//! Summary statistics and goodness-of-fit checks for replication output.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Minimum number of values accepted by [`normality_diagnostics`].
pub const MIN_NORMALITY_VALUES: usize = 30;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation with the `n - 1` denominator; zero for a single
/// value.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and
/// `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let s = sorted(values);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalityDiagnostics {
    /// `(mean - target_mean) / (target_sd / sqrt(M))`.
    pub z_mean: f64,
    /// `(sd - target_sd) / (target_sd / sqrt(2M))`.
    pub z_sd: f64,
    pub ks_stat: f64,
}

/// Compares `values` with `N(target_mean, target_sd^2)`.
pub fn normality_diagnostics(
    values: &[f64],
    target_mean: f64,
    target_sd: f64,
) -> Result<NormalityDiagnostics> {
    if values.len() < MIN_NORMALITY_VALUES {
        return Err(Error::TooFewValues {
            needed: MIN_NORMALITY_VALUES,
            got: values.len(),
        });
    }
    let normal = Normal::new(target_mean, target_sd)
        .map_err(|_| Error::DomainError(format!("target sd must be positive, got {target_sd}")))?;
    let m = values.len() as f64;
    let z_mean = (mean(values) - target_mean) / (target_sd / m.sqrt());
    let z_sd = (std_dev(values) - target_sd) / (target_sd / (2.0 * m).sqrt());
    let ks_stat = ks_statistic(values, |x| normal.cdf(x));
    Ok(NormalityDiagnostics {
        z_mean,
        z_sd,
        ks_stat,
    })
}
