//! Hill-type tail estimators on Mahalanobis distances.
//!
//! The separating Hill estimator maps every observation to its Mahalanobis
//! distance from a location under a scatter matrix, then runs the ordinary
//! Hill estimator on the descending order statistics of those distances.
//! Location and scatter can be the true parameters or come from
//! [`estimate_location_scatter`].

mod location;
mod scatter;

pub use location::{sample_mean, spatial_median, SpatialMedian};
pub use scatter::{sample_covariance, tyler_shape, TylerShape};

use serde::{Deserialize, Serialize};

use crate::distributions::SampleMatrix;
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, SquareMatrix};

/// Descending order statistics `D(1) >= D(2) >= ... >= D(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedDistances(Vec<f64>);

impl OrderedDistances {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based order statistic, `D(i)`.
    pub fn get(&self, i: usize) -> f64 {
        self.0[i - 1]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// How a location/scatter pair was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterMethod {
    SampleMeanCov,
    SpatialMedianTyler,
}

impl ScatterMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ScatterMethod::SampleMeanCov => "sample_mean_cov",
            ScatterMethod::SpatialMedianTyler => "spatial_median_tyler",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateSource {
    TrueParams,
    Estimated(ScatterMethod),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub gamma_hat: f64,
    pub k: usize,
    pub n: usize,
    pub source: EstimateSource,
}

/// An estimated `(mu_hat, sigma_hat)` with its inverse and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationScatterEstimate {
    pub mu_hat: Vec<f64>,
    pub sigma_hat: SquareMatrix,
    #[serde(skip)]
    pub sigma_hat_inv: SquareMatrix,
    pub method: ScatterMethod,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Stopping rules for the iterative estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions {
    pub median_tol: f64,
    pub median_max_iter: usize,
    pub tyler_tol: f64,
    pub tyler_max_iter: usize,
    /// Accept the last iterate instead of failing when an iteration cap is hit.
    pub allow_unconverged: bool,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            median_tol: 1e-10,
            median_max_iter: 500,
            tyler_tol: 1e-9,
            tyler_max_iter: 500,
            allow_unconverged: false,
        }
    }
}

/// Sorts descending. Ties keep their input order.
pub fn order_desc(values: &[f64]) -> Result<OrderedDistances> {
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if values.iter().any(|&v| v < 0.0) {
        return Err(Error::DomainError("distances must be nonnegative".into()));
    }
    let mut sorted = values.to_vec();
    // finite values: partial_cmp is total and treats -0.0 == 0.0
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    Ok(OrderedDistances(sorted))
}

/// `(1/k) * sum_{i<=k} log(D(i) / D(k+1))`.
pub fn univariate_hill(ordered: &OrderedDistances, k: usize) -> Result<HillEstimate> {
    let n = ordered.len();
    if k < 1 || k >= n {
        return Err(Error::KOutOfRange { k, n });
    }
    let pivot = ordered.get(k + 1);
    if !(pivot > 0.0) {
        return Err(Error::NonPositivePivot { value: pivot });
    }
    let log_pivot = pivot.ln();
    let sum: f64 = ordered.0[..k].iter().map(|&v| v.ln() - log_pivot).sum();
    Ok(HillEstimate {
        gamma_hat: (sum / k as f64).max(0.0),
        k,
        n,
        source: EstimateSource::TrueParams,
    })
}

/// `sqrt((x - mu)ᵀ sigma_inv (x - mu))`.
pub fn mahalanobis(x: &[f64], mu: &[f64], sigma_inv: &SquareMatrix) -> Result<f64> {
    if x.len() != mu.len() || sigma_inv.dim() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: if x.len() != mu.len() {
                x.len()
            } else {
                sigma_inv.dim()
            },
        });
    }
    let diff: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    Ok(sigma_inv.quadratic_form(&diff).max(0.0).sqrt())
}

/// Mahalanobis distance of every row of `sample` from `mu`.
pub fn mahalanobis_distances(
    sample: &SampleMatrix,
    mu: &[f64],
    sigma_inv: &SquareMatrix,
) -> Result<Vec<f64>> {
    if sample.dim() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: sample.dim(),
        });
    }
    sample
        .rows()
        .map(|row| mahalanobis(row, mu, sigma_inv))
        .collect()
}

/// Hill estimator on the Mahalanobis distances of `sample` under `(mu, sigma)`.
pub fn separating_hill(
    sample: &SampleMatrix,
    mu: &[f64],
    sigma: &SquareMatrix,
    k: usize,
) -> Result<HillEstimate> {
    let inv = spd_inverse(sigma)?;
    separating_hill_with_inverse(sample, mu, &inv, k)
}

pub fn separating_hill_with_inverse(
    sample: &SampleMatrix,
    mu: &[f64],
    sigma_inv: &SquareMatrix,
    k: usize,
) -> Result<HillEstimate> {
    let ordered = order_desc(&mahalanobis_distances(sample, mu, sigma_inv)?)?;
    univariate_hill(&ordered, k)
}

/// Hill estimates over several `k`, sharing one distance computation.
pub fn hill_plot(
    sample: &SampleMatrix,
    loc_scatter: &LocationScatterEstimate,
    k_values: &[usize],
) -> Result<Vec<HillEstimate>> {
    let ordered = order_desc(&mahalanobis_distances(
        sample,
        &loc_scatter.mu_hat,
        &loc_scatter.sigma_hat_inv,
    )?)?;
    let source = EstimateSource::Estimated(loc_scatter.method);
    hill_series(&ordered, k_values, source)
}

pub fn hill_series(
    ordered: &OrderedDistances,
    k_values: &[usize],
    source: EstimateSource,
) -> Result<Vec<HillEstimate>> {
    k_values
        .iter()
        .map(|&k| univariate_hill(ordered, k).map(|h| HillEstimate { source, ..h }))
        .collect()
}

/// Wraps a known `(mu, sigma)` so it can be used wherever an estimate is
/// expected.
pub fn known_location_scatter(
    mu: Vec<f64>,
    sigma: SquareMatrix,
    method: ScatterMethod,
) -> Result<LocationScatterEstimate> {
    if mu.len() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: sigma.dim(),
        });
    }
    let sigma_hat_inv = spd_inverse(&sigma)?;
    Ok(LocationScatterEstimate {
        mu_hat: mu,
        sigma_hat: sigma,
        sigma_hat_inv,
        method,
        iterations: 0,
        converged: true,
        warnings: Vec::new(),
    })
}

/// Estimates location and scatter with the requested method.
///
/// `SampleMeanCov` needs finite fourth moments of the generating variate to be
/// root-n consistent. `SpatialMedianTyler` is moment-free but only identifies
/// the scatter up to scale, which the separating Hill estimator ignores.
pub fn estimate_location_scatter(
    sample: &SampleMatrix,
    method: ScatterMethod,
    opts: &IterationOptions,
) -> Result<LocationScatterEstimate> {
    let d = sample.dim();
    match method {
        ScatterMethod::SampleMeanCov => {
            let mu_hat = sample_mean(sample);
            let sigma_hat = sample_covariance(sample)?;
            let sigma_hat_inv =
                spd_inverse(&sigma_hat).map_err(|e| Error::DegenerateSample(e.to_string()))?;
            Ok(LocationScatterEstimate {
                mu_hat,
                sigma_hat,
                sigma_hat_inv,
                method,
                iterations: 0,
                converged: true,
                warnings: Vec::new(),
            })
        }
        ScatterMethod::SpatialMedianTyler => {
            if sample.n() <= d {
                return Err(Error::DegenerateSample(format!(
                    "Tyler shape needs n > d (n = {}, d = {d})",
                    sample.n()
                )));
            }
            let mut converged = true;
            let mut warnings = Vec::new();
            let (mu_hat, median_iters) =
                match spatial_median(sample, opts.median_tol, opts.median_max_iter) {
                    Ok(m) => (m.point, m.iterations),
                    Err(Error::NotConverged {
                        iterations, last, ..
                    }) if opts.allow_unconverged => {
                        converged = false;
                        warnings.push("spatial median hit its iteration cap".to_string());
                        (last, iterations)
                    }
                    Err(e) => return Err(e),
                };
            let (sigma_hat, tyler_iters) =
                match tyler_shape(sample, &mu_hat, opts.tyler_tol, opts.tyler_max_iter) {
                    Ok(t) => {
                        if t.dropped > 0 {
                            warnings.push(format!(
                                "{} observations equal to the location were dropped",
                                t.dropped
                            ));
                        }
                        (t.shape, t.iterations)
                    }
                    Err(Error::NotConverged {
                        iterations, last, ..
                    }) if opts.allow_unconverged => {
                        converged = false;
                        warnings.push("Tyler shape hit its iteration cap".to_string());
                        (SquareMatrix::from_row_major(d, last)?, iterations)
                    }
                    Err(e) => return Err(e),
                };
            let sigma_hat_inv = spd_inverse(&sigma_hat)?;
            Ok(LocationScatterEstimate {
                mu_hat,
                sigma_hat,
                sigma_hat_inv,
                method,
                iterations: median_iters + tyler_iters,
                converged,
                warnings,
            })
        }
    }
}
