//! Replicated experiments for the separating Hill estimator.
//!
//! Each replication `r` at sample size `n` draws its data from the stream
//! `(mix_seed(base_seed, n), r)`, so any record can be regenerated on its own
//! and replications can run on any number of workers. Aggregates are folded
//! in replication order, which makes the result independent of scheduling.

pub mod diagnostics;
mod trials;

pub use trials::{run_bound_trials, BoundStats, BoundTrialConfig, BoundTrialReport};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{perturbation_coefficients, PerturbationBound};
use crate::distributions::{sample_elliptical, EllipticalModel};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_location_scatter, mahalanobis_distances, order_desc, univariate_hill,
    IterationOptions, ScatterMethod,
};
use crate::linalg::{max_eigenvalue, spd_inverse, SquareMatrix};
use crate::rng::{mix_seed, RngStream};

use diagnostics::{mean, normality_diagnostics, quantile_sorted, sorted, std_dev};

/// Exponent used when no `k` rule is given: `k_n = ceil(sqrt(n))`.
pub const DEFAULT_BETA: f64 = 0.5;

/// Fraction of failed replications tolerated per sample size.
pub const FAILURE_CAP_FRACTION: f64 = 0.01;

/// `max(1, ceil(n^beta))`, clamped to `n - 2`.
///
/// Exact powers (to 1e-9 relative) are not rounded up.
pub fn k_schedule(n: usize, beta: f64) -> Result<usize> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    if n < 4 {
        return Err(Error::Config(format!("k schedule needs n >= 4, got {n}")));
    }
    let x = (n as f64).powf(beta);
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * x {
        nearest
    } else {
        x.ceil()
    } as usize;
    Ok(k.max(1).min(n - 2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    /// `k_n = ceil(n^beta)`.
    Beta(f64),
    /// One `k` per entry of `n_values`.
    Explicit(Vec<usize>),
}

impl Default for KRule {
    fn default() -> Self {
        KRule::Beta(DEFAULT_BETA)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    TrueParams,
    SampleMeanCov,
    SpatialMedianTyler,
}

impl EstimatorMethod {
    pub fn scatter_method(&self) -> Option<ScatterMethod> {
        match self {
            EstimatorMethod::TrueParams => None,
            EstimatorMethod::SampleMeanCov => Some(ScatterMethod::SampleMeanCov),
            EstimatorMethod::SpatialMedianTyler => Some(ScatterMethod::SpatialMedianTyler),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: EllipticalModel,
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub k_rule: KRule,
    pub estimator_method: EstimatorMethod,
    pub replications: usize,
    pub base_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::Config("n_values must not be empty".into()));
        }
        if let KRule::Explicit(ks) = &self.k_rule {
            if ks.len() != self.n_values.len() {
                return Err(Error::Config(format!(
                    "explicit k list has {} entries for {} sample sizes",
                    ks.len(),
                    self.n_values.len()
                )));
            }
        }
        for idx in 0..self.n_values.len() {
            let n = self.n_values[idx];
            let k = self.k_for(idx)?;
            if k < 1 || k >= n {
                return Err(Error::Config(format!("k = {k} is not below n = {n}")));
            }
        }
        Ok(())
    }

    /// `k` for the `idx`-th sample size.
    pub fn k_for(&self, idx: usize) -> Result<usize> {
        let n = self.n_values[idx];
        match &self.k_rule {
            KRule::Beta(beta) => k_schedule(n, *beta),
            KRule::Explicit(ks) => ks
                .get(idx)
                .copied()
                .ok_or_else(|| Error::Config("explicit k list too short".into())),
        }
    }

    /// Seed of the streams used at sample size `n`.
    pub fn seed_for(&self, n: usize) -> u64 {
        mix_seed(self.base_seed, n as u64)
    }

    /// Advisory messages about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let gamma = self.model.variate().gamma();
        if self.estimator_method == EstimatorMethod::SampleMeanCov && gamma >= 0.25 {
            out.push(format!(
                "gamma = {gamma} >= 1/4: the generating variate has no finite fourth moment, \
                 so the sample covariance is not root-n consistent; \
                 consider spatial_median_tyler"
            ));
        }
        out
    }
}

/// Compact view of the perturbation bound attached to a replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSummary {
    pub m_n: f64,
    pub r_pivot: f64,
    pub a_n: f64,
    pub b_n: f64,
    /// Whether `b_n` is guaranteed to bound the estimator gap.
    pub applicable: bool,
    /// `|gap| <= b_n`, when applicable.
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub rep_id: u64,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub gamma_hat_true: f64,
    pub gamma_hat_est: f64,
    /// `sqrt(k) * (gamma_hat_est - gamma)`.
    pub normalized_error: f64,
    /// `gamma_hat_est - gamma_hat_true`.
    pub estimator_gap: f64,
    pub bound: Option<BoundSummary>,
    pub failure: Option<String>,
}

impl ReplicationRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    fn failure(rep_id: u64, n: usize, k: usize, seed: u64, err: &Error) -> Self {
        Self {
            rep_id,
            n,
            k,
            seed,
            gamma_hat_true: f64::NAN,
            gamma_hat_est: f64::NAN,
            normalized_error: f64::NAN,
            estimator_gap: f64::NAN,
            bound: None,
            failure: Some(err.to_string()),
        }
    }
}

/// Data reused by every replication of a configuration.
struct Prepared<'a> {
    config: &'a ExperimentConfig,
    sigma_inv: SquareMatrix,
    lambda_max: f64,
    gamma: f64,
    opts: IterationOptions,
}

impl<'a> Prepared<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let sigma = config.model.sigma();
        Ok(Self {
            config,
            sigma_inv: spd_inverse(sigma)?,
            lambda_max: max_eigenvalue(sigma)?,
            gamma: config.model.variate().gamma(),
            opts: IterationOptions::default(),
        })
    }

    fn replicate(&self, n: usize, k: usize, rep_id: u64) -> ReplicationRecord {
        let seed = self.config.seed_for(n);
        match self.try_replicate(n, k, seed, rep_id) {
            Ok(rec) => rec,
            Err(e) => ReplicationRecord::failure(rep_id, n, k, seed, &e),
        }
    }

    fn try_replicate(&self, n: usize, k: usize, seed: u64, rep_id: u64) -> Result<ReplicationRecord> {
        let model = &self.config.model;
        let mut rng = RngStream::new(seed, rep_id).generator();
        let (sample, _radii) = sample_elliptical(model, n, &mut rng)?;

        let true_dists = order_desc(&mahalanobis_distances(&sample, model.mu(), &self.sigma_inv)?)?;
        let gamma_hat_true = univariate_hill(&true_dists, k)?.gamma_hat;

        let (gamma_hat_est, bound) = match self.config.estimator_method.scatter_method() {
            None => {
                let coeffs = perturbation_coefficients(
                    model.mu(),
                    &self.sigma_inv,
                    model.mu(),
                    &self.sigma_inv,
                    self.lambda_max,
                )?;
                (gamma_hat_true, PerturbationBound::new(coeffs, true_dists.get(k + 1))?)
            }
            Some(method) => {
                let est = estimate_location_scatter(&sample, method, &self.opts)?;
                let est_dists =
                    order_desc(&mahalanobis_distances(&sample, &est.mu_hat, &est.sigma_hat_inv)?)?;
                let gamma_hat_est = univariate_hill(&est_dists, k)?.gamma_hat;
                // The estimator ignores the scale of sigma_hat, so the bound
                // may be evaluated for any rescaling of it; match traces.
                let c = model.sigma().trace() / est.sigma_hat.trace();
                let matched_inv = est.sigma_hat_inv.scaled(1.0 / c);
                let coeffs = perturbation_coefficients(
                    model.mu(),
                    &self.sigma_inv,
                    &est.mu_hat,
                    &matched_inv,
                    self.lambda_max,
                )?;
                (gamma_hat_est, PerturbationBound::new(coeffs, true_dists.get(k + 1))?)
            }
        };
        let estimator_gap = gamma_hat_est - gamma_hat_true;
        let applicable = bound.preconds.gap_applicable();
        let summary = BoundSummary {
            m_n: bound.m_n(),
            r_pivot: bound.r_pivot,
            a_n: bound.a_n,
            b_n: bound.b_n,
            applicable,
            holds: applicable.then(|| estimator_gap.abs() <= bound.b_n + 1e-12),
        };
        Ok(ReplicationRecord {
            rep_id,
            n,
            k,
            seed,
            gamma_hat_true,
            gamma_hat_est,
            normalized_error: (k as f64).sqrt() * (gamma_hat_est - self.gamma),
            estimator_gap,
            bound: Some(summary),
            failure: None,
        })
    }
}

/// One replication of `config` at sample size `n` (which must be listed in
/// `n_values`).
pub fn run_replication(config: &ExperimentConfig, n: usize, rep_id: u64) -> Result<ReplicationRecord> {
    let prepared = Prepared::new(config)?;
    let idx = config
        .n_values
        .iter()
        .position(|&m| m == n)
        .ok_or_else(|| Error::Config(format!("n = {n} is not in n_values")))?;
    let k = config.k_for(idx)?;
    Ok(prepared.replicate(n, k, rep_id))
}

/// Aggregate statistics at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeAggregate {
    pub n: usize,
    pub k: usize,
    pub replications: usize,
    pub failures: usize,
    pub mean_gamma_hat: f64,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
    /// Median of `|gamma_hat_est - gamma|`.
    pub median_abs_error: f64,
    /// 95th percentile of `sqrt(k) * |gamma_hat_est - gamma_hat_true|`.
    pub p95_scaled_gap: f64,
    /// Limit law `N(target_mean, target_sd^2)` of the normalized error, when
    /// the limit bias is known.
    pub target_mean: Option<f64>,
    pub target_sd: f64,
    pub ks_stat: Option<f64>,
    pub z_mean: Option<f64>,
    pub z_sd: Option<f64>,
    pub bound_applicable: usize,
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub gamma: f64,
    pub warnings: Vec<String>,
    pub aggregates: Vec<SizeAggregate>,
    #[serde(skip)]
    pub records: Vec<ReplicationRecord>,
}

impl ExperimentResult {
    pub fn aggregate_for(&self, n: usize) -> Option<&SizeAggregate> {
        self.aggregates.iter().find(|a| a.n == n)
    }

    pub fn records_for(&self, n: usize) -> impl Iterator<Item = &ReplicationRecord> {
        self.records.iter().filter(move |r| r.n == n)
    }
}

/// Aggregates the records of one sample size in `rep_id` order.
pub fn aggregate(
    n: usize,
    k: usize,
    records: &[ReplicationRecord],
    gamma: f64,
    target_mean: Option<f64>,
) -> SizeAggregate {
    let ok: Vec<&ReplicationRecord> = records.iter().filter(|r| !r.failed()).collect();
    let errors: Vec<f64> = ok.iter().map(|r| r.normalized_error).collect();
    let abs_err: Vec<f64> = ok.iter().map(|r| (r.gamma_hat_est - gamma).abs()).collect();
    let gaps: Vec<f64> = ok
        .iter()
        .map(|r| (r.k as f64).sqrt() * r.estimator_gap.abs())
        .collect();
    let estimates: Vec<f64> = ok.iter().map(|r| r.gamma_hat_est).collect();
    let bound_applicable = ok
        .iter()
        .filter(|r| r.bound.is_some_and(|b| b.applicable))
        .count();
    let bound_violations = ok
        .iter()
        .filter(|r| r.bound.is_some_and(|b| b.holds == Some(false)))
        .count();

    let (mean_gamma_hat, m, sd, median, q05, q95, median_abs_error, p95_scaled_gap) =
        if errors.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            let se = sorted(&errors);
            (
                mean(&estimates),
                mean(&errors),
                std_dev(&errors),
                quantile_sorted(&se, 0.5),
                quantile_sorted(&se, 0.05),
                quantile_sorted(&se, 0.95),
                quantile_sorted(&sorted(&abs_err), 0.5),
                quantile_sorted(&sorted(&gaps), 0.95),
            )
        };
    let diag = target_mean.and_then(|t| normality_diagnostics(&errors, t, gamma).ok());
    SizeAggregate {
        n,
        k,
        replications: records.len(),
        failures: records.len() - ok.len(),
        mean_gamma_hat,
        mean: m,
        sd,
        median,
        q05,
        q95,
        median_abs_error,
        p95_scaled_gap,
        target_mean,
        target_sd: gamma,
        ks_stat: diag.map(|d| d.ks_stat),
        z_mean: diag.map(|d| d.z_mean),
        z_sd: diag.map(|d| d.z_sd),
        bound_applicable,
        bound_violations,
    }
}

/// Runs every configured replication on `workers` threads (0 = rayon default).
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    let prepared = Prepared::new(config)?;
    let warnings = config.warnings();
    for w in &warnings {
        warn!("{w}");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let target_mean = config.model.variate().second_order().map(|s| s.limit_bias());
    let cap = (FAILURE_CAP_FRACTION * config.replications as f64).floor() as usize;

    let mut aggregates = Vec::with_capacity(config.n_values.len());
    let mut records = Vec::with_capacity(config.n_values.len() * config.replications);
    for (idx, &n) in config.n_values.iter().enumerate() {
        let k = config.k_for(idx)?;
        let batch: Vec<ReplicationRecord> = pool.install(|| {
            (0..config.replications as u64)
                .into_par_iter()
                .map(|rep| prepared.replicate(n, k, rep))
                .collect()
        });
        let failed = batch.iter().filter(|r| r.failed()).count();
        if failed > cap {
            return Err(Error::FailureCap {
                n,
                failed,
                total: config.replications,
                cap,
            });
        }
        aggregates.push(aggregate(n, k, &batch, prepared.gamma, target_mean));
        records.extend(batch);
    }
    Ok(ExperimentResult {
        config: config.clone(),
        gamma: prepared.gamma,
        warnings,
        aggregates,
        records,
    })
}
