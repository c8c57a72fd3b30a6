//! Randomised checks of the order-statistic perturbation bounds.
//!
//! Every trial draws a random elliptical model, samples from it, perturbs
//! the location and scatter by a controlled amount, and checks both bounds at
//! the pivots `l = 1`, `ceil(sqrt(n))` and `ceil(n / 10)`.

use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::Serialize;

use crate::bounds::{perturbation_coefficients, verify_epsilon_lemma, verify_log_ratio_lemma};
use crate::distributions::{sample_elliptical, EllipticalModel, GeneratingVariateSpec};
use crate::error::{Error, Result};
use crate::estimators::{mahalanobis_distances, order_desc, OrderedDistances};
use crate::linalg::{max_eigenvalue, spd_inverse, SquareMatrix};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTrialConfig {
    pub trials: usize,
    pub n: usize,
    /// Fixed dimension, or `None` to draw it uniformly from `2..=5`.
    pub dim: Option<usize>,
    /// Radial law; a `TRadial` dimension is overridden by the trial's.
    pub variate: GeneratingVariateSpec,
    /// Size of the location shift and the relative scatter distortion.
    pub perturbation_scale: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundStats {
    pub m_n_min: f64,
    pub m_n_median: f64,
    pub m_n_max: f64,
    /// Largest finite log-ratio bound among applicable checks.
    pub max_log_ratio_bound: Option<f64>,
    /// Smallest `delta(R(l)) - |eps(l)|` among applicable checks.
    pub min_epsilon_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTrialReport {
    pub trials: usize,
    pub pivots: Vec<usize>,
    /// Trial/pivot pairs checked.
    pub checks: usize,
    /// Pairs where the squared-distance bound's hypotheses hold.
    pub applicable_count: usize,
    pub log_ratio_applicable_count: usize,
    pub epsilon_violations: usize,
    pub log_ratio_violations: usize,
    pub violations: usize,
    pub max_ratio_gap: f64,
    pub bound_stats: BoundStats,
}

fn pivots(n: usize) -> Vec<usize> {
    let mut ls = vec![1, (n as f64).sqrt().ceil() as usize, n.div_ceil(10)];
    ls.dedup();
    ls
}

fn squared(d: &OrderedDistances) -> Result<OrderedDistances> {
    order_desc(&d.values().iter().map(|v| v * v).collect::<Vec<_>>())
}

fn random_model<R: Rng>(
    d: usize,
    variate: &GeneratingVariateSpec,
    rng: &mut R,
) -> Result<EllipticalModel> {
    let unit = Uniform::new(-2.0, 2.0).expect("valid range");
    let mu: Vec<f64> = (0..d).map(|_| rng.sample(unit)).collect();
    let g = SquareMatrix::from_row_major(d, (0..d * d).map(|_| rng.sample(StandardNormal)).collect())?;
    let sigma = g
        .matmul(&g.transpose())
        .scaled(1.0 / d as f64)
        .add(&SquareMatrix::identity(d).scaled(0.5))
        .symmetrized();
    let variate = match *variate {
        GeneratingVariateSpec::TRadial { nu, .. } => GeneratingVariateSpec::t_radial(nu, d)?,
        other => other,
    };
    EllipticalModel::new(mu, sigma, variate)
}

/// Runs the randomised bound checks.
pub fn run_bound_trials(config: &BoundTrialConfig) -> Result<BoundTrialReport> {
    if config.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if config.n < 2 {
        return Err(Error::Config("n must be at least 2".into()));
    }
    if !(config.perturbation_scale >= 0.0) || !config.perturbation_scale.is_finite() {
        return Err(Error::Config("perturbation scale must be finite and >= 0".into()));
    }
    if config.dim == Some(0) {
        return Err(Error::Config("dim must be at least 1".into()));
    }
    config.variate.validate()?;
    let ls = pivots(config.n);
    let s = config.perturbation_scale;

    let mut m_values = Vec::with_capacity(config.trials);
    let mut report = BoundTrialReport {
        trials: config.trials,
        pivots: ls.clone(),
        checks: 0,
        applicable_count: 0,
        log_ratio_applicable_count: 0,
        epsilon_violations: 0,
        log_ratio_violations: 0,
        violations: 0,
        max_ratio_gap: 0.0,
        bound_stats: BoundStats {
            m_n_min: 0.0,
            m_n_median: 0.0,
            m_n_max: 0.0,
            max_log_ratio_bound: None,
            min_epsilon_slack: None,
        },
    };

    for trial in 0..config.trials as u64 {
        let mut rng = RngStream::new(config.seed, trial).generator();
        let d = config.dim.unwrap_or_else(|| rng.random_range(2..=5));
        let model = random_model(d, &config.variate, &mut rng)?;
        let (sample, _) = sample_elliptical(&model, config.n, &mut rng)?;

        // sigma_hat = (I + sE) sigma (I + sE)ᵀ is SPD whenever I + sE is invertible.
        let e = SquareMatrix::from_row_major(
            d,
            (0..d * d).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect(),
        )?;
        let t = SquareMatrix::identity(d).add(&e);
        let sigma_hat = t.matmul(model.sigma()).matmul(&t.transpose()).symmetrized();
        let mu_hat: Vec<f64> = model
            .mu()
            .iter()
            .map(|m| m + s * rng.sample::<f64, _>(StandardNormal))
            .collect();

        let sigma_inv = spd_inverse(model.sigma())?;
        let Ok(sigma_hat_inv) = spd_inverse(&sigma_hat) else {
            report.checks += ls.len();
            continue;
        };
        let coeffs = perturbation_coefficients(
            model.mu(),
            &sigma_inv,
            &mu_hat,
            &sigma_hat_inv,
            max_eigenvalue(model.sigma())?,
        )?;
        m_values.push(coeffs.m_n);

        let r = order_desc(&mahalanobis_distances(&sample, model.mu(), &sigma_inv)?)?;
        let est = order_desc(&mahalanobis_distances(&sample, &mu_hat, &sigma_hat_inv)?)?;
        let (r_sq, est_sq) = (squared(&r)?, squared(&est)?);
        for &l in &ls {
            report.checks += 1;
            let eps = verify_epsilon_lemma(&r_sq, &est_sq, coeffs.m_n, l)?;
            if eps.applicable {
                report.applicable_count += 1;
                report.epsilon_violations += eps.violations;
                let slack = eps.max_slack.expect("applicable report has slack");
                let st = &mut report.bound_stats.min_epsilon_slack;
                *st = Some(st.map_or(slack, |v: f64| v.min(slack)));
            }
            let lr = verify_log_ratio_lemma(&r, &est, coeffs.m_n, l)?;
            report.max_ratio_gap = report.max_ratio_gap.max(lr.max_ratio_gap);
            if lr.applicable {
                report.log_ratio_applicable_count += 1;
                report.log_ratio_violations += lr.violations;
                let st = &mut report.bound_stats.max_log_ratio_bound;
                *st = Some(st.map_or(lr.bound, |v: f64| v.max(lr.bound)));
            }
        }
    }
    report.violations = report.epsilon_violations + report.log_ratio_violations;
    if !m_values.is_empty() {
        let sorted = super::diagnostics::sorted(&m_values);
        report.bound_stats.m_n_min = sorted[0];
        report.bound_stats.m_n_max = sorted[sorted.len() - 1];
        report.bound_stats.m_n_median = super::diagnostics::quantile_sorted(&sorted, 0.5);
    }
    Ok(report)
}
