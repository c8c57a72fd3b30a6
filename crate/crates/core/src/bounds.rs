//! Perturbation bounds for Mahalanobis order statistics.
//!
//! Replacing the true `(mu, sigma)` by estimates `(mu_hat, sigma_hat)` moves
//! each squared distance by at most `delta(R) = M (R^2 + R + 1)`, where `M`
//! is built from the estimation errors. Once `M < 1` and the pivot distance is
//! large enough, the log-ratios used by the Hill estimator move by at most
//! `log(1 / (1 - a))` with `a = M (1 + 1/R + 1/R^2)`. This module computes
//! those quantities and checks the resulting inequalities on concrete data.
//!
//! All matrix norms are spectral norms; vector norms are Euclidean.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::OrderedDistances;
use crate::linalg::{norm, spectral_norm, SquareMatrix};

/// Absolute allowance for floating-point rounding in the verifiers, scaled by
/// the magnitude of the compared quantities.
const ROUNDING_ALLOWANCE: f64 = 1e-12;

/// The coefficients `A`, `B`, `C` and their combination `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationCoefficients {
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
    pub m_n: f64,
    pub lambda_max: f64,
    pub mu_norm: f64,
}

/// Which hypotheses of the bounds hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Preconditions {
    pub m_lt_one: bool,
    pub pivot_ok: bool,
    pub a_lt_one: bool,
    pub a_le_half: bool,
}

impl Preconditions {
    /// Hypotheses of the squared-distance bound.
    pub fn epsilon_applicable(&self) -> bool {
        self.m_lt_one && self.pivot_ok
    }

    /// Hypotheses of the log-ratio bound.
    pub fn log_ratio_applicable(&self) -> bool {
        self.epsilon_applicable() && self.a_lt_one
    }

    /// Hypotheses under which `b_n` bounds the Hill estimator gap.
    pub fn gap_applicable(&self) -> bool {
        self.epsilon_applicable() && self.a_le_half
    }
}

/// `a_n`, the capped `b_n`, and the precondition flags at a pivot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRatioBound {
    pub m_n: f64,
    pub r_pivot: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub preconds: Preconditions,
}

/// Coefficients together with the log-ratio bound at one pivot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationBound {
    #[serde(flatten)]
    pub coefficients: PerturbationCoefficients,
    pub r_pivot: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub preconds: Preconditions,
}

impl PerturbationBound {
    pub fn new(coefficients: PerturbationCoefficients, r_pivot: f64) -> Result<Self> {
        let lr = log_ratio_bound(coefficients.m_n, r_pivot)?;
        Ok(Self {
            coefficients,
            r_pivot,
            a_n: lr.a_n,
            b_n: lr.b_n,
            preconds: lr.preconds,
        })
    }

    pub fn m_n(&self) -> f64 {
        self.coefficients.m_n
    }
}

/// `max{λ A, sqrt(λ) (2|mu| A + B), A |mu|^2 + B |mu| + C}`.
pub fn combine_m(a: f64, b: f64, c: f64, lambda_max: f64, mu_norm: f64) -> f64 {
    let first = lambda_max * a;
    let second = lambda_max.sqrt() * (2.0 * mu_norm * a + b);
    let third = a * mu_norm * mu_norm + b * mu_norm + c;
    first.max(second).max(third)
}

/// Perturbation coefficients for estimates `(mu_hat, sigma_hat_inv)` of
/// `(mu, sigma_inv)`. `lambda_max` is the largest eigenvalue of the true
/// scatter.
pub fn perturbation_coefficients(
    mu: &[f64],
    sigma_inv: &SquareMatrix,
    mu_hat: &[f64],
    sigma_hat_inv: &SquareMatrix,
    lambda_max: f64,
) -> Result<PerturbationCoefficients> {
    let d = mu.len();
    for got in [mu_hat.len(), sigma_inv.dim(), sigma_hat_inv.dim()] {
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    if !(lambda_max > 0.0) {
        return Err(Error::DomainError(format!(
            "lambda_max must be positive, got {lambda_max}"
        )));
    }
    let a = spectral_norm(&sigma_inv.sub(sigma_hat_inv))?;
    let mu_norm = norm(mu);
    let mu_hat_norm = norm(mu_hat);
    let shift: Vec<f64> = mu.iter().zip(mu_hat).map(|(x, y)| x - y).collect();
    let shift_norm = norm(&shift);
    let inv_norm = spectral_norm(sigma_inv)?;
    let inv_hat_norm = spectral_norm(sigma_hat_inv)?;

    let b = (mu_hat_norm + mu_norm) * a + (inv_hat_norm + inv_norm) * shift_norm;
    let c = mu_norm * mu_norm * a + (mu_norm + mu_hat_norm) * inv_hat_norm * shift_norm;
    Ok(PerturbationCoefficients {
        a_coef: a,
        b_coef: b,
        c_coef: c,
        m_n: combine_m(a, b, c, lambda_max, mu_norm),
        lambda_max,
        mu_norm,
    })
}

/// `M x^2 + M x + M`.
pub fn delta_poly(m_n: f64, x: f64) -> f64 {
    m_n * x * x + m_n * x + m_n
}

/// `a_n`, `b_n` and the precondition flags for a given `M` and pivot.
pub fn log_ratio_bound(m_n: f64, r_pivot: f64) -> Result<LogRatioBound> {
    if !(r_pivot > 0.0) {
        return Err(Error::NonPositivePivot { value: r_pivot });
    }
    if !(m_n >= 0.0) {
        return Err(Error::DomainError(format!("M must be nonnegative, got {m_n}")));
    }
    let a_n = m_n + m_n / r_pivot + m_n / (r_pivot * r_pivot);
    let b_n = if a_n > 0.5 {
        std::f64::consts::LN_2
    } else {
        -(-a_n).ln_1p()
    };
    let m_lt_one = m_n < 1.0;
    let pivot_ok = m_lt_one && r_pivot > m_n / (2.0 * (1.0 - m_n));
    Ok(LogRatioBound {
        m_n,
        r_pivot,
        a_n,
        b_n,
        preconds: Preconditions {
            m_lt_one,
            pivot_ok,
            a_lt_one: a_n < 1.0,
            a_le_half: a_n <= 0.5,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub applicable: bool,
    pub violations: usize,
    /// `delta(R(l)) - |eps(l)|`; `None` when the bound does not apply.
    pub max_slack: Option<f64>,
}

/// Checks `|E(l)^2 - R(l)^2| <= delta(R(l))` at the 1-based index `l`.
///
/// Inputs are the ordered squared distances under the true and the estimated
/// parameters.
pub fn verify_epsilon_lemma(
    true_sq_dists: &OrderedDistances,
    est_sq_dists: &OrderedDistances,
    m_n: f64,
    l: usize,
) -> Result<EpsilonReport> {
    let n = true_sq_dists.len();
    if est_sq_dists.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: est_sq_dists.len(),
        });
    }
    if l < 1 || l > n {
        return Err(Error::KOutOfRange { k: l, n });
    }
    let r_sq = true_sq_dists.get(l);
    let r = r_sq.sqrt();
    let applicable = m_n < 1.0 && r > m_n / (2.0 * (1.0 - m_n));
    if !applicable {
        return Ok(EpsilonReport {
            applicable,
            violations: 0,
            max_slack: None,
        });
    }
    let e_sq = est_sq_dists.get(l);
    let eps = (e_sq - r_sq).abs();
    let bound = delta_poly(m_n, r);
    let slack = bound - eps;
    let allowance = ROUNDING_ALLOWANCE * r_sq.max(e_sq).max(1.0);
    Ok(EpsilonReport {
        applicable,
        violations: usize::from(slack < -allowance),
        max_slack: Some(slack),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRatioReport {
    pub applicable: bool,
    pub violations: usize,
    /// Largest `|log(E(i)/E(l)) - log(R(i)/R(l))|` over `i <= l`.
    pub max_ratio_gap: f64,
    /// `log(1 / (1 - a_n))`, or infinity when `a_n >= 1`.
    pub bound: f64,
}

/// Checks the log-ratio bound for every `1 <= i <= l` against the pivot `l`.
///
/// Only the first `l` order statistics enter, so only those must be positive.
pub fn verify_log_ratio_lemma(
    true_dists: &OrderedDistances,
    est_dists: &OrderedDistances,
    m_n: f64,
    l: usize,
) -> Result<LogRatioReport> {
    let n = true_dists.len();
    if est_dists.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: est_dists.len(),
        });
    }
    if l < 1 || l > n {
        return Err(Error::KOutOfRange { k: l, n });
    }
    for i in 0..l {
        if !(true_dists.values()[i] > 0.0) || !(est_dists.values()[i] > 0.0) {
            return Err(Error::NonPositiveDistance { index: i + 1 });
        }
    }
    let r_l = true_dists.get(l);
    let e_l = est_dists.get(l);
    let lr = log_ratio_bound(m_n, r_l)?;
    let applicable = lr.preconds.log_ratio_applicable();
    let bound = if lr.a_n < 1.0 {
        -(-lr.a_n).ln_1p()
    } else {
        f64::INFINITY
    };
    let (log_r_l, log_e_l) = (r_l.ln(), e_l.ln());
    let mut max_gap = 0.0_f64;
    let mut violations = 0;
    for i in 1..=l {
        let gap = ((est_dists.get(i).ln() - log_e_l) - (true_dists.get(i).ln() - log_r_l)).abs();
        max_gap = max_gap.max(gap);
        if applicable && gap > bound + ROUNDING_ALLOWANCE {
            violations += 1;
        }
    }
    Ok(LogRatioReport {
        applicable,
        violations,
        max_ratio_gap: max_gap,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::order_desc;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn coefficients_vanish_without_perturbation() {
        let inv = SquareMatrix::from_rows(&[[2.0, 0.3], [0.3, 1.0]]).unwrap();
        let c = perturbation_coefficients(&[1.0, -1.0], &inv, &[1.0, -1.0], &inv, 1.7).unwrap();
        assert_eq!((c.a_coef, c.b_coef, c.c_coef, c.m_n), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn coefficients_location_shift() {
        let id = SquareMatrix::identity(2);
        let c = perturbation_coefficients(&[0.0, 0.0], &id, &[0.1, 0.0], &id, 1.0).unwrap();
        assert_eq!(c.a_coef, 0.0);
        assert_relative_eq!(c.b_coef, 0.2, epsilon = 1e-15);
        assert_relative_eq!(c.c_coef, 0.01, epsilon = 1e-15);
        assert_relative_eq!(c.m_n, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn coefficients_scatter_shrink() {
        let id = SquareMatrix::identity(2);
        let c = perturbation_coefficients(&[0.0, 0.0], &id, &[0.0, 0.0], &id.scaled(0.9), 1.0)
            .unwrap();
        assert_relative_eq!(c.a_coef, 0.1, epsilon = 1e-14);
        assert_eq!((c.b_coef, c.c_coef), (0.0, 0.0));
        assert_relative_eq!(c.m_n, 0.1, epsilon = 1e-14);
    }

    #[test]
    fn coefficients_reject_bad_input() {
        let id = SquareMatrix::identity(2);
        assert!(matches!(
            perturbation_coefficients(&[0.0], &id, &[0.0, 0.0], &id, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(perturbation_coefficients(&[0.0, 0.0], &id, &[0.0, 0.0], &id, 0.0).is_err());
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_poly(0.0, 123.0), 0.0);
        assert_relative_eq!(delta_poly(0.1, 2.0), 0.7, epsilon = 1e-15);
        assert_eq!(delta_poly(1.0, 1.0), 3.0);
    }

    #[test]
    fn log_ratio_examples() {
        let z = log_ratio_bound(0.0, 3.0).unwrap();
        assert_eq!((z.a_n, z.b_n), (0.0, 0.0));
        assert!(z.preconds.m_lt_one && z.preconds.pivot_ok);
        assert!(z.preconds.a_lt_one && z.preconds.a_le_half);

        let b = log_ratio_bound(0.1, 10.0).unwrap();
        assert_relative_eq!(b.a_n, 0.111, epsilon = 1e-15);
        assert_relative_eq!(b.b_n, (1.0f64 / 0.889).ln(), epsilon = 1e-15);
        assert_relative_eq!(b.b_n, 0.117658, epsilon = 1e-6);
        assert!(b.preconds.pivot_ok);

        let c = log_ratio_bound(0.6, 1.0).unwrap();
        assert_relative_eq!(c.a_n, 1.8, epsilon = 1e-15);
        assert_eq!(c.b_n, std::f64::consts::LN_2);
        assert!(!c.preconds.a_lt_one && !c.preconds.a_le_half);

        let big = log_ratio_bound(1.5, 100.0).unwrap();
        assert!(!big.preconds.m_lt_one && !big.preconds.pivot_ok);

        assert!(log_ratio_bound(0.1, 0.0).is_err());
    }

    #[test]
    fn epsilon_lemma_trivial_cases() {
        let sq = order_desc(&[9.0, 4.0, 1.0]).unwrap();
        for l in 1..=3 {
            let r = verify_epsilon_lemma(&sq, &sq, 0.05, l).unwrap();
            assert!(r.applicable);
            assert_eq!(r.violations, 0);
        }
        let r = verify_epsilon_lemma(&sq, &sq, 1.0, 1).unwrap();
        assert!(!r.applicable);
        assert_eq!(r.violations, 0);
        assert_eq!(r.max_slack, None);

        let short = order_desc(&[1.0]).unwrap();
        assert!(matches!(
            verify_epsilon_lemma(&sq, &short, 0.1, 1),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn epsilon_lemma_detects_violation() {
        let truth = order_desc(&[9.0, 4.0, 1.0]).unwrap();
        let est = order_desc(&[9.0, 6.0, 1.0]).unwrap();
        // delta(2) with M = 0.1 is 0.7 < |6 - 4|
        let r = verify_epsilon_lemma(&truth, &est, 0.1, 2).unwrap();
        assert_eq!(r.violations, 1);
        assert!(r.max_slack.unwrap() < 0.0);
    }

    #[test]
    fn log_ratio_lemma_trivial_cases() {
        let d = order_desc(&[5.0, 3.0, 2.0, 1.0]).unwrap();
        let r = verify_log_ratio_lemma(&d, &d, 0.1, 3).unwrap();
        assert!(r.applicable);
        assert_eq!((r.violations, r.max_ratio_gap), (0, 0.0));

        let other = order_desc(&[7.0, 3.5, 2.0, 1.0]).unwrap();
        let r = verify_log_ratio_lemma(&d, &other, 0.1, 1).unwrap();
        assert_eq!(r.max_ratio_gap, 0.0);

        let zero = order_desc(&[5.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            verify_log_ratio_lemma(&zero, &zero, 0.1, 2),
            Err(Error::NonPositiveDistance { index: 2 })
        ));
    }

    proptest! {
        #[test]
        fn stored_m_is_recomputable(
            mu in proptest::collection::vec(-3.0f64..3.0, 2),
            shift in proptest::collection::vec(-0.2f64..0.2, 2),
            e in -0.2f64..0.2,
            lambda in 0.1f64..5.0,
        ) {
            let inv = SquareMatrix::from_rows(&[[1.5, 0.2], [0.2, 0.8]]).unwrap();
            let mut pert = inv.clone();
            pert[(0, 1)] += e;
            pert[(1, 0)] += e;
            let mu_hat: Vec<f64> = mu.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let c = perturbation_coefficients(&mu, &inv, &mu_hat, &pert, lambda).unwrap();
            prop_assert_eq!(c.m_n, combine_m(c.a_coef, c.b_coef, c.c_coef, c.lambda_max, c.mu_norm));
        }

        #[test]
        fn m_is_monotone(
            a in 0.0f64..2.0, b in 0.0f64..2.0, c in 0.0f64..2.0,
            da in 0.0f64..1.0, db in 0.0f64..1.0, dc in 0.0f64..1.0,
            lambda in 0.01f64..10.0, mu_norm in 0.0f64..5.0,
        ) {
            let base = combine_m(a, b, c, lambda, mu_norm);
            prop_assert!(combine_m(a + da, b, c, lambda, mu_norm) >= base);
            prop_assert!(combine_m(a, b + db, c, lambda, mu_norm) >= base);
            prop_assert!(combine_m(a, b, c + dc, lambda, mu_norm) >= base);
        }

        #[test]
        fn a_decreases_in_pivot(m in 1e-6f64..2.0, r in 0.01f64..100.0, dr in 1e-3f64..10.0) {
            let near = log_ratio_bound(m, r).unwrap();
            let far = log_ratio_bound(m, r + dr).unwrap();
            prop_assert!(far.a_n < near.a_n);
        }
    }

    #[test]
    fn b_dominates_a_up_to_half() {
        for i in 0..=500 {
            let a = 0.5 * i as f64 / 500.0;
            // choose M so that a_n = a at pivot 1: a = 3M
            let lr = log_ratio_bound(a / 3.0, 1.0).unwrap();
            assert!(lr.b_n >= lr.a_n, "a={a}");
        }
    }
}
