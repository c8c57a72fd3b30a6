use log::warn;

use crate::distributions::SampleMatrix;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, inverse_from_cholesky, SquareMatrix};

/// Result of Tyler's fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TylerShape {
    /// Shape matrix normalised to `trace = d`.
    pub shape: SquareMatrix,
    pub iterations: usize,
    /// Observations exactly equal to the location, excluded from the fit.
    pub dropped: usize,
}

/// Unbiased sample covariance, `1/(n-1) * sum (x - mean)(x - mean)ᵀ`.
pub fn sample_covariance(sample: &SampleMatrix) -> Result<SquareMatrix> {
    let n = sample.n();
    let d = sample.dim();
    if n < d + 1 {
        return Err(Error::DegenerateSample(format!(
            "covariance needs n >= d + 1 (n = {n}, d = {d})"
        )));
    }
    let mean = super::sample_mean(sample);
    let mut cov = SquareMatrix::zeros(d);
    let mut centred = vec![0.0; d];
    for row in sample.rows() {
        for ((c, x), m) in centred.iter_mut().zip(row).zip(&mean) {
            *c = x - m;
        }
        for i in 0..d {
            for j in 0..=i {
                cov[(i, j)] += centred[i] * centred[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    if cholesky(&cov).is_err() {
        return Err(Error::DegenerateSample(
            "sample covariance is not positive definite".into(),
        ));
    }
    Ok(cov)
}

/// Tyler's distribution-free shape estimator around a fixed location.
///
/// Iterates `V <- (d/n) * sum x xᵀ / (xᵀ V⁻¹ x)` over the centred rows,
/// rescaling to `trace(V) = d` after every step, until the largest entry
/// change drops below `tol`.
pub fn tyler_shape(
    sample: &SampleMatrix,
    mu_hat: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<TylerShape> {
    let d = sample.dim();
    if mu_hat.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: mu_hat.len(),
        });
    }
    let mut centred: Vec<f64> = Vec::with_capacity(sample.n() * d);
    let mut dropped = 0;
    for row in sample.rows() {
        if row.iter().zip(mu_hat).all(|(x, m)| x == m) {
            dropped += 1;
            continue;
        }
        centred.extend(row.iter().zip(mu_hat).map(|(x, m)| x - m));
    }
    if dropped > 0 {
        warn!("tyler_shape: dropped {dropped} observations equal to the location");
    }
    let n = centred.len() / d;
    if n <= d {
        return Err(Error::DegenerateSample(format!(
            "Tyler shape needs more than d = {d} usable observations, got {n}"
        )));
    }

    let mut v = SquareMatrix::identity(d);
    let scale = d as f64 / n as f64;
    for iter in 1..=max_iter {
        let l = cholesky(&v).map_err(|_| Error::SingularIterate { iteration: iter })?;
        let inv = inverse_from_cholesky(&l);
        let mut next = SquareMatrix::zeros(d);
        for x in centred.chunks_exact(d) {
            let q = inv.quadratic_form(x);
            if !(q > 0.0) {
                return Err(Error::SingularIterate { iteration: iter });
            }
            let w = 1.0 / q;
            for i in 0..d {
                let wi = w * x[i];
                for j in 0..=i {
                    next[(i, j)] += wi * x[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                next[(j, i)] = next[(i, j)];
            }
        }
        let next = next.scaled(scale);
        let tr = next.trace();
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::SingularIterate { iteration: iter });
        }
        let next = next.scaled(d as f64 / tr);
        let change = next.max_abs_diff(&v);
        v = next;
        if change < tol {
            cholesky(&v).map_err(|_| Error::SingularIterate { iteration: iter })?;
            return Ok(TylerShape {
                shape: v,
                iterations: iter,
                dropped,
            });
        }
    }
    Err(Error::NotConverged {
        method: "Tyler shape",
        iterations: max_iter,
        last: v.as_slice().to_vec(),
    })
}
