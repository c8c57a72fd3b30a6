//! Synthetic elliptical data.
//!
//! An elliptical observation is `mu + R * L * u` where `L` is the Cholesky
//! factor of the scatter matrix, `u` is uniform on the unit sphere and `R` is
//! a positive generating variate. The Mahalanobis distance of the observation
//! from `mu` under the scatter is exactly `R`, which the tests lean on.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, SquareMatrix};

/// Second-order tail behaviour of a generating variate, where analytically
/// known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondOrder {
    /// `U(y)` is an exact power of `y`; the Hill estimator is unbiased and the
    /// limit bias is zero (the `rho = -inf` case).
    Exact,
    Known { rho: f64, lambda: f64 },
}

impl SecondOrder {
    /// Mean of the normal limit of `sqrt(k) * (gamma_hat - gamma)`.
    pub fn limit_bias(&self) -> f64 {
        match *self {
            SecondOrder::Exact => 0.0,
            SecondOrder::Known { rho, lambda } => lambda / (1.0 - rho),
        }
    }
}

/// Law of the radial part `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GeneratingVariateSpec {
    /// `P(R > x) = (x / x_m)^(-alpha)` for `x >= x_m`.
    Pareto {
        alpha: f64,
        #[serde(default = "one")]
        x_m: f64,
    },
    /// `P(R <= x) = exp(-x^(-alpha))`.
    Frechet { alpha: f64 },
    /// Radial part of a multivariate Student t: `R = |Z| / sqrt(W / nu)` with
    /// `Z ~ N(0, I_dim)` and `W ~ chi^2(nu)`, so `R^2 / dim ~ F(dim, nu)`.
    TRadial { nu: f64, dim: usize },
}

fn one() -> f64 {
    1.0
}

impl GeneratingVariateSpec {
    pub fn pareto(alpha: f64, x_m: f64) -> Result<Self> {
        let spec = Self::Pareto { alpha, x_m };
        spec.validate()?;
        Ok(spec)
    }

    pub fn frechet(alpha: f64) -> Result<Self> {
        let spec = Self::Frechet { alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn t_radial(nu: f64, dim: usize) -> Result<Self> {
        let spec = Self::TRadial { nu, dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::DomainError(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            Self::Pareto { alpha, x_m } => {
                positive("alpha", alpha)?;
                positive("x_m", x_m)
            }
            Self::Frechet { alpha } => positive("alpha", alpha),
            Self::TRadial { nu, dim } => {
                positive("nu", nu)?;
                if dim == 0 {
                    return Err(Error::DomainError("dim must be at least 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Extreme value index of `R`.
    pub fn gamma(&self) -> f64 {
        match *self {
            Self::Pareto { alpha, .. } | Self::Frechet { alpha } => 1.0 / alpha,
            Self::TRadial { nu, .. } => 1.0 / nu,
        }
    }

    /// Only the Pareto family has a known second-order structure here.
    pub fn second_order(&self) -> Option<SecondOrder> {
        match self {
            Self::Pareto { .. } => Some(SecondOrder::Exact),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Pareto { .. } => "pareto",
            Self::Frechet { .. } => "frechet",
            Self::TRadial { .. } => "t-radial",
        }
    }

    /// `P(R > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Self::Pareto { alpha, x_m } => {
                if x <= x_m {
                    1.0
                } else {
                    (x / x_m).powf(-alpha)
                }
            }
            Self::Frechet { alpha } => {
                if x <= 0.0 {
                    1.0
                } else {
                    -(-x.powf(-alpha)).exp_m1()
                }
            }
            Self::TRadial { nu, dim } => {
                if x <= 0.0 {
                    1.0
                } else {
                    let r2 = x * x;
                    beta_reg(0.5 * nu, 0.5 * dim as f64, nu / (nu + r2))
                }
            }
        }
    }

    /// `P(R <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Pareto { .. } => 1.0 - self.survival(x),
            Self::Frechet { alpha } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-x.powf(-alpha)).exp()
                }
            }
            Self::TRadial { nu, dim } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let r2 = x * x;
                    beta_reg(0.5 * dim as f64, 0.5 * nu, r2 / (nu + r2))
                }
            }
        }
    }

    /// Inverse-CDF transform for the families that have a closed form.
    /// `v` is a uniform draw on `(0, 1)`.
    pub fn from_uniform(&self, v: f64) -> Option<f64> {
        match *self {
            Self::Pareto { alpha, x_m } => Some(x_m * (1.0 - v).powf(-1.0 / alpha)),
            Self::Frechet { alpha } => Some((-v.ln()).powf(-1.0 / alpha)),
            Self::TRadial { .. } => None,
        }
    }
}

/// Tail quantile function `U(y) = F⁻¹(1 - 1/y)` for `y >= 1`.
pub fn quantile_u(spec: &GeneratingVariateSpec, y: f64) -> Result<f64> {
    if !(y >= 1.0) || !y.is_finite() {
        return Err(Error::DomainError(format!("U(y) needs y >= 1, got {y}")));
    }
    let q = match *spec {
        GeneratingVariateSpec::Pareto { alpha, x_m } => x_m * y.powf(1.0 / alpha),
        GeneratingVariateSpec::Frechet { alpha } => {
            if y == 1.0 {
                0.0
            } else {
                (-(-1.0 / y).ln_1p()).powf(-1.0 / alpha)
            }
        }
        GeneratingVariateSpec::TRadial { .. } => invert_survival(spec, 1.0 / y),
    };
    Ok(q)
}

/// Solves `P(R > x) = p` by bisection on a bracket grown geometrically.
fn invert_survival(spec: &GeneratingVariateSpec, p: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while spec.survival(hi) > p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spec.survival(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Location, scatter and radial law of an elliptical distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelParams", into = "ModelParams")]
pub struct EllipticalModel {
    mu: Vec<f64>,
    sigma: SquareMatrix,
    variate: GeneratingVariateSpec,
    lambda_chol: SquareMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelParams {
    mu: Vec<f64>,
    sigma: SquareMatrix,
    variate: GeneratingVariateSpec,
}

impl TryFrom<ModelParams> for EllipticalModel {
    type Error = Error;

    fn try_from(p: ModelParams) -> Result<Self> {
        Self::new(p.mu, p.sigma, p.variate)
    }
}

impl From<EllipticalModel> for ModelParams {
    fn from(m: EllipticalModel) -> Self {
        ModelParams {
            mu: m.mu,
            sigma: m.sigma,
            variate: m.variate,
        }
    }
}

impl EllipticalModel {
    pub fn new(mu: Vec<f64>, sigma: SquareMatrix, variate: GeneratingVariateSpec) -> Result<Self> {
        variate.validate()?;
        if sigma.dim() != mu.len() {
            return Err(Error::DimensionMismatch {
                expected: mu.len(),
                got: sigma.dim(),
            });
        }
        if let GeneratingVariateSpec::TRadial { dim, .. } = variate {
            if dim != mu.len() {
                return Err(Error::DimensionMismatch {
                    expected: mu.len(),
                    got: dim,
                });
            }
        }
        if let Some(index) = mu.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let lambda_chol = cholesky(&sigma)?;
        Ok(Self {
            mu,
            sigma,
            variate,
            lambda_chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &SquareMatrix {
        &self.sigma
    }

    pub fn variate(&self) -> &GeneratingVariateSpec {
        &self.variate
    }

    pub fn lambda_chol(&self) -> &SquareMatrix {
        &self.lambda_chol
    }

    /// `mu + r * L u`.
    pub fn compose(&self, r: f64, u: &[f64]) -> Vec<f64> {
        let lu = self.lambda_chol.mat_vec(u);
        self.mu.iter().zip(lu).map(|(m, v)| m + r * v).collect()
    }
}

/// `n` observations in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn from_row_major(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::DegenerateSample("empty sample".into()));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(n, d, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Applies `x -> A x + b` to every row.
    pub fn affine_map(&self, a: &SquareMatrix, b: &[f64]) -> Result<Self> {
        if a.dim() != self.d || b.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: a.dim(),
            });
        }
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.rows() {
            let ax = a.mat_vec(row);
            data.extend(ax.iter().zip(b).map(|(x, y)| x + y));
        }
        Self::from_row_major(self.n, self.d, data)
    }
}

/// Uniform point on the unit sphere in `R^d` (normalised Gaussian vector).
pub fn sample_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vec<f64>> {
    if d < 1 {
        return Err(Error::DomainError("sphere dimension must be >= 1".into()));
    }
    loop {
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = crate::linalg::norm(&z);
        if norm > 0.0 && norm.is_finite() {
            return Ok(z.into_iter().map(|v| v / norm).collect());
        }
    }
}

/// One draw of the generating variate.
pub fn sample_variate<R: Rng + ?Sized>(spec: &GeneratingVariateSpec, rng: &mut R) -> f64 {
    match *spec {
        GeneratingVariateSpec::TRadial { nu, dim } => {
            let z2: f64 = (0..dim)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z * z
                })
                .sum();
            // nu > 0 was validated, so the chi-square law exists.
            let chi = ChiSquared::new(nu).expect("validated degrees of freedom");
            loop {
                let w: f64 = chi.sample(rng);
                if w > 0.0 {
                    return (z2 / (w / nu)).sqrt();
                }
            }
        }
        _ => {
            let v: f64 = rng.sample(Open01);
            spec.from_uniform(v).expect("closed-form family")
        }
    }
}

/// `n` draws from `model` together with their true radii.
pub fn sample_elliptical<R: Rng + ?Sized>(
    model: &EllipticalModel,
    n: usize,
    rng: &mut R,
) -> Result<(SampleMatrix, Vec<f64>)> {
    if n < 1 {
        return Err(Error::DomainError("sample size must be >= 1".into()));
    }
    let d = model.dim();
    let mut data = Vec::with_capacity(n * d);
    let mut radii = Vec::with_capacity(n);
    for _ in 0..n {
        let u = sample_sphere(d, rng)?;
        let r = sample_variate(&model.variate, rng);
        data.extend(model.compose(r, &u));
        radii.push(r);
    }
    Ok((SampleMatrix::from_row_major(n, d, data)?, radii))
}
