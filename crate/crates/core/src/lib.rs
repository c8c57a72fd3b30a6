//! Tail index estimation for heavy-tailed elliptical distributions.
//!
//! The crate implements the separating Hill estimator: the Hill estimator
//! applied to Mahalanobis distances of a multivariate sample. Location and
//! scatter may be known or estimated; [`bounds`] quantifies how much
//! estimation can move the estimate and [`montecarlo`] runs replicated
//! experiments that check consistency and asymptotic normality empirically.
//!
//! ```
//! use sephill::{separating_hill, SampleMatrix, SquareMatrix};
//!
//! let sample = SampleMatrix::from_rows(&[[8.0, 0.0], [0.0, 4.0], [-2.0, 0.0], [0.0, -1.0]])?;
//! let est = separating_hill(&sample, &[0.0, 0.0], &SquareMatrix::identity(2), 2)?;
//! assert!((est.gamma_hat - 1.5 * 2f64.ln()).abs() < 1e-12);
//! # Ok::<(), sephill::Error>(())
//! ```

pub mod bounds;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod montecarlo;
pub mod rng;

pub use bounds::{PerturbationBound, PerturbationCoefficients};
pub use distributions::{
    quantile_u, sample_elliptical, EllipticalModel, GeneratingVariateSpec, SampleMatrix,
    SecondOrder,
};
pub use error::{Error, Result};
pub use estimators::{
    estimate_location_scatter, hill_plot, mahalanobis, order_desc, separating_hill,
    univariate_hill, HillEstimate, IterationOptions, LocationScatterEstimate, OrderedDistances,
    ScatterMethod,
};
pub use linalg::SquareMatrix;
pub use montecarlo::{
    run_experiment, run_replication, EstimatorMethod, ExperimentConfig, ExperimentResult, KRule,
    ReplicationRecord,
};
pub use rng::RngStream;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
