//! Shared fixtures for the benchmarks.

use sephill::montecarlo::ExperimentConfig;
use sephill::{
    sample_elliptical, EllipticalModel, EstimatorMethod, GeneratingVariateSpec, KRule, RngStream,
    SampleMatrix, SquareMatrix,
};

pub fn reference_model() -> EllipticalModel {
    EllipticalModel::new(
        vec![1.0, 2.0, 3.0],
        SquareMatrix::from_rows(&[[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 1.5]])
            .expect("square"),
        GeneratingVariateSpec::pareto(5.0, 1.0).expect("valid alpha"),
    )
    .expect("positive definite")
}

pub fn reference_sample(n: usize) -> SampleMatrix {
    let mut rng = RngStream::new(7, 0).generator();
    sample_elliptical(&reference_model(), n, &mut rng)
        .expect("valid model")
        .0
}

pub fn reference_experiment(n: usize, method: EstimatorMethod) -> ExperimentConfig {
    ExperimentConfig {
        model: reference_model(),
        n_values: vec![n],
        k_rule: KRule::Beta(0.5),
        estimator_method: method,
        replications: 1,
        base_seed: 7,
    }
}
