use crate::distributions::SampleMatrix;
use crate::error::{Error, Result};
use crate::linalg::norm;

/// Result of the Weiszfeld iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMedian {
    pub point: Vec<f64>,
    pub iterations: usize,
}

/// Coordinatewise arithmetic mean.
pub fn sample_mean(sample: &SampleMatrix) -> Vec<f64> {
    let d = sample.dim();
    let mut acc = vec![0.0; d];
    for row in sample.rows() {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    let n = sample.n() as f64;
    acc.into_iter().map(|a| a / n).collect()
}

fn coordinatewise_median(sample: &SampleMatrix) -> Vec<f64> {
    let n = sample.n();
    (0..sample.dim())
        .map(|j| {
            let mut col: Vec<f64> = sample.rows().map(|r| r[j]).collect();
            col.sort_by(|a, b| a.total_cmp(b));
            if n % 2 == 1 {
                col[n / 2]
            } else {
                0.5 * (col[n / 2 - 1] + col[n / 2])
            }
        })
        .collect()
}

/// Geometric median by the Weiszfeld iteration, started from the
/// coordinatewise median.
///
/// An iterate that lands on an observation uses the Vardi-Zhang update:
/// the coincident point contributes a subgradient ball of radius equal to its
/// multiplicity, and the step either stops there (when the pull of the other
/// points is inside the ball) or moves past it.
///
/// Stops once the sum of unit vectors toward the observations has norm at
/// most `d * tol * n`, or when the iterate is a floating-point fixed point.
pub fn spatial_median(sample: &SampleMatrix, tol: f64, max_iter: usize) -> Result<SpatialMedian> {
    let n = sample.n();
    let d = sample.dim();
    if n < 2 {
        return Err(Error::DegenerateSample(
            "spatial median needs at least two observations".into(),
        ));
    }
    let mut y = coordinatewise_median(sample);
    let scale = sample
        .rows()
        .map(|r| norm(&r.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>()))
        .fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Ok(SpatialMedian {
            point: y,
            iterations: 0,
        });
    }
    let collide = 1e-12 * scale;
    let grad_tol = d as f64 * tol * n as f64;

    for iter in 1..=max_iter {
        let mut num = vec![0.0; d];
        let mut denom = 0.0;
        let mut pull = vec![0.0; d];
        let mut coincident = 0usize;
        let mut diff = vec![0.0; d];
        for row in sample.rows() {
            for ((df, x), yv) in diff.iter_mut().zip(row).zip(&y) {
                *df = x - yv;
            }
            let dist = norm(&diff);
            if dist <= collide {
                coincident += 1;
                continue;
            }
            let w = 1.0 / dist;
            denom += w;
            for j in 0..d {
                num[j] += w * row[j];
                pull[j] += w * diff[j];
            }
        }
        if denom == 0.0 {
            // every observation coincides with y
            return Ok(SpatialMedian {
                point: y,
                iterations: iter,
            });
        }
        if coincident == 0 && norm(&pull) <= grad_tol {
            return Ok(SpatialMedian {
                point: y,
                iterations: iter,
            });
        }
        let target: Vec<f64> = num.iter().map(|v| v / denom).collect();
        let next: Vec<f64> = if coincident == 0 {
            target
        } else {
            let r = norm(&pull);
            let eta = coincident as f64;
            if r <= eta {
                return Ok(SpatialMedian {
                    point: y,
                    iterations: iter,
                });
            }
            let keep = eta / r;
            target
                .iter()
                .zip(&y)
                .map(|(t, yv)| (1.0 - keep) * t + keep * yv)
                .collect()
        };
        let step = norm(&next.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        y = next;
        if step == 0.0 {
            return Ok(SpatialMedian {
                point: y,
                iterations: iter,
            });
        }
    }
    Err(Error::NotConverged {
        method: "spatial median",
        iterations: max_iter,
        last: y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_elliptical, EllipticalModel, GeneratingVariateSpec};
    use crate::linalg::SquareMatrix;
    use crate::rng::RngStream;
    use rand::Rng;

    fn objective(sample: &SampleMatrix, m: &[f64]) -> f64 {
        sample
            .rows()
            .map(|r| norm(&r.iter().zip(m).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .sum()
    }

    #[test]
    fn mean_examples() {
        let one = SampleMatrix::from_rows(&[[3.0, -1.0]]).unwrap();
        assert_eq!(sample_mean(&one), vec![3.0, -1.0]);
        let two = SampleMatrix::from_rows(&[[0.0, 0.0], [2.0, 4.0]]).unwrap();
        assert_eq!(sample_mean(&two), vec![1.0, 2.0]);
        let sym = SampleMatrix::from_rows(&[[1.5, 2.0], [0.5, 3.0], [1.0, 2.5], [1.0, 2.5]])
            .unwrap();
        let m = sample_mean(&sym);
        assert!((m[0] - 1.0).abs() < 1e-12 && (m[1] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn two_points_give_midpoint() {
        let s = SampleMatrix::from_rows(&[[0.0, 0.0], [4.0, 2.0]]).unwrap();
        let m = spatial_median(&s, 1e-10, 500).unwrap();
        assert_eq!(m.point, vec![2.0, 1.0]);
    }

    #[test]
    fn symmetric_configurations() {
        let h = 3f64.sqrt() / 2.0;
        let tri = SampleMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let m = spatial_median(&tri, 1e-12, 5000).unwrap();
        assert!((m.point[0] - 0.5).abs() < 1e-8);
        assert!((m.point[1] - h / 3.0).abs() < 1e-8);

        let square = SampleMatrix::from_rows(&[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]])
            .unwrap();
        let m = spatial_median(&square, 1e-10, 500).unwrap();
        assert!((m.point[0] - 5.0).abs() < 1e-8 && (m.point[1] - 5.0).abs() < 1e-8);
    }

    #[test]
    fn median_at_a_data_point() {
        // The centre point is the median: the other three pull with total
        // force < 1.
        let s = SampleMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [-0.5, 0.8], [-0.5, -0.8]])
            .unwrap();
        let m = spatial_median(&s, 1e-12, 2000).unwrap();
        assert!(norm(&m.point) < 1e-8, "{:?}", m.point);
    }

    #[test]
    fn unit_vector_sum_vanishes() {
        let model = EllipticalModel::new(
            vec![3.0, -2.0],
            SquareMatrix::from_diagonal(&[4.0, 1.0]),
            GeneratingVariateSpec::pareto(3.0, 1.0).unwrap(),
        )
        .unwrap();
        let (s, _) = sample_elliptical(&model, 500, &mut RngStream::new(8, 0).generator()).unwrap();
        let tol = 1e-10;
        let m = spatial_median(&s, tol, 5000).unwrap();
        let mut g = [0.0; 2];
        for r in s.rows() {
            let diff = [r[0] - m.point[0], r[1] - m.point[1]];
            let dn = norm(&diff);
            g[0] += diff[0] / dn;
            g[1] += diff[1] / dn;
        }
        assert!(norm(&g) <= 2.0 * tol * 500.0, "gradient {g:?}");
    }

    #[test]
    fn objective_is_locally_minimal() {
        let model = EllipticalModel::new(
            vec![0.0, 0.0, 0.0],
            SquareMatrix::identity(3),
            GeneratingVariateSpec::frechet(1.5).unwrap(),
        )
        .unwrap();
        let mut rng = RngStream::new(9, 0).generator();
        let (s, _) = sample_elliptical(&model, 300, &mut rng).unwrap();
        let m = spatial_median(&s, 1e-10, 5000).unwrap();
        let best = objective(&s, &m.point);
        for _ in 0..100 {
            let dir: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dn = norm(&dir);
            let probe: Vec<f64> = m.point.iter().zip(&dir).map(|(p, v)| p + 1e-3 * v / dn).collect();
            assert!(objective(&s, &probe) >= best);
        }
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let h = 3f64.sqrt() / 2.0;
        let tri = SampleMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        match spatial_median(&tri, 1e-15, 1) {
            Err(Error::NotConverged { iterations, last, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(last.len(), 2);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }
}
