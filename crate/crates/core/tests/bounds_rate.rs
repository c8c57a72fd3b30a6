use sephill::bounds::log_ratio_bound;
use sephill::distributions::sample_variate;
use sephill::montecarlo::k_schedule;
use sephill::{order_desc, GeneratingVariateSpec, RngStream};

const C: f64 = 0.1;

fn scaled_b(n: usize, spec: &GeneratingVariateSpec) -> f64 {
    let mut rng = RngStream::new(404, n as u64).generator();
    let radii: Vec<f64> = (0..n).map(|_| sample_variate(spec, &mut rng)).collect();
    let k = k_schedule(n, 0.5).unwrap();
    let pivot = order_desc(&radii).unwrap().get(k + 1);
    let m_n = C / (n as f64).sqrt();
    let lr = log_ratio_bound(m_n, pivot).unwrap();
    assert!(lr.preconds.gap_applicable(), "n = {n}");
    (k as f64).sqrt() * lr.b_n
}

#[test]
fn root_k_b_vanishes_under_root_n_perturbations() {
    for spec in [
        GeneratingVariateSpec::pareto(2.0, 1.0).unwrap(),
        GeneratingVariateSpec::frechet(3.0).unwrap(),
        GeneratingVariateSpec::t_radial(3.0, 3).unwrap(),
    ] {
        let seq: Vec<f64> = [100, 1_000, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&n| scaled_b(n, &spec))
            .collect();
        for w in seq.windows(2) {
            assert!(w[1] < w[0], "{}: {seq:?}", spec.name());
        }
        assert!(seq[4] < 0.01, "{}: {seq:?}", spec.name());
    }
}
