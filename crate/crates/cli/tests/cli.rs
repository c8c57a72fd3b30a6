use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sephill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sephill"))
        .args(args)
        .env_remove("SEPHILL_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let out = sephill(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for f in [&a, &b] {
        ok(&["simulate", "--family", "pareto", "--alpha", "5", "--dim", "3", "--n", "100", "--seed", "7", "--out", p(f)]);
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    assert_eq!(text.lines().count(), 100);
    assert!(!text.contains('\r'));
    assert!(text.lines().all(|l| l.split(',').count() == 3));

    let manifest = json(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap());
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["base_seed"], 7);
    assert!(manifest["timestamp"].is_string());
}

#[test]
fn seed_falls_back_to_environment() {
    let flagged = ok(&["simulate", "--family", "frechet", "--alpha", "2", "--dim", "2", "--n", "20", "--seed", "41"]);
    let env = Command::new(env!("CARGO_BIN_EXE_sephill"))
        .args(["simulate", "--family", "frechet", "--alpha", "2", "--dim", "2", "--n", "20"])
        .env("SEPHILL_SEED", "41")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), flagged);
    let other = ok(&["simulate", "--family", "frechet", "--alpha", "2", "--dim", "2", "--n", "20", "--seed", "42"]);
    assert_ne!(other, flagged);
}

#[test]
fn fixed_radius_places_rows_on_the_sphere() {
    let text = ok(&[
        "simulate", "--family", "pareto", "--alpha", "2", "--dim", "2", "--n", "1", "--mu", "0,0",
        "--sigma", "identity", "--fixed-radius", "3.5", "--seed", "1",
    ]);
    let row: Vec<f64> = text.trim().split(',').map(|v| v.parse().unwrap()).collect();
    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((norm - 3.5).abs() < 1e-12);
}

#[test]
fn simulate_validation() {
    let out = sephill(&["simulate", "--family", "pareto", "--alpha", "0", "--dim", "3", "--n", "10"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--alpha"));

    let out = sephill(&["simulate", "--family", "t-radial", "--dim", "3", "--n", "10"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--nu"));

    let out = sephill(&["simulate", "--alpha", "2", "--dim", "3", "--n", "10", "--mu", "1,2"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--mu"));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no/such/dir/x.csv");
    let out = sephill(&["simulate", "--alpha", "2", "--dim", "2", "--n", "10", "--out", p(&missing)]);
    assert_eq!(code(&out), 3);

    let out = sephill(&["simulate", "--alpha", "2", "--dim", "2", "--n", "10", "--sigma", p(&dir.path().join("gone.csv"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn simulate_then_estimate_recovers_library_value() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("sigma.csv");
    fs::write(&sigma, "2,0.5,0\n0.5,1,0.2\n0,0.2,1.5\n").unwrap();
    let data = dir.path().join("x.csv");
    let radii = dir.path().join("r.csv");
    ok(&[
        "simulate", "--family", "t-radial", "--nu", "3", "--dim", "3", "--n", "400", "--mu", "1,-2,0.5",
        "--sigma", p(&sigma), "--seed", "19", "--out", p(&data), "--radii-out", p(&radii), "--header",
    ]);
    let text = fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("x1,x2,x3\n"));

    let out = json(&ok(&[
        "estimate", "--data", p(&data), "--k-list", "10,20", "--mu", "1,-2,0.5", "--sigma", p(&sigma),
    ]));
    assert_eq!(out["n"], 400);
    assert_eq!(out["d"], 3);
    assert_eq!(out["method"], "known");

    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let sample = sephill::SampleMatrix::from_rows(&rows).unwrap();
    let s = sephill::SquareMatrix::from_rows(&[[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 1.5]]).unwrap();
    for (i, k) in [10, 20].into_iter().enumerate() {
        let lib = sephill::separating_hill(&sample, &[1.0, -2.0, 0.5], &s, k).unwrap();
        assert_eq!(out["estimates"][i]["k"], k);
        assert_eq!(out["estimates"][i]["gamma_hat"].as_f64().unwrap(), lib.gamma_hat);
    }

    let r: Vec<f64> = fs::read_to_string(&radii).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    let lib = sephill::univariate_hill(&sephill::order_desc(&r).unwrap(), 10).unwrap();
    assert!((out["estimates"][0]["gamma_hat"].as_f64().unwrap() - lib.gamma_hat).abs() < 1e-10);

    for method in ["mean-cov", "median-tyler"] {
        let est = json(&ok(&["estimate", "--data", p(&data), "--k", "15", "--method", method]));
        assert_eq!(est["method"], method);
        assert_eq!(est["mu_hat"].as_array().unwrap().len(), 3);
        assert!(est["estimates"][0]["gamma_hat"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn estimate_hand_example_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("h.csv");
    fs::write(&data, "8\n4\n2\n1\n").unwrap();
    let out = json(&ok(&["estimate", "--data", p(&data), "--k", "2", "--mu", "0", "--sigma", "identity"]));
    let g = out["estimates"][0]["gamma_hat"].as_f64().unwrap();
    assert!((g - 1.5 * 2f64.ln()).abs() < 1e-12);
    assert!((g - 1.039721).abs() < 1e-6);

    assert_eq!(code(&sephill(&["estimate", "--data", p(&data), "--k", "4", "--mu", "0", "--sigma", "identity"])), 2);
    assert_eq!(code(&sephill(&["estimate", "--data", p(&data), "--k", "2", "--mu", "0"])), 2);

    let small = dir.path().join("s.csv");
    fs::write(&small, "1,2,3\n4,5,6\n7,8,10\n").unwrap();
    let out = sephill(&["estimate", "--data", p(&small), "--k", "1", "--method", "median-tyler"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));

    let flat = dir.path().join("f.csv");
    fs::write(&flat, "1,1\n2,2\n3,3\n4,4\n").unwrap();
    assert_eq!(code(&sephill(&["estimate", "--data", p(&flat), "--k", "1"])), 4);

    let bad = dir.path().join("b.csv");
    fs::write(&bad, "1,2\n3\n").unwrap();
    assert_eq!(code(&sephill(&["estimate", "--data", p(&bad), "--k", "1"])), 2);
    assert_eq!(code(&sephill(&["estimate", "--data", p(&dir.path().join("none.csv")), "--k", "1"])), 3);
}

#[test]
fn hillplot_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.csv");
    fs::write(&data, "16\n8\n4\n2\n1\n").unwrap();
    let base = ["hillplot", "--data", p(&data), "--mu", "0", "--sigma", "identity"];
    let text = ok(&[&base[..], &["--k-min", "1", "--k-max", "3", "--k-step", "2"]].concat());
    let rows: Vec<(usize, f64)> = text
        .lines()
        .map(|l| {
            let (k, g) = l.split_once(',').unwrap();
            (k.parse().unwrap(), g.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].0, 1);
    assert!((rows[0].1 - std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(rows[1].0, 3);
    assert!((rows[1].1 - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);

    let single = ok(&[&base[..], &["--k-min", "2", "--k-max", "2"]].concat());
    let est = json(&ok(&["estimate", "--data", p(&data), "--k", "2", "--mu", "0", "--sigma", "identity"]));
    let g: f64 = single.trim().split_once(',').unwrap().1.parse().unwrap();
    assert_eq!(g, est["estimates"][0]["gamma_hat"].as_f64().unwrap());

    assert_eq!(code(&sephill(&[&base[..], &["--k-min", "3", "--k-max", "2"]].concat())), 2);
    assert_eq!(code(&sephill(&[&base[..], &["--k-min", "1", "--k-max", "3", "--k-step", "0"]].concat())), 2);
    assert_eq!(code(&sephill(&[&base[..], &["--k-min", "1", "--k-max", "5"]].concat())), 2);
}

#[test]
fn verify_bounds_reports() {
    let zero = json(&ok(&["verify-bounds", "--trials", "40", "--n", "100", "--alpha", "3", "--perturbation-scale", "0", "--seed", "1"]));
    assert_eq!(zero["trials"], 40);
    assert_eq!(zero["violations"], 0);
    assert_eq!(zero["max_ratio_gap"].as_f64(), Some(0.0));
    assert_eq!(zero["applicable_count"], zero["checks"]);

    let small = json(&ok(&["verify-bounds", "--trials", "200", "--n", "100", "--alpha", "3", "--perturbation-scale", "0.005", "--seed", "2"]));
    assert_eq!(small["violations"], 0);
    assert!(small["applicable_count"].as_u64().unwrap() > 0);
    assert!(small["bound_stats"]["m_n_min"].as_f64().unwrap() < 1.0);

    let huge = json(&ok(&["verify-bounds", "--trials", "40", "--n", "100", "--family", "t-radial", "--nu", "3", "--perturbation-scale", "80", "--seed", "3"]));
    assert_eq!(huge["applicable_count"], 0);

    assert_eq!(code(&sephill(&["verify-bounds", "--trials", "0", "--alpha", "3"])), 2);
    assert_eq!(code(&sephill(&["verify-bounds", "--alpha", "3", "--perturbation-scale", "-1"])), 2);
}

const EXPERIMENT: [&str; 14] = [
    "experiment", "--alpha", "5", "--dim", "3", "--mu", "1,2,3", "--n-values", "300,1200",
    "--replications", "30", "--seed", "8", "--method",
];

#[test]
fn experiment_is_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for w in ["1", "8"] {
        let out = dir.path().join(format!("w{w}.json"));
        let rec = dir.path().join(format!("w{w}.csv"));
        ok(&[&EXPERIMENT[..], &["mean-cov", "--workers", w, "--out", p(&out), "--records-out", p(&rec)]].concat());
        outputs.push((fs::read(&out).unwrap(), fs::read(&rec).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let agg = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(!agg.contains("timestamp"));
    let manifest = json(&fs::read_to_string(dir.path().join("w1.json.manifest.json")).unwrap());
    assert_eq!(manifest["config"]["workers"], 1);
    assert_eq!(manifest["base_seed"], 8);

    let records = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert_eq!(records.lines().count(), 61);
    assert!(records.lines().all(|l| l.split(',').count() == 15));
}

#[test]
fn single_replication_aggregates_equal_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("r.csv");
    let out = json(&ok(&[
        "experiment", "--alpha", "4", "--dim", "2", "--n-values", "500", "--replications", "1",
        "--method", "median-tyler", "--seed", "5", "--records-out", p(&rec),
    ]));
    let text = fs::read_to_string(&rec).unwrap();
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let gamma_est: f64 = fields[5].parse().unwrap();
    let norm_err: f64 = fields[6].parse().unwrap();
    let agg = &out["aggregates"][0];
    assert_eq!(agg["replications"], 1);
    assert_eq!(agg["mean_gamma_hat"].as_f64().unwrap(), gamma_est);
    for key in ["mean", "median", "q05", "q95"] {
        assert_eq!(agg[key].as_f64().unwrap(), norm_err, "{key}");
    }
    assert_eq!(agg["sd"].as_f64(), Some(0.0));
}

#[test]
fn experiment_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{
  "model": {"mu": [0, 1], "sigma": [[1, 0.3], [0.3, 2]], "variate": {"family": "pareto", "alpha": 3}},
  "n_values": [400],
  "k_rule": {"explicit": [20]},
  "estimator_method": "sample_mean_cov",
  "replications": 20,
  "base_seed": 77
}"#,
    )
    .unwrap();
    let a = ok(&["experiment", "--config", p(&cfg), "--workers", "2"]);
    let v = json(&a);
    assert_eq!(v["config"]["base_seed"], 77);
    assert_eq!(v["aggregates"][0]["k"], 20);
    assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
    let b = ok(&["experiment", "--config", p(&cfg), "--seed", "78"]);
    assert_ne!(a, b);

    fs::write(&cfg, "{\"model\": 1}").unwrap();
    assert_eq!(code(&sephill(&["experiment", "--config", p(&cfg)])), 2);
}

#[test]
fn experiment_exit_codes() {
    let out = sephill(&[&EXPERIMENT[..], &["mean-cov", "--replications", "0"]].concat());
    assert_eq!(code(&out), 2);
    let out = sephill(&[&EXPERIMENT[..], &["mean-cov", "--k-list", "10"]].concat());
    assert_eq!(code(&out), 2);
    let out = sephill(&["experiment", "--alpha", "2", "--dim", "2", "--n-values", "100", "--beta", "1.5"]);
    assert_eq!(code(&out), 2);
    let out = sephill(&[
        "experiment", "--alpha", "2", "--dim", "5", "--n-values", "4", "--replications", "10",
        "--method", "median-tyler",
    ]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
    assert!(stderr(&out).contains("cap"));
}
