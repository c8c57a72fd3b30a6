use std::io::Write;
use std::path::Path;

use serde::Serialize;

use sephill::distributions::sample_sphere;
use sephill::estimators::known_location_scatter;
use sephill::montecarlo::{run_bound_trials, BoundTrialConfig};
use sephill::{
    estimate_location_scatter, hill_plot, run_experiment, sample_elliptical, EllipticalModel,
    EstimatorMethod, ExperimentConfig, ExperimentResult, GeneratingVariateSpec, IterationOptions,
    KRule, LocationScatterEstimate, RngStream, SampleMatrix, ScatterMethod, SquareMatrix,
};

use crate::args::{
    DataArgs, EstimateArgs, ExperimentArgs, ExperimentMethod, Family, HillplotArgs, Method,
    SimulateArgs, VariateArgs, VerifyBoundsArgs,
};
use crate::error::{CliError, CliResult};
use crate::format::{fmt17, to_json};
use crate::io::{
    format_rows, load_sigma, parse_list, parse_usize_list, read_sample, read_text, write_text,
};
use crate::manifest::RunManifest;

/// Seed used when neither `--seed` nor `SEPHILL_SEED` is set.
pub const DEFAULT_SEED: u64 = 0;

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn positive(flag: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!("{flag} must be a positive finite number, got {v}")))
    }
}

fn variate(v: &VariateArgs, dim: usize) -> CliResult<GeneratingVariateSpec> {
    let alpha = || {
        v.alpha
            .ok_or_else(|| CliError::config("--alpha is required for this --family"))
            .and_then(|a| positive("--alpha", a))
    };
    let spec = match v.family {
        Family::Pareto => GeneratingVariateSpec::pareto(alpha()?, positive("--x-m", v.x_m)?)?,
        Family::Frechet => GeneratingVariateSpec::frechet(alpha()?)?,
        Family::TRadial => {
            let nu = v
                .nu
                .ok_or_else(|| CliError::config("--nu is required for --family t-radial"))?;
            GeneratingVariateSpec::t_radial(positive("--nu", nu)?, dim)?
        }
    };
    Ok(spec)
}

fn location(mu: Option<&str>, dim: usize) -> CliResult<Vec<f64>> {
    match mu {
        None => Ok(vec![0.0; dim]),
        Some(text) => {
            let mu = parse_list("--mu", text)?;
            if mu.len() != dim {
                return Err(CliError::config(format!(
                    "--mu has {} entries but the dimension is {dim}",
                    mu.len()
                )));
            }
            Ok(mu)
        }
    }
}

fn model(
    variate_args: &VariateArgs,
    dim: usize,
    mu: Option<&str>,
    sigma: &str,
) -> CliResult<EllipticalModel> {
    if dim == 0 {
        return Err(CliError::config("--dim must be at least 1"));
    }
    let spec = variate(variate_args, dim)?;
    let mu = location(mu, dim)?;
    let sigma = load_sigma(sigma, Some(dim))?;
    EllipticalModel::new(mu, sigma, spec).map_err(|e| CliError::config(format!("--sigma: {e}")))
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    model: &'a EllipticalModel,
    n: usize,
    header: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_radius: Option<f64>,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    if args.n == 0 {
        return Err(CliError::config("--n must be at least 1"));
    }
    let model = model(&args.variate, args.dim, args.mu.as_deref(), &args.sigma)?;
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let mut rng = RngStream::new(seed, 0).generator();
    let (sample, radii) = match args.fixed_radius {
        Some(r) => {
            let r = positive("--fixed-radius", r)?;
            let mut data = Vec::with_capacity(args.n * args.dim);
            for _ in 0..args.n {
                let u = sample_sphere(args.dim, &mut rng)?;
                data.extend(model.compose(r, &u));
            }
            (SampleMatrix::from_row_major(args.n, args.dim, data)?, vec![r; args.n])
        }
        None => sample_elliptical(&model, args.n, &mut rng)?,
    };

    let header: Option<Vec<String>> = args
        .header
        .then(|| (1..=args.dim).map(|i| format!("x{i}")).collect());
    emit(args.out.as_deref(), &format_rows(sample.rows(), header.as_deref()))?;
    if let Some(p) = &args.radii_out {
        write_text(p, &format_rows(radii.chunks(1), None))?;
    }

    let manifest = RunManifest::new(
        "simulate",
        SimulateConfig {
            model: &model,
            n: args.n,
            header: args.header,
            fixed_radius: args.fixed_radius,
        },
        Some(seed),
    );
    for p in args.out.iter().chain(&args.radii_out) {
        manifest.write_beside(p)?;
    }
    Ok(())
}

fn scatter_method(m: Method) -> ScatterMethod {
    match m {
        Method::MeanCov => ScatterMethod::SampleMeanCov,
        Method::MedianTyler => ScatterMethod::SpatialMedianTyler,
    }
}

/// Location and scatter for a data command, plus the label reported for it.
fn resolve_location_scatter(
    args: &DataArgs,
    sample: &SampleMatrix,
) -> CliResult<(LocationScatterEstimate, &'static str)> {
    let method = scatter_method(args.method);
    match (&args.mu, &args.sigma) {
        (Some(mu), Some(sigma)) => {
            let mu = location(Some(mu), sample.dim())?;
            let sigma = load_sigma(sigma, Some(sample.dim()))?;
            let est = known_location_scatter(mu, sigma, method)
                .map_err(|e| CliError::config(format!("--sigma: {e}")))?;
            Ok((est, "known"))
        }
        (None, None) => {
            let est = estimate_location_scatter(sample, method, &IterationOptions::default())?;
            let label = match args.method {
                Method::MeanCov => "mean-cov",
                Method::MedianTyler => "median-tyler",
            };
            Ok((est, label))
        }
        _ => Err(CliError::config("--mu and --sigma must be given together")),
    }
}

fn check_k(k: usize, n: usize) -> CliResult<()> {
    if k == 0 || k >= n {
        return Err(CliError::config(format!("k = {k} must satisfy 1 <= k < n = {n}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct KEstimate {
    k: usize,
    gamma_hat: f64,
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    n: usize,
    d: usize,
    method: &'a str,
    mu_hat: &'a [f64],
    sigma_hat: &'a SquareMatrix,
    estimates: Vec<KEstimate>,
    warnings: &'a [String],
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let ks = match (&args.k, &args.k_list) {
        (Some(k), _) => vec![*k],
        (None, Some(list)) => parse_usize_list("--k-list", list)?,
        (None, None) => return Err(CliError::config("one of --k or --k-list is required")),
    };
    let sample = read_sample(&args.data.data)?;
    for &k in &ks {
        check_k(k, sample.n())?;
    }
    let (loc, label) = resolve_location_scatter(&args.data, &sample)?;
    let estimates = hill_plot(&sample, &loc, &ks)?
        .into_iter()
        .map(|h| KEstimate {
            k: h.k,
            gamma_hat: h.gamma_hat,
        })
        .collect();
    let output = EstimateOutput {
        n: sample.n(),
        d: sample.dim(),
        method: label,
        mu_hat: &loc.mu_hat,
        sigma_hat: &loc.sigma_hat,
        estimates,
        warnings: &loc.warnings,
    };
    emit(args.out.as_deref(), &to_json(&output))?;
    if let Some(p) = &args.out {
        RunManifest::new("estimate", args, None).write_beside(p)?;
    }
    Ok(())
}

pub fn hillplot(args: &HillplotArgs) -> CliResult<()> {
    if args.k_step == 0 || args.k_min == 0 || args.k_min > args.k_max {
        return Err(CliError::config(format!(
            "empty k range: --k-min {} --k-max {} --k-step {}",
            args.k_min, args.k_max, args.k_step
        )));
    }
    let ks: Vec<usize> = (args.k_min..=args.k_max).step_by(args.k_step).collect();
    let sample = read_sample(&args.data.data)?;
    check_k(args.k_max, sample.n())?;
    let (loc, _) = resolve_location_scatter(&args.data, &sample)?;
    let mut text = String::new();
    if args.header {
        text.push_str("k,gamma_hat\n");
    }
    for h in hill_plot(&sample, &loc, &ks)? {
        text.push_str(&format!("{},{}\n", h.k, fmt17(h.gamma_hat)));
    }
    emit(args.out.as_deref(), &text)?;
    if let Some(p) = &args.out {
        RunManifest::new("hillplot", args, None).write_beside(p)?;
    }
    Ok(())
}

pub fn verify_bounds(args: &VerifyBoundsArgs) -> CliResult<()> {
    if args.dim == Some(0) {
        return Err(CliError::config("--dim must be at least 1"));
    }
    if !(args.perturbation_scale >= 0.0 && args.perturbation_scale.is_finite()) {
        return Err(CliError::config(format!(
            "--perturbation-scale must be finite and non-negative, got {}",
            args.perturbation_scale
        )));
    }
    let config = BoundTrialConfig {
        trials: args.trials,
        n: args.n,
        dim: args.dim,
        variate: variate(&args.variate, args.dim.unwrap_or(2))?,
        perturbation_scale: args.perturbation_scale,
        seed: args.seed.unwrap_or(DEFAULT_SEED),
    };
    let report = run_bound_trials(&config)?;
    emit(args.out.as_deref(), &to_json(&report))?;
    if let Some(p) = &args.out {
        RunManifest::new("verify-bounds", &config, Some(config.seed)).write_beside(p)?;
    }
    Ok(())
}

fn experiment_config(args: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    if let Some(path) = &args.config {
        let mut config: ExperimentConfig = serde_json::from_str(&read_text(path)?)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if let Some(seed) = args.seed {
            config.base_seed = seed;
        }
        return Ok(config);
    }
    let n_values = parse_usize_list("--n-values", &args.n_values)?;
    let k_rule = match (&args.k_list, args.beta) {
        (Some(list), _) => KRule::Explicit(parse_usize_list("--k-list", list)?),
        (None, Some(beta)) => KRule::Beta(beta),
        (None, None) => KRule::default(),
    };
    let estimator_method = match args.method {
        ExperimentMethod::TrueParams => EstimatorMethod::TrueParams,
        ExperimentMethod::MeanCov => EstimatorMethod::SampleMeanCov,
        ExperimentMethod::MedianTyler => EstimatorMethod::SpatialMedianTyler,
    };
    Ok(ExperimentConfig {
        model: model(&args.variate, args.dim, args.mu.as_deref(), &args.sigma)?,
        n_values,
        k_rule,
        estimator_method,
        replications: args.replications,
        base_seed: args.seed.unwrap_or(DEFAULT_SEED),
    })
}

/// Per-replication rows; failure messages lose their commas to keep the
/// dialect unquoted.
pub fn records_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(
        "rep_id,n,k,seed,gamma_hat_true,gamma_hat_est,normalized_error,estimator_gap,\
         m_n,r_pivot,a_n,b_n,bound_applicable,bound_holds,failure\n",
    );
    for r in &result.records {
        let (m, piv, a, b, app, holds) = match &r.bound {
            Some(s) => (
                fmt17(s.m_n),
                fmt17(s.r_pivot),
                fmt17(s.a_n),
                fmt17(s.b_n),
                s.applicable.to_string(),
                s.holds.map(|h| h.to_string()).unwrap_or_default(),
            ),
            None => Default::default(),
        };
        let failure = r
            .failure
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n', '\r'], " ");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{m},{piv},{a},{b},{app},{holds},{failure}\n",
            r.rep_id,
            r.n,
            r.k,
            r.seed,
            fmt17(r.gamma_hat_true),
            fmt17(r.gamma_hat_est),
            fmt17(r.normalized_error),
            fmt17(r.estimator_gap),
        ));
    }
    out
}

#[derive(Serialize)]
struct ExperimentRun<'a> {
    #[serde(flatten)]
    config: &'a ExperimentConfig,
    workers: usize,
}

pub fn experiment(args: &ExperimentArgs) -> CliResult<()> {
    let config = experiment_config(args)?;
    config.validate()?;
    let result = run_experiment(&config, args.workers)?;
    emit(args.out.as_deref(), &to_json(&result))?;
    if let Some(p) = &args.records_out {
        write_text(p, &records_csv(&result))?;
    }
    let manifest = RunManifest::new(
        "experiment",
        ExperimentRun {
            config: &config,
            workers: args.workers,
        },
        Some(config.base_seed),
    );
    for p in args.out.iter().chain(&args.records_out) {
        manifest.write_beside(p)?;
    }
    Ok(())
}
