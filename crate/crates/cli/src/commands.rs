use std::fs::{self, File};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use ergorate::harness::{run_experiment, ExperimentConfig, ExperimentReport, ProgressSink, Verdict};
use ergorate::rates::{self, DPrime, RateInputs, RatePrediction};
use ergorate::rng::seeded;
use ergorate::subordinator::BernsteinSpec;
use ergorate::transport::{sliced_w_p, w_p_1d, w_p_exact_with_cap};
use serde_json::json;

use crate::cloud::read_cloud;
use crate::json::{self, format_f64};
use crate::{CheckSubordinatorArgs, ExperimentArgs, Method, RateArgs, RateModel, WassersteinArgs};

pub type Outcome = Result<u8, String>;

pub const TABLE_HEADER: [&str; 6] = ["horizon", "mean_sq_dist", "std_err", "floor", "n_support", "n_reference"];

fn need<T: Copy>(value: Option<T>, flag: &str) -> Result<T, String> {
    value.ok_or_else(|| format!("this model needs --{flag}"))
}

fn parse_d_prime(raw: &str) -> Result<DPrime, String> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(DPrime::Infinite),
        s => s
            .parse::<f64>()
            .map(DPrime::Finite)
            .map_err(|_| format!("--d-prime must be a number or `inf`, got `{raw}`")),
    }
}

fn prediction(args: &RateArgs) -> Result<RatePrediction, String> {
    let (alpha, p) = (args.alpha, args.p);
    let result = match args.model {
        RateModel::WrightFisher => {
            if args.q.is_empty() {
                return Err("this model needs --q".into());
            }
            rates::rate_wright_fisher(&args.q, alpha)
        }
        RateModel::Interval => rates::rate_degenerate_interval(need(args.l, "l")?, p),
        RateModel::Compact => rates::rate_compact_manifold(need(args.n, "n")?, p),
        RateModel::Euclidean => rates::rate_euclidean_potential(need(args.n, "n")?, need(args.tau, "tau")?),
        RateModel::Hamiltonian => rates::rate_hamiltonian(
            need(args.n, "n")?,
            need(args.m, "m")?,
            need(args.n_prime, "n-prime")?,
            alpha,
            args.hessian_bounded,
        ),
        RateModel::HamiltonianExample => rates::rate_hamiltonian_example(
            need(args.n, "n")?,
            need(args.m, "m")?,
            need(args.tau, "tau")?,
            alpha,
        ),
        RateModel::Spherical => rates::rate_spherical(need(args.n, "n")?, need(args.n_prime, "n-prime")?),
        RateModel::StableLike => {
            rates::rate_stable_like_bounded(need(args.n, "n")?, need(args.alpha_prime, "alpha-prime")?, p, alpha)
        }
        RateModel::StableLikeWhole => rates::rate_stable_like_whole_space(
            need(args.n, "n")?,
            need(args.tau, "tau")?,
            need(args.alpha_prime, "alpha-prime")?,
            alpha,
            need(args.delta, "delta")?,
        ),
        RateModel::General => {
            let d_prime = parse_d_prime(args.d_prime.as_deref().ok_or("this model needs --d-prime")?)?;
            RateInputs::new(need(args.beta, "beta")?, need(args.d, "d")?, d_prime, alpha)
                .and_then(|inputs| rates::predict(&inputs, p))
        }
        RateModel::Kappa => rates::predict_of_k(need(args.k, "k")?, p),
    };
    result.map_err(|e| e.to_string())
}

pub fn rate(args: &RateArgs) -> Outcome {
    let prediction = prediction(args)?;
    print!("{}", json::to_string(&prediction).map_err(|e| e.to_string())?);
    Ok(0)
}

/// Appends timestamped progress lines to the run log.
struct LogSink {
    file: Mutex<File>,
    start: Instant,
}

impl LogSink {
    fn line(&self, msg: &str) {
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        let _ = writeln!(f, "[{:>9.3}s] {msg}", self.start.elapsed().as_secs_f64());
    }
}

impl ProgressSink for LogSink {
    fn progress(&self, completed: usize, total: usize) {
        self.line(&format!("completed {completed}/{total}"));
    }
}

pub fn table_csv(report: &ExperimentReport) -> Result<String, String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let err = |e: csv::Error| e.to_string();
    w.write_record(TABLE_HEADER).map_err(err)?;
    for h in &report.horizons {
        w.write_record([
            format_f64(h.horizon),
            format_f64(h.mean_sq_dist),
            format_f64(h.std_err),
            format_f64(h.floor),
            h.n_support.to_string(),
            h.n_reference.to_string(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn experiment(args: &ExperimentArgs) -> Outcome {
    let config = load_config(&args.config)?;
    let workers = match args.workers {
        Some(0) => return Err("worker count must be positive".into()),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    let write = |name: &str, contents: &str| {
        let path = args.out.join(name);
        fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))
    };

    let log_path = args.out.join("run.log");
    let file = File::create(&log_path).map_err(|e| format!("{}: {e}", log_path.display()))?;
    let sink = LogSink {
        file: Mutex::new(file),
        start: Instant::now(),
    };
    sink.line(&format!("config {} with {workers} workers", args.config.display()));
    let report = match run_experiment(&config, workers, &sink) {
        Ok(report) => report,
        Err(e) => {
            sink.line(&format!("failed: {e}"));
            return Err(e.to_string());
        }
    };
    sink.line(&format!(
        "slope {} (r^2 {}) against predicted exponent {}: {:?}",
        format_f64(report.fit.slope),
        format_f64(report.fit.r_squared),
        format_f64(report.prediction.exponent),
        report.verdict
    ));

    write("report.json", &json::to_string(&report).map_err(|e| e.to_string())?)?;
    write("table.csv", &table_csv(&report)?)?;
    let summary = json!({
        "verdict": report.verdict,
        "slope": report.fit.slope,
        "r_squared": report.fit.r_squared,
        "predicted_exponent": report.prediction.exponent,
    });
    print!("{}", json::to_string(&summary).map_err(|e| e.to_string())?);
    Ok(if report.verdict == Verdict::Violation { 1 } else { 0 })
}

pub fn wasserstein(args: &WassersteinArgs) -> Outcome {
    let a = read_cloud(&args.a)?;
    let b = read_cloud(&args.b)?;
    let distance = match args.method {
        Method::Exact if a.dim() == 1 => w_p_1d(&a, &b, args.p),
        Method::Exact => w_p_exact_with_cap(&a, &b, args.p, args.size_cap),
        Method::Sliced => sliced_w_p(&a, &b, args.p, args.projections, &mut seeded(args.seed)),
    }
    .map_err(|e| e.to_string())?;
    println!("{distance:.12}");
    Ok(0)
}

/// Rejection threshold for the standardised Laplace-transform error.
pub const Z_LIMIT: f64 = 4.0;

pub fn check_subordinator(args: &CheckSubordinatorArgs) -> Outcome {
    let spec = BernsteinSpec::stable(args.alpha).map_err(|e| e.to_string())?;
    if !(args.t.is_finite() && args.t >= 0.0) {
        return Err(format!("--t must be nonnegative, got {}", args.t));
    }
    if !(args.r.is_finite() && args.r >= 0.0) {
        return Err(format!("--r must be nonnegative, got {}", args.r));
    }
    if args.samples < 1000 {
        return Err(format!("--samples must be at least 1000, got {}", args.samples));
    }
    let mut rng = seeded(args.seed);
    // S_0 = 0 and B(0) = 0 make the transform exactly one
    let degenerate = args.t == 0.0 || args.r == 0.0;
    let values: Vec<f64> = (0..args.samples)
        .map(|_| {
            if degenerate {
                1.0
            } else {
                (-args.r * spec.sample_increment(args.t, &mut rng)).exp()
            }
        })
        .collect();
    let n = values.len() as f64;
    let estimate = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - estimate).powi(2)).sum::<f64>() / (n - 1.0);
    let std_err = (var / n).sqrt();
    let closed_form = (-spec.evaluate(args.r) * args.t).exp();
    let z = if std_err > 0.0 {
        (estimate - closed_form) / std_err
    } else if estimate == closed_form {
        0.0
    } else {
        f64::INFINITY
    };
    let out = json!({
        "alpha": args.alpha,
        "t": args.t,
        "r": args.r,
        "samples": args.samples,
        "estimate": estimate,
        "closed_form": closed_form,
        "std_err": std_err,
        "z": z,
    });
    print!("{}", json::to_string(&out).map_err(|e| e.to_string())?);
    Ok(if z.abs() <= Z_LIMIT { 0 } else { 1 })
}
