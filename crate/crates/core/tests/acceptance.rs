//! End-to-end acceptance suite. Prints one line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ergorate::harness::{
    predict, run_experiment, ExperimentConfig, ExperimentReport, NoProgress, Verdict,
    DEFAULT_SLOPE_TOLERANCE, SCHEMA_VERSION,
};
use ergorate::models::{
    GridChain, InvariantSampler, McmcOptions, ModelSpec, PotentialSpec, Simulator, State,
    WrightFisherVariant,
};
use ergorate::rates::{
    kappa, rate_compact_manifold, rate_degenerate_interval, rate_euclidean_potential,
    rate_hamiltonian, rate_hamiltonian_example, rate_spherical, rate_stable_like_bounded,
    rate_stable_like_whole_space, rate_wright_fisher, regime, xi, xi_of_k, DPrime, RateInputs,
    RatePrediction, Regime,
};
use ergorate::rng::{seeded, stream};
use ergorate::subordinator::BernsteinSpec;
use ergorate::transport::{w_p_1d, w_p_bruteforce, w_p_exact, Metric, PointCloud, DEFAULT_SIZE_CAP};
use rand::Rng;

type Outcome = Result<String, String>;

const EXACT: f64 = 1e-12;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn expect_shape(
    label: &str,
    got: RatePrediction,
    exponent: f64,
    log_power: u32,
    regime: Option<Regime>,
) -> Result<(), String> {
    ensure((got.exponent - exponent).abs() <= EXACT, || {
        format!("{label}: exponent {} != {exponent}", got.exponent)
    })?;
    ensure(got.log_power == log_power, || {
        format!("{label}: log_power {} != {log_power}", got.log_power)
    })?;
    if regime.is_some() {
        ensure(got.regime == regime, || {
            format!("{label}: regime {:?} != {regime:?}", got.regime)
        })?;
    }
    Ok(())
}

fn inputs(beta: f64, d: f64, dp: DPrime, alpha: f64) -> RateInputs {
    RateInputs::new(beta, d, dp, alpha).expect("valid inputs")
}

fn rate_tables() -> Outcome {
    use DPrime::{Finite, Infinite};
    let close = |label: &str, got: f64, want: f64| {
        ensure((got - want).abs() <= EXACT, || format!("{label}: {got} != {want}"))
    };
    close("kappa(1/2,1,inf,1)", kappa(&inputs(0.5, 1.0, Infinite, 1.0)).map_err(err)?, 0.75)?;
    close("kappa(1/2,1,4,1)", kappa(&inputs(0.5, 1.0, Finite(4.0), 1.0)).map_err(err)?, 0.625)?;
    close("kappa(1/2,3,10,1)", kappa(&inputs(0.5, 3.0, Finite(10.0), 1.0)).map_err(err)?, 1.1)?;
    ensure(RateInputs::new(-1.0, 1.0, Infinite, 0.5).is_err(), || "negative beta accepted".into())?;

    close("xi(100; K=0.75)", xi(100.0, &inputs(0.5, 1.0, Infinite, 1.0)).map_err(err)?, 0.01)?;
    close(
        "xi(100; K=1.1)",
        xi(100.0, &inputs(0.5, 3.0, Finite(10.0), 1.0)).map_err(err)?,
        100f64.powf(-1.0 / 1.2),
    )?;
    let i = inputs(0.5, 2.0, Infinite, 0.0);
    ensure(regime(&i).map_err(err)?.1 == Regime::KEq1NoLog, || "xi(10; K=1) regime".into())?;
    close("xi(10; K=1)", xi(10.0, &i).map_err(err)?, 12f64.ln().powi(2) / 10.0)?;

    close("xi_of_K(8, 0.5)", xi_of_k(8.0, 0.5).map_err(err)?, 0.125)?;
    close("xi_of_K(8, 1)", xi_of_k(8.0, 1.0).map_err(err)?, 10f64.ln().powi(2) / 8.0)?;
    close("xi_of_K(1000, 2)", xi_of_k(1000.0, 2.0).map_err(err)?, 0.1)?;

    let r = |x: Result<RatePrediction, _>| x.map_err(err);
    expect_shape("euclid(1,2)", r(rate_euclidean_potential(1, 2.0))?, 1.0, 0, None)?;
    expect_shape("euclid(1,1)", r(rate_euclidean_potential(1, 1.0))?, 1.0, 2, None)?;
    expect_shape("euclid(3,1)", r(rate_euclidean_potential(3, 1.0))?, 1.0 / 3.0, 0, None)?;
    expect_shape("compact(3,2)", r(rate_compact_manifold(3, 2.0))?, 2.0 / 3.0, 0, None)?;
    expect_shape("compact(2,2)", r(rate_compact_manifold(2, 2.0))?, 1.0, 2, None)?;
    expect_shape("compact(1,4)", r(rate_compact_manifold(1, 4.0))?, 2.0 / 3.0, 0, None)?;
    expect_shape("interval(6,2)", r(rate_degenerate_interval(6.0, 2.0))?, 0.8, 2, None)?;
    expect_shape("interval(6,3)", r(rate_degenerate_interval(6.0, 3.0))?, 8.0 / 15.0, 0, None)?;
    expect_shape("interval(5,2)", r(rate_degenerate_interval(5.0, 2.0))?, 1.0, 3, None)?;

    let k = |x: Result<RatePrediction, _>| x.map_err(err).map(|p| p.kappa.unwrap_or(f64::NAN));
    close("hamiltonian K bounded a=1", k(rate_hamiltonian(1, 1, 2.0, 1.0, true))?, 1.25)?;
    close("hamiltonian K bounded a=0", k(rate_hamiltonian(1, 1, 2.0, 0.0, true))?, 1.5)?;
    close("hamiltonian K unbounded", k(rate_hamiltonian(1, 1, 2.0, 1.0, false))?, 1.5)?;
    expect_shape("hamiltonian(1,1,2,1,b)", r(rate_hamiltonian(1, 1, 2.0, 1.0, true))?, 2.0 / 3.0, 0, Some(Regime::KGt1NoLog))?;

    expect_shape("ham_ex(1,1,2,1)", r(rate_hamiltonian_example(1, 1, 2.0, 1.0))?, 0.6, 0, None)?;
    expect_shape("ham_ex(1,1,1,1)", r(rate_hamiltonian_example(1, 1, 1.0, 1.0))?, 2.0 / 3.0, 0, None)?;
    expect_shape("ham_ex(1,1,1,0)", r(rate_hamiltonian_example(1, 1, 1.0, 0.0))?, 0.5, 0, None)?;

    expect_shape("sphere(2,4)", r(rate_spherical(2, 4.0))?, 0.4, 0, None)?;
    expect_shape("sphere(3,6)", r(rate_spherical(3, 6.0))?, 0.25, 0, None)?;
    expect_shape("sphere(2,2)", r(rate_spherical(2, 2.0))?, 2.0 / 3.0, 0, None)?;

    let wf = r(rate_wright_fisher(&[1.0, 1.0], 1.0))?;
    close("wf(1,1) K", wf.kappa.unwrap_or(f64::NAN), 0.625)?;
    expect_shape("wf(1,1;1)", wf, 1.0, 0, Some(Regime::KLt1))?;
    let wf = r(rate_wright_fisher(&[2.0, 2.0], 1.0))?;
    close("wf(2,2) K", wf.kappa.unwrap_or(f64::NAN), 1.1)?;
    expect_shape("wf(2,2;1)", wf, 1.0 / 1.2, 0, Some(Regime::KGt1NoLog))?;
    let wf = r(rate_wright_fisher(&[1.0, 1.0], 0.0))?;
    close("wf(1,1;0) K", wf.kappa.unwrap_or(f64::NAN), 0.75)?;
    expect_shape("wf(1,1;0)", wf, 1.0, 0, Some(Regime::KLt1))?;

    let sl = r(rate_stable_like_bounded(1, 2.0, 2.0, 1.0))?;
    close("stable(1) K", sl.kappa.unwrap_or(f64::NAN), 0.625)?;
    expect_shape("stable(1)", sl, 1.0, 0, Some(Regime::KLt1))?;
    let sl = r(rate_stable_like_bounded(4, 2.0, 2.0, 1.0))?;
    close("stable(4) K", sl.kappa.unwrap_or(f64::NAN), 1.0)?;
    expect_shape("stable(4)", sl, 1.0, 3, Some(Regime::KEq1Log))?;
    let sl = r(rate_stable_like_bounded(5, 2.0, 2.0, 1.0))?;
    close("stable(5) K", sl.kappa.unwrap_or(f64::NAN), 1.25)?;
    expect_shape("stable(5)", sl, 2.0 / 3.0, 0, Some(Regime::KGt1NoLog))?;

    close("whole(1,1,1,1,4) K", k(rate_stable_like_whole_space(1, 1.0, 1.0, 1.0, 4.0))?, 0.5 + 7.0 / 16.0)?;
    close("whole(2,1,1,1,3) K", k(rate_stable_like_whole_space(2, 1.0, 1.0, 1.0, 3.0))?, 0.5 + 16.0 / 18.0)?;
    let far = k(rate_stable_like_whole_space(1, 1.0, 1.0, 1.0, 1e12))?;
    close("whole delta limit", (far * 1e6).round() / 1e6, 1.0)?;
    Ok("all rate-table examples match".into())
}

fn infinite_d_prime_identity() -> Outcome {
    let mut rng = seeded(2);
    for _ in 0..1000 {
        let t = rng.random_range(0.01..1e6);
        let beta = rng.random_range(0.01..3.0);
        let d = rng.random_range(0.01..12.0);
        let alpha = rng.random_range(0.0..=1.0);
        let lhs = xi(t, &inputs(beta, d, DPrime::Infinite, alpha)).map_err(err)?;
        let rhs = xi_of_k(t, beta + d / 4.0).map_err(err)?;
        ensure(lhs.to_bits() == rhs.to_bits(), || {
            format!("t={t} beta={beta} d={d} alpha={alpha}: {lhs} != {rhs}")
        })?;
    }
    Ok("1000 random draws identical to the bit".into())
}

fn stable_like_cross_check() -> Outcome {
    for n in 1..=8u32 {
        let got = rate_stable_like_bounded(n, 2.0, 2.0, 1.0).map_err(err)?;
        let (e, lp) = match n {
            1..=3 => (1.0, 0),
            4 => (1.0, 3),
            _ => (2.0 / (n as f64 - 2.0), 0),
        };
        expect_shape(&format!("n={n}"), got, e, lp, None)?;
    }
    Ok("n = 1..8 reproduce the sharp table".into())
}

fn laplace_transform() -> Outcome {
    let samples = 100_000;
    let mut worst: f64 = 0.0;
    for (ai, &alpha) in [0.5, 0.8].iter().enumerate() {
        let spec = BernsteinSpec::stable(alpha).map_err(err)?;
        for (ti, &t) in [0.5, 1.0].iter().enumerate() {
            let mut rng = stream(4, ai as u64, ti as u64);
            let draws: Vec<f64> = (0..samples).map(|_| spec.sample_increment(t, &mut rng)).collect();
            for &r in &[0.5, 1.0, 2.0] {
                let vals: Vec<f64> = draws.iter().map(|s| (-r * s).exp()).collect();
                let (mean, se) = mean_se(&vals);
                let exact = (-spec.evaluate(r) * t).exp();
                let z = (mean - exact).abs() / se;
                worst = worst.max(z);
                ensure(z <= 3.0, || {
                    format!("alpha={alpha} t={t} r={r}: mean {mean} vs {exact} ({z:.2} SE)")
                })?;
            }
        }
    }
    Ok(format!("12 cells within 3 SE (worst {worst:.2} SE)"))
}

fn random_cloud<R: Rng>(n: usize, dim: usize, weighted: bool, rng: &mut R) -> PointCloud {
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    if !weighted {
        return PointCloud::uniform(points, Metric::Euclidean).expect("valid cloud");
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    w[0] += 1.0 - w.iter().sum::<f64>();
    PointCloud::new(points, w, Metric::Euclidean).expect("valid cloud")
}

fn transport_oracles() -> Outcome {
    let mut rng = seeded(5);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.random_range(1..=7);
        let dim = rng.random_range(1..=3);
        let p = [1.0, 2.0, 3.0][case % 3];
        let a = random_cloud(n, dim, false, &mut rng);
        let b = random_cloud(n, dim, false, &mut rng);
        let exact = w_p_exact(&a, &b, p).map_err(err)?;
        let brute = w_p_bruteforce(&a, &b, p).map_err(err)?;
        worst = worst.max((exact - brute).abs());
        ensure((exact - brute).abs() <= 1e-9, || format!("case {case}: {exact} vs {brute}"))?;
    }
    for case in 0..500 {
        let n = rng.random_range(1..=60);
        let m = rng.random_range(1..=60);
        let p = rng.random_range(1.0..4.0);
        let a = random_cloud(n, 1, case % 2 == 0, &mut rng);
        let b = random_cloud(m, 1, case % 3 == 0, &mut rng);
        let exact = w_p_exact(&a, &b, p).map_err(err)?;
        let quantile = w_p_1d(&a, &b, p).map_err(err)?;
        worst = worst.max((exact - quantile).abs());
        ensure((exact - quantile).abs() <= 1e-9, || format!("1-D case {case}: {exact} vs {quantile}"))?;
    }
    Ok(format!("700 instances agree (max |diff| {worst:.1e})"))
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn invariant_samplers() -> Outcome {
    let draws = 100_000;
    let mut worst: f64 = 0.0;
    let mut check = |label: String, xs: &[f64], want: f64| -> Result<(), String> {
        let (mean, se) = mean_se(xs);
        let z = (mean - want).abs() / se;
        worst = worst.max(z);
        ensure(z <= 3.0, || format!("{label}: {mean} vs {want} ({z:.2} SE)"))
    };
    for (k, q) in [vec![1.0, 1.0], vec![2.0, 3.0, 5.0], vec![1.5, 4.0, 1.0, 2.5]].iter().enumerate() {
        let spec = ModelSpec::WrightFisher {
            q: q.clone(),
            variant: WrightFisherVariant::Diagonal,
        };
        let mut rng = stream(6, 0, k as u64);
        let mut sampler = InvariantSampler::new(&spec, &mut rng).map_err(err)?;
        let states = sampler.draw_many(draws, &mut rng);
        let total: f64 = q.iter().sum();
        for i in 0..q.len() - 1 {
            let xs: Vec<f64> = states.iter().map(|s| s.coords[i]).collect();
            check(format!("dirichlet {q:?} coordinate {i}"), &xs, q[i] / total)?;
        }
    }
    let spec = ModelSpec::Hamiltonian {
        n: 2,
        m: 2,
        kappa: 2.0,
        coupling: None,
        potential: PotentialSpec { theta: 1.0, tau: 1.0 },
    };
    let mut rng = stream(6, 1, 0);
    let mut sampler = InvariantSampler::new(&spec, &mut rng).map_err(err)?;
    let states = sampler.draw_many(draws, &mut rng);
    for j in 0..2 {
        // the sample second moment of a centred law estimates its variance
        let sq: Vec<f64> = states.iter().map(|s| s.coords[2 + j].powi(2)).collect();
        check(format!("velocity variance {j}"), &sq, 0.5)?;
    }
    let spec = ModelSpec::Spherical {
        n: 3,
        sigma: std::f64::consts::SQRT_2,
        potential: PotentialSpec { theta: 1.0, tau: 1.0 },
    };
    let mut rng = stream(6, 2, 0);
    let mut sampler = InvariantSampler::new(&spec, &mut rng).map_err(err)?;
    let states = sampler.draw_many(draws, &mut rng);
    for j in 0..3 {
        let xs: Vec<f64> = states.iter().map(|s| s.coords[3 + j]).collect();
        check(format!("sphere mean {j}"), &xs, 0.0)?;
    }
    Ok(format!("all moments within 3 SE (worst {worst:.2} SE)"))
}

fn ctmc_stationarity() -> Outcome {
    let chain = GridChain::new(100, 1.3, &PotentialSpec { theta: 2.0, tau: 1.5 }).map_err(err)?;
    let pi = chain.stationary_distribution().map_err(err)?;
    let gap = pi
        .iter()
        .zip(chain.weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(gap <= 1e-8, || format!("max deviation {gap:.2e}"))?;
    Ok(format!("max deviation {gap:.1e}"))
}

fn base_config(model: ModelSpec) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        model,
        bernstein: BernsteinSpec::Identity,
        p: 2.0,
        horizons: vec![50.0, 100.0, 200.0, 400.0],
        replications: 64,
        dt: 0.01,
        obs_per_unit_time: 1,
        reference_sample_size: 1600,
        master_seed: 20_240_601,
        burn_in: 0.0,
        slope_tolerance: DEFAULT_SLOPE_TOLERANCE,
        mcmc: McmcOptions::default(),
        size_cap: DEFAULT_SIZE_CAP,
        synthetic_oracle: None,
    }
}

fn describe(report: &ExperimentReport) -> String {
    let last = report.horizons.last().expect("horizons");
    format!(
        "slope {:.3} (R^2 {:.3}), predicted exponent {:.3}, verdict {:?}, floor/signal at t={} is {:.3}",
        report.fit.slope,
        report.fit.r_squared,
        report.prediction.exponent,
        report.verdict,
        last.horizon,
        last.floor / last.mean_sq_dist
    )
}

fn slope_check(config: ExperimentConfig, exponent: f64, slack: f64) -> Outcome {
    let predicted = predict(&config).map_err(err)?;
    ensure((predicted.exponent - exponent).abs() <= EXACT, || {
        format!("predicted exponent {} != {exponent}", predicted.exponent)
    })?;
    let report = run_experiment(&config, worker_count(), &NoProgress).map_err(err)?;
    let summary = describe(&report);
    ensure(report.fit.slope <= -exponent + slack, || format!("slope too shallow: {summary}"))?;
    ensure(report.verdict != Verdict::Violation, || format!("violation: {summary}"))?;
    Ok(summary)
}

fn wright_fisher_slope() -> Outcome {
    let mut config = base_config(ModelSpec::WrightFisher {
        q: vec![1.0, 1.0],
        variant: WrightFisherVariant::Diagonal,
    });
    config.obs_per_unit_time = 4;
    config.reference_sample_size = 6400;
    slope_check(config, 1.0, 0.3)
}

fn kinetic_langevin_slope() -> Outcome {
    let config = base_config(ModelSpec::Hamiltonian {
        n: 1,
        m: 1,
        kappa: 1.0,
        coupling: None,
        potential: PotentialSpec { theta: 1.0, tau: 1.0 },
    });
    slope_check(config, 2.0 / 3.0, 0.15)
}

fn determinism() -> Outcome {
    let mut checked = 0;
    let configs = [
        {
            let mut c = base_config(ModelSpec::Hamiltonian {
                n: 1,
                m: 1,
                kappa: 1.0,
                coupling: None,
                potential: PotentialSpec { theta: 1.0, tau: 1.5 },
            });
            c.horizons = vec![5.0, 10.0, 20.0];
            c.replications = 8;
            c.reference_sample_size = 80;
            c.bernstein = BernsteinSpec::Stable { alpha: 0.7 };
            c.mcmc.burn_in = 2_000;
            c
        },
        {
            let mut c = base_config(ModelSpec::StableLikeInterval {
                alpha_prime: 1.2,
                grid_size: 64,
                potential: PotentialSpec { theta: 1.0, tau: 1.0 },
            });
            c.horizons = vec![5.0, 10.0, 20.0];
            c.replications = 8;
            c.obs_per_unit_time = 2;
            c.reference_sample_size = 160;
            c
        },
    ];
    for config in configs {
        let one = run_experiment(&config, 1, &NoProgress).map_err(err)?;
        let four = run_experiment(&config, 4, &NoProgress).map_err(err)?;
        let a = serde_json::to_string(&one).map_err(err)?;
        let b = serde_json::to_string(&four).map_err(err)?;
        ensure(a == b, || format!("{:?} differs across worker counts", config.model))?;
        let again = serde_json::to_string(&run_experiment(&config, 4, &NoProgress).map_err(err)?).map_err(err)?;
        ensure(a == again, || "rerun differs".into())?;
        checked += 1;
    }
    Ok(format!("{checked} experiments byte-identical for workers 1 and 4"))
}

fn all_families() -> Vec<ModelSpec> {
    let potential = PotentialSpec { theta: 1.0, tau: 1.0 };
    vec![
        ModelSpec::Hamiltonian {
            n: 2,
            m: 2,
            kappa: 1.0,
            coupling: None,
            potential,
        },
        ModelSpec::Spherical {
            n: 3,
            sigma: std::f64::consts::SQRT_2,
            potential,
        },
        ModelSpec::WrightFisher {
            q: vec![1.0, 2.0, 1.5],
            variant: WrightFisherVariant::Mutation,
        },
        ModelSpec::DegenerateInterval { l: 3.0 },
        ModelSpec::StableLikeInterval {
            alpha_prime: 1.0,
            grid_size: 50,
            potential,
        },
    ]
}

fn identity_degeneracy() -> Outcome {
    let times: Vec<f64> = (0..400).map(|k| k as f64 * 0.05).collect();
    for (k, spec) in all_families().iter().enumerate() {
        let sim = Simulator::new(spec).map_err(err)?;
        let x0: State = InvariantSampler::new(spec, &mut seeded(k as u64))
            .map_err(err)?
            .draw(&mut seeded(100 + k as u64));
        let base = sim.simulate_base(&x0, &times, 0.01, &mut seeded(7)).map_err(err)?;
        let sub = sim
            .simulate_subordinated(&BernsteinSpec::Identity, &x0, &times, 0.01, &mut seeded(7))
            .map_err(err)?;
        let same = base.len() == sub.len()
            && base.iter().zip(&sub).all(|(a, b)| {
                a.coords.len() == b.coords.len()
                    && a.coords.iter().zip(&b.coords).all(|(x, y)| x.to_bits() == y.to_bits())
            });
        ensure(same, || format!("{spec:?} diverges"))?;
    }
    Ok("five families bitwise identical".into())
}

fn worker_count() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("rate tables", Duration::from_secs(1), rate_tables),
        ("infinite-d' identity", Duration::from_secs(1), infinite_d_prime_identity),
        ("stable-like sharp table", Duration::from_secs(1), stable_like_cross_check),
        ("subordinator Laplace transform", Duration::from_secs(10), laplace_transform),
        ("transport oracle equivalence", Duration::from_secs(30), transport_oracles),
        ("invariant samplers", Duration::from_secs(30), invariant_samplers),
        ("grid chain stationarity", Duration::from_secs(5), ctmc_stationarity),
        ("Wright-Fisher slope", Duration::from_secs(300), wright_fisher_slope),
        ("kinetic Langevin slope", Duration::from_secs(600), kinetic_langevin_slope),
        ("determinism across workers", Duration::from_secs(120), determinism),
        ("identity clock degeneracy", Duration::from_secs(60), identity_degeneracy),
    ];
    let mut failures = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over = elapsed > *budget;
        let (tag, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over budget of {budget:?}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failures += 1;
        }
        println!("[{tag}] {:>2}. {name} ({:.2?}): {detail}", k + 1, elapsed);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
