//! Replicated Monte Carlo experiments.
//!
//! For every horizon `t` and replication `r` a work unit draws `X_0` from the
//! invariant law, observes the subordinated process on a uniform grid of
//! `[burn_in, burn_in + t)`, and measures the squared `W_p` distance between
//! the resulting empirical measure and a fresh reference sample. A second,
//! trajectory-free estimate between two independent samples of the same
//! sizes gives the floor below which the estimator cannot resolve decay.
//!
//! Each unit owns a random stream keyed by `(master_seed, horizon, r)`, and
//! results are reduced in that index order, so reports do not depend on the
//! number of workers.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{InvariantSampler, McmcOptions, ModelError, ModelSpec, Simulator};
use crate::rates::{
    rate_degenerate_interval, rate_hamiltonian_example, rate_spherical, rate_stable_like_bounded,
    rate_wright_fisher, RateError, RatePrediction,
};
use crate::rng::{stream, Stream};
use crate::subordinator::BernsteinSpec;
use crate::transport::{empirical_from_trajectory, w_p, PointCloud, TransportError, DEFAULT_SIZE_CAP};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.15;
/// The floor must sit this many times below the signal to resolve decay.
pub const FLOOR_RATIO: f64 = 10.0;
/// Reference samples must be at least this many times the trajectory support.
pub const REFERENCE_FACTOR: usize = 4;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no rate result covers this configuration: {0}")]
    NoTheoremApplies(String),
    #[error("cannot fit a rate: {0}")]
    Fit(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

fn default_slope_tolerance() -> f64 {
    DEFAULT_SLOPE_TOLERANCE
}

fn default_size_cap() -> usize {
    DEFAULT_SIZE_CAP
}

/// Closed-form stand-in for the Monte Carlo estimator: every replication
/// reports exactly `c / t` with a zero floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticOracle {
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub bernstein: BernsteinSpec,
    pub p: f64,
    pub horizons: Vec<f64>,
    pub replications: usize,
    pub dt: f64,
    pub obs_per_unit_time: usize,
    pub reference_sample_size: usize,
    pub master_seed: u64,
    pub burn_in: f64,
    #[serde(default = "default_slope_tolerance")]
    pub slope_tolerance: f64,
    #[serde(default)]
    pub mcmc: McmcOptions,
    #[serde(default = "default_size_cap")]
    pub size_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_oracle: Option<SyntheticOracle>,
}

impl ExperimentConfig {
    /// Number of observation points for horizon `t`.
    pub fn support_size(&self, t: f64) -> usize {
        ((t * self.obs_per_unit_time as f64).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        self.model.validate()?;
        self.bernstein.validate().map_err(ModelError::from)?;
        if !(self.p.is_finite() && self.p >= 2.0) {
            return bad(format!("p must be at least 2, got {}", self.p));
        }
        if self.horizons.len() < 2 {
            return bad("at least two horizons are needed for a fit".into());
        }
        if self.horizons.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return bad("horizons must be positive".into());
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return bad("horizons must be strictly ascending".into());
        }
        if self.replications < 2 {
            return bad("replications must be at least 2".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.obs_per_unit_time == 0 {
            return bad("obs_per_unit_time must be positive".into());
        }
        if !(self.burn_in.is_finite() && self.burn_in >= 0.0) {
            return bad(format!("burn_in must be nonnegative, got {}", self.burn_in));
        }
        if !(self.slope_tolerance.is_finite() && self.slope_tolerance >= 0.0) {
            return bad("slope_tolerance must be nonnegative".into());
        }
        if let Some(oracle) = &self.synthetic_oracle {
            if !(oracle.c.is_finite() && oracle.c > 0.0) {
                return bad("synthetic_oracle.c must be positive".into());
            }
        }
        let largest = self.support_size(*self.horizons.last().expect("checked above"));
        if self.reference_sample_size < REFERENCE_FACTOR * largest {
            return bad(format!(
                "reference_sample_size {} is below {REFERENCE_FACTOR} x {largest} observation points",
                self.reference_sample_size
            ));
        }
        if self.model.state_dim() > 1 && largest + self.reference_sample_size > self.size_cap {
            return bad(format!(
                "support {} + reference {} exceeds size_cap {}",
                largest, self.reference_sample_size, self.size_cap
            ));
        }
        Ok(())
    }
}

/// Decay prediction for the model and clock of `config`.
pub fn predict(config: &ExperimentConfig) -> Result<RatePrediction, HarnessError> {
    let alpha = config.bernstein.alpha();
    let p = config.p;
    let need_order_two = |what: &str| {
        if p == 2.0 {
            Ok(())
        } else {
            Err(HarnessError::NoTheoremApplies(format!("{what} rates are stated for p = 2 only")))
        }
    };
    let prediction = match &config.model {
        ModelSpec::WrightFisher { q, .. } => {
            need_order_two("Wright-Fisher")?;
            rate_wright_fisher(q, alpha)?
        }
        ModelSpec::DegenerateInterval { l } => match config.bernstein {
            BernsteinSpec::Identity => rate_degenerate_interval(*l, p)?,
            _ => {
                return Err(HarnessError::NoTheoremApplies(
                    "the degenerate interval diffusion is covered without subordination only".into(),
                ))
            }
        },
        ModelSpec::Hamiltonian { n, m, potential, .. } => {
            need_order_two("Hamiltonian")?;
            rate_hamiltonian_example(*n as u32, *m as u32, potential.tau, alpha)?
        }
        ModelSpec::Spherical { n, .. } => {
            need_order_two("spherical")?;
            match config.bernstein {
                BernsteinSpec::Identity => rate_spherical(*n as u32, 2.0 * *n as f64)?,
                _ => {
                    return Err(HarnessError::NoTheoremApplies(
                        "the spherical Langevin rate is stated without subordination".into(),
                    ))
                }
            }
        }
        ModelSpec::StableLikeInterval { alpha_prime, .. } => {
            rate_stable_like_bounded(1, *alpha_prime, p, alpha)?
        }
    };
    Ok(prediction)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of `log mean` on `log t`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<FitResult, HarnessError> {
    if points.len() < 2 {
        return Err(HarnessError::Fit("need at least two points".into()));
    }
    if let Some(&(t, y)) = points.iter().find(|(t, y)| !(*t > 0.0 && *y > 0.0 && t.is_finite() && y.is_finite())) {
        return Err(HarnessError::Fit(format!("nonpositive value at ({t}, {y})")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::Fit("all horizons coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ConsistentWithBound,
    FloorLimited,
    Violation,
}

/// Squared distances from one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitEstimate {
    pub signal: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSummary {
    pub horizon: f64,
    pub mean_sq_dist: f64,
    pub std_err: f64,
    pub floor: f64,
    pub n_support: usize,
    pub n_reference: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub horizons: Vec<HorizonSummary>,
    pub fit: FitResult,
    pub prediction: RatePrediction,
    pub verdict: Verdict,
}

/// Receives the number of finished work units out of the total. Calls are
/// serialised and `completed` never decreases.
pub trait ProgressSink: Sync {
    fn progress(&self, completed: usize, total: usize);
}

/// Discards progress events.
pub struct NoProgress;

impl ProgressSink for NoProgress {
    fn progress(&self, _completed: usize, _total: usize) {}
}

/// One replication's squared distances at horizon `t`.
pub trait DistanceEstimator: Sync {
    fn estimate(
        &self,
        config: &ExperimentConfig,
        horizon: f64,
        rng: &mut Stream,
    ) -> Result<UnitEstimate, HarnessError>;
}

/// Returns exactly `c / t`; exercises everything downstream of simulation.
pub struct SyntheticEstimator {
    pub c: f64,
}

impl DistanceEstimator for SyntheticEstimator {
    fn estimate(&self, _: &ExperimentConfig, horizon: f64, _: &mut Stream) -> Result<UnitEstimate, HarnessError> {
        Ok(UnitEstimate {
            signal: self.c / horizon,
            floor: 0.0,
        })
    }
}

/// Simulation against fresh invariant samples.
pub struct MonteCarloEstimator {
    simulator: Simulator,
}

impl MonteCarloEstimator {
    pub fn new(model: &ModelSpec) -> Result<Self, HarnessError> {
        Ok(Self {
            simulator: Simulator::new(model)?,
        })
    }
}

fn sample_cloud(
    sampler: &mut InvariantSampler,
    count: usize,
    model: &ModelSpec,
    rng: &mut Stream,
) -> Result<PointCloud, HarnessError> {
    Ok(empirical_from_trajectory(&sampler.draw_many(count, rng), model.metric())?)
}

impl DistanceEstimator for MonteCarloEstimator {
    fn estimate(
        &self,
        config: &ExperimentConfig,
        horizon: f64,
        rng: &mut Stream,
    ) -> Result<UnitEstimate, HarnessError> {
        let model = &config.model;
        let mut sampler = InvariantSampler::with_options(model, &config.mcmc, rng)?;
        let x0 = sampler.draw(rng);
        let n = config.support_size(horizon);
        let step = 1.0 / config.obs_per_unit_time as f64;
        let times: Vec<f64> = (0..n).map(|k| config.burn_in + k as f64 * step).collect();
        let states = self
            .simulator
            .simulate_subordinated(&config.bernstein, &x0, &times, config.dt, rng)?;
        let trajectory = empirical_from_trajectory(&states, model.metric())?;
        let m = config.reference_sample_size;
        let reference = sample_cloud(&mut sampler, m, model, rng)?;
        let signal = w_p(&trajectory, &reference, config.p)?.powi(2);
        let iid = sample_cloud(&mut sampler, n, model, rng)?;
        let second = sample_cloud(&mut sampler, m, model, rng)?;
        let floor = w_p(&iid, &second, config.p)?.powi(2);
        Ok(UnitEstimate { signal, floor })
    }
}

/// Runs `config` with the estimator it names on `workers` threads.
pub fn run_experiment(
    config: &ExperimentConfig,
    workers: usize,
    sink: &dyn ProgressSink,
) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    match config.synthetic_oracle {
        Some(SyntheticOracle { c }) => run_with(config, &SyntheticEstimator { c }, workers, sink),
        None => run_with(config, &MonteCarloEstimator::new(&config.model)?, workers, sink),
    }
}

pub fn run_with(
    config: &ExperimentConfig,
    estimator: &dyn DistanceEstimator,
    workers: usize,
    sink: &dyn ProgressSink,
) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let prediction = predict(config)?;
    let reps = config.replications;
    let total = config.horizons.len() * reps;
    let done = Mutex::new(0usize);
    let unit = |index: usize| -> Result<UnitEstimate, HarnessError> {
        let (h, r) = (index / reps, index % reps);
        let mut rng = stream(config.master_seed, h as u64, r as u64);
        let out = estimator.estimate(config, config.horizons[h], &mut rng);
        let mut count = done.lock().unwrap_or_else(|e| e.into_inner());
        *count += 1;
        sink.progress(*count, total);
        out
    };
    let estimates = execute(total, workers, unit)?;

    let mut summaries = Vec::with_capacity(config.horizons.len());
    for (h, &t) in config.horizons.iter().enumerate() {
        let chunk = &estimates[h * reps..(h + 1) * reps];
        let k = reps as f64;
        let mean = chunk.iter().map(|e| e.signal).sum::<f64>() / k;
        let var = chunk.iter().map(|e| (e.signal - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let floor = chunk.iter().map(|e| e.floor).sum::<f64>() / k;
        summaries.push(HorizonSummary {
            horizon: t,
            mean_sq_dist: mean,
            std_err: (var / k).sqrt(),
            floor,
            n_support: config.support_size(t),
            n_reference: config.reference_sample_size,
        });
    }
    let points: Vec<(f64, f64)> = summaries.iter().map(|s| (s.horizon, s.mean_sq_dist)).collect();
    let fit = fit_rate(&points)?;
    let verdict = verdict(&summaries, &fit, &prediction, config.slope_tolerance);
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        horizons: summaries,
        fit,
        prediction,
        verdict,
    })
}

/// Violation needs both a slope slower than predicted and a resolvable floor.
pub fn verdict(
    summaries: &[HorizonSummary],
    fit: &FitResult,
    prediction: &RatePrediction,
    slope_tolerance: f64,
) -> Verdict {
    let last = summaries.last().expect("at least two horizons");
    if last.floor * FLOOR_RATIO > last.mean_sq_dist {
        Verdict::FloorLimited
    } else if fit.slope > -prediction.exponent + slope_tolerance {
        Verdict::Violation
    } else {
        Verdict::ConsistentWithBound
    }
}

#[cfg(feature = "parallel")]
fn execute<T, F>(total: usize, workers: usize, unit: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> Result<T, HarnessError> + Sync,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::InvalidConfig(format!("cannot start workers: {e}")))?;
    // indexed collect keeps unit order whatever the completion order
    pool.install(|| (0..total).into_par_iter().map(&unit).collect())
}

#[cfg(not(feature = "parallel"))]
fn execute<T, F>(total: usize, _workers: usize, unit: F) -> Result<Vec<T>, HarnessError>
where
    F: Fn(usize) -> Result<T, HarnessError>,
{
    (0..total).map(unit).collect()
}
