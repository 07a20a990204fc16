//! Increasing Levy processes used as random clocks.
//!
//! A subordinator `S_t` with Bernstein function `B` satisfies
//! `E[exp(-r S_t)] = exp(-B(r) t)`. Two laws are supported: the identity
//! clock (`S_t = t`) and the one-sided `alpha`-stable subordinator with
//! `B(r) = r^alpha`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubordinatorError {
    #[error("stable index must lie in (0, 1), got {0}")]
    InvalidIndex(f64),
    #[error("observation times must be finite, nonnegative and ascending")]
    NonAscendingTimes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BernsteinSpec {
    Identity,
    Stable { alpha: f64 },
}

impl BernsteinSpec {
    pub fn stable(alpha: f64) -> Result<Self, SubordinatorError> {
        let spec = BernsteinSpec::Stable { alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SubordinatorError> {
        match *self {
            BernsteinSpec::Identity => Ok(()),
            BernsteinSpec::Stable { alpha } if alpha > 0.0 && alpha < 1.0 => Ok(()),
            BernsteinSpec::Stable { alpha } => Err(SubordinatorError::InvalidIndex(alpha)),
        }
    }

    /// Index `alpha` of the class the Bernstein function belongs to.
    pub fn alpha(&self) -> f64 {
        match *self {
            BernsteinSpec::Identity => 1.0,
            BernsteinSpec::Stable { alpha } => alpha,
        }
    }

    /// `B(r)`.
    pub fn evaluate(&self, r: f64) -> f64 {
        match *self {
            BernsteinSpec::Identity => r,
            BernsteinSpec::Stable { .. } if r == 0.0 => 0.0,
            BernsteinSpec::Stable { alpha } => r.powf(alpha),
        }
    }

    /// Draws `S_{t+dt} - S_t`. The identity clock consumes no randomness.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        match *self {
            BernsteinSpec::Identity => dt,
            BernsteinSpec::Stable { alpha } => {
                dt.powf(1.0 / alpha) * sample_positive_stable(alpha, rng)
            }
        }
    }

    /// Samples `S` at each of the given physical times.
    pub fn sample_path<R: Rng + ?Sized>(
        &self,
        times: &[f64],
        rng: &mut R,
    ) -> Result<SubordinatorPath, SubordinatorError> {
        self.validate()?;
        check_ascending(times)?;
        if let BernsteinSpec::Identity = self {
            // summing gaps would drift from `t` in the last ulp
            return Ok(SubordinatorPath {
                times: times.to_vec(),
                values: times.to_vec(),
            });
        }
        let mut values = Vec::with_capacity(times.len());
        let mut level = 0.0;
        let mut previous = 0.0;
        for &t in times {
            let gap = t - previous;
            if gap > 0.0 {
                level += self.sample_increment(gap, rng);
            }
            values.push(level);
            previous = t;
        }
        Ok(SubordinatorPath {
            times: times.to_vec(),
            values,
        })
    }
}

pub(crate) fn check_ascending(times: &[f64]) -> Result<(), SubordinatorError> {
    let finite = times.iter().all(|t| t.is_finite());
    let ordered = times.windows(2).all(|w| w[0] <= w[1]);
    let nonnegative = times.first().is_none_or(|&t| t >= 0.0);
    if finite && ordered && nonnegative {
        Ok(())
    } else {
        Err(SubordinatorError::NonAscendingTimes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Standard positive `alpha`-stable variate with `E[exp(-r Z)] = exp(-r^alpha)`.
///
/// Chambers-Mallows-Stuck construction specialised to total skewness
/// (Kanter's form): with `U ~ Uniform(0, pi)` and `E ~ Exp(1)`,
/// `Z = sin(alpha U) / sin(U)^{1/alpha} * (sin((1-alpha) U) / E)^{(1-alpha)/alpha}`.
pub fn sample_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    // open interval keeps sin(U) away from zero
    let u = loop {
        let u: f64 = rng.random::<f64>() * PI;
        if u > 0.0 {
            break u;
        }
    };
    let e: f64 = Exp1.sample(rng);
    let head = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let tail = ((1.0 - alpha) * u).sin() / e;
    head * tail.powf((1.0 - alpha) / alpha)
}
