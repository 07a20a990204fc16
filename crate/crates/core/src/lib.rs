//! Wasserstein convergence rates for empirical measures of subordinated
//! Markov processes.
//!
//! * [`rates`] evaluates the predicted decay profiles.
//! * [`subordinator`] samples the random clocks.
//! * [`models`] simulates the model families and their invariant laws.
//! * [`transport`] computes exact and sliced Wasserstein distances.
//! * [`harness`] runs replicated experiments and fits decay exponents.

pub mod harness;
pub mod models;
pub mod rates;
pub mod rng;
pub mod subordinator;
pub mod transport;
