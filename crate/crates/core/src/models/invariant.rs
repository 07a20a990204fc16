use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{norm_sq, GridChain, ModelError, ModelSpec, PotentialSpec, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcOptions {
    /// Proposals discarded before the first draw; the step size adapts here.
    pub burn_in: usize,
    /// Proposals between consecutive draws.
    pub thinning: usize,
}

impl Default for McmcOptions {
    fn default() -> Self {
        Self {
            burn_in: 10_000,
            thinning: 10,
        }
    }
}

const TARGET_ACCEPTANCE: f64 = 0.35;
const ACCEPTANCE_BAND: (f64, f64) = (0.05, 0.95);

/// Random-walk Metropolis chain for `exp(-V)` on `R^n`.
#[derive(Debug, Clone)]
struct PositionChain {
    potential: PotentialSpec,
    x: Vec<f64>,
    energy: f64,
    step: f64,
    thinning: usize,
}

impl PositionChain {
    fn start<R: Rng + ?Sized>(
        potential: PotentialSpec,
        dim: usize,
        options: &McmcOptions,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        let x = vec![0.0; dim];
        let energy = potential.value(&x);
        let mut chain = Self {
            potential,
            x,
            energy,
            step: 1.0,
            thinning: options.thinning.max(1),
        };
        let mut window_accepts = 0usize;
        let mut late = (0usize, 0usize);
        for k in 1..=options.burn_in {
            let accepted = chain.propose(rng);
            window_accepts += accepted as usize;
            if k > options.burn_in / 2 {
                late.0 += accepted as usize;
                late.1 += 1;
            }
            if k % 100 == 0 {
                let rate = window_accepts as f64 / 100.0;
                chain.step *= ((rate - TARGET_ACCEPTANCE) * 2.0).exp();
                window_accepts = 0;
            }
        }
        if late.1 > 0 {
            let rate = late.0 as f64 / late.1 as f64;
            if !(ACCEPTANCE_BAND.0..=ACCEPTANCE_BAND.1).contains(&rate) {
                return Err(ModelError::McmcNotConverged(format!(
                    "acceptance rate {rate:.3} after burn-in is outside {ACCEPTANCE_BAND:?}"
                )));
            }
        }
        Ok(chain)
    }

    fn propose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let proposal: Vec<f64> = self
            .x
            .iter()
            .map(|v| v + self.step * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let energy = self.potential.value(&proposal);
        let u: f64 = rng.random();
        if u.ln() < self.energy - energy {
            self.x = proposal;
            self.energy = energy;
            true
        } else {
            false
        }
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        for _ in 0..self.thinning {
            self.propose(rng);
        }
        self.x.clone()
    }
}

#[derive(Debug, Clone)]
enum PositionLaw {
    /// `tau == 1`: `exp(-theta |x|^2)` is Gaussian with variance `1 / (2 theta)`.
    Gaussian { dim: usize, sd: f64 },
    Mcmc(PositionChain),
}

impl PositionLaw {
    fn new<R: Rng + ?Sized>(
        potential: &PotentialSpec,
        dim: usize,
        options: &McmcOptions,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        if potential.tau == 1.0 {
            Ok(PositionLaw::Gaussian {
                dim,
                sd: (0.5 / potential.theta).sqrt(),
            })
        } else {
            Ok(PositionLaw::Mcmc(PositionChain::start(
                *potential, dim, options, rng,
            )?))
        }
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            PositionLaw::Gaussian { dim, sd } => {
                out.extend((0..*dim).map(|_| *sd * rng.sample::<f64, _>(StandardNormal)))
            }
            PositionLaw::Mcmc(chain) => out.extend(chain.draw(rng)),
        }
    }
}

#[derive(Debug, Clone)]
enum Law {
    Hamiltonian {
        position: PositionLaw,
        m: usize,
        velocity_sd: f64,
    },
    Spherical {
        position: PositionLaw,
        n: usize,
    },
    Dirichlet(Vec<Gamma<f64>>),
    Uniform,
    Grid {
        chain: Box<GridChain>,
        cumulative: Vec<f64>,
    },
}

/// Repeated draws from a model's invariant measure.
///
/// Closed-form laws are sampled exactly; a non-Gaussian position marginal
/// `exp(-V)` falls back to random-walk Metropolis, burnt in on construction.
#[derive(Debug, Clone)]
pub struct InvariantSampler {
    law: Law,
}

impl InvariantSampler {
    pub fn new<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<Self, ModelError> {
        Self::with_options(spec, &McmcOptions::default(), rng)
    }

    pub fn with_options<R: Rng + ?Sized>(
        spec: &ModelSpec,
        options: &McmcOptions,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        spec.validate()?;
        let law = match spec {
            ModelSpec::Hamiltonian {
                n,
                m,
                kappa,
                potential,
                ..
            } => Law::Hamiltonian {
                position: PositionLaw::new(potential, *n, options, rng)?,
                m: *m,
                velocity_sd: (1.0 / kappa).sqrt(),
            },
            ModelSpec::Spherical { n, potential, .. } => Law::Spherical {
                position: PositionLaw::new(potential, *n, options, rng)?,
                n: *n,
            },
            ModelSpec::WrightFisher { q, .. } => Law::Dirichlet(
                q.iter()
                    .map(|&qi| {
                        Gamma::new(qi, 1.0)
                            .map_err(|e| ModelError::InvalidSpec(format!("gamma({qi}): {e}")))
                    })
                    .collect::<Result<_, _>>()?,
            ),
            ModelSpec::DegenerateInterval { .. } => Law::Uniform,
            ModelSpec::StableLikeInterval {
                alpha_prime,
                grid_size,
                potential,
            } => {
                let chain = GridChain::new(*grid_size, *alpha_prime, potential)?;
                let mut acc = 0.0;
                let mut cumulative: Vec<f64> = chain
                    .weights()
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                if let Some(last) = cumulative.last_mut() {
                    *last = 1.0;
                }
                Law::Grid {
                    chain: Box::new(chain),
                    cumulative,
                }
            }
        };
        Ok(Self { law })
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> State {
        let mut coords = Vec::new();
        match &mut self.law {
            Law::Hamiltonian {
                position,
                m,
                velocity_sd,
            } => {
                position.draw(rng, &mut coords);
                coords.extend((0..*m).map(|_| *velocity_sd * rng.sample::<f64, _>(StandardNormal)));
            }
            Law::Spherical { position, n } => {
                position.draw(rng, &mut coords);
                let v: Vec<f64> = loop {
                    let v: Vec<f64> = (0..*n).map(|_| rng.sample(StandardNormal)).collect();
                    if norm_sq(&v) > 0.0 {
                        break v;
                    }
                };
                let r = norm_sq(&v).sqrt();
                coords.extend(v.iter().map(|x| x / r));
            }
            Law::Dirichlet(gammas) => {
                let g: Vec<f64> = gammas.iter().map(|d| d.sample(rng)).collect();
                let total: f64 = g.iter().sum();
                coords.extend(g[..g.len() - 1].iter().map(|x| x / total));
            }
            Law::Uniform => coords.push(rng.random::<f64>()),
            Law::Grid { chain, cumulative } => {
                let u: f64 = rng.random();
                let cell = cumulative.partition_point(|&c| c <= u).min(chain.len() - 1);
                coords.push(chain.midpoint(cell));
            }
        }
        State::new(coords)
    }

    pub fn draw_many<R: Rng + ?Sized>(&mut self, count: usize, rng: &mut R) -> Vec<State> {
        (0..count).map(|_| self.draw(rng)).collect()
    }
}

/// One draw from the invariant measure of `spec`.
pub fn sample_invariant<R: Rng + ?Sized>(
    spec: &ModelSpec,
    rng: &mut R,
) -> Result<State, ModelError> {
    Ok(InvariantSampler::new(spec, rng)?.draw(rng))
}
