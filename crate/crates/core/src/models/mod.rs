//! Simulators for the model families and samplers for their invariant laws.
//!
//! Diffusions are advanced by fixed-step explicit Euler schemes. The
//! stable-like jump process is replaced by a continuous-time Markov chain on
//! a uniform grid that shares its discretised invariant measure.

mod ctmc;
mod invariant;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::subordinator::{check_ascending, BernsteinSpec, SubordinatorError};
use crate::transport::Metric;

pub use ctmc::GridChain;
pub use invariant::{sample_invariant, InvariantSampler, McmcOptions};

/// Boundary clamp for the degenerate interval diffusion.
pub const INTERVAL_CLAMP: f64 = 1e-9;
/// Largest condition number accepted for `Q Q^*`.
pub const MAX_COUPLING_CONDITION: f64 = 1e12;
pub const DEFAULT_DT_MAX: f64 = 0.1;
/// How far from the unit sphere an entering spherical velocity may be.
const SPHERE_ENTRY_TOL: f64 = 1e-9;
const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("time step {dt} is not in (0, {dt_max}]")]
    StepTooLarge { dt: f64, dt_max: f64 },
    #[error("explicit noise is not defined for jump models")]
    NoiseNotApplicable,
    #[error("MCMC sampler did not converge: {0}")]
    McmcNotConverged(String),
    #[error(transparent)]
    Subordinator(#[from] SubordinatorError),
}

/// `V(x) = (1 + theta |x|^2)^tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub theta: f64,
    pub tau: f64,
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(ModelError::InvalidSpec(format!(
                "potential theta must be positive, got {}",
                self.theta
            )));
        }
        if !(self.tau.is_finite() && self.tau > 0.5) {
            return Err(ModelError::InvalidSpec(format!(
                "potential tau must exceed 1/2, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (1.0 + self.theta * norm_sq(x)).powf(self.tau)
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let scale =
            2.0 * self.tau * self.theta * (1.0 + self.theta * norm_sq(x)).powf(self.tau - 1.0);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = scale * xi;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WrightFisherVariant {
    Mutation,
    #[default]
    Diagonal,
}

fn default_kappa() -> f64 {
    1.0
}

fn default_sigma() -> f64 {
    std::f64::consts::SQRT_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Kinetic system on `R^n x R^m`; `coupling` is the `n x m` matrix `Q`
    /// given row by row, the identity when absent.
    Hamiltonian {
        n: usize,
        m: usize,
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coupling: Option<Vec<Vec<f64>>>,
        potential: PotentialSpec,
    },
    /// Position in `R^n`, velocity on the unit sphere `S^{n-1}`.
    Spherical {
        n: usize,
        #[serde(default = "default_sigma")]
        sigma: f64,
        potential: PotentialSpec,
    },
    /// Simplex-valued diffusion with Dirichlet(`q`) invariant law; `N = q.len() - 1`.
    WrightFisher {
        q: Vec<f64>,
        #[serde(default)]
        variant: WrightFisherVariant,
    },
    DegenerateInterval {
        l: f64,
    },
    StableLikeInterval {
        alpha_prime: f64,
        grid_size: usize,
        potential: PotentialSpec,
    },
}

impl ModelSpec {
    /// Number of coordinates of a state.
    pub fn state_dim(&self) -> usize {
        match self {
            ModelSpec::Hamiltonian { n, m, .. } => n + m,
            ModelSpec::Spherical { n, .. } => 2 * n,
            ModelSpec::WrightFisher { q, .. } => q.len().saturating_sub(1),
            ModelSpec::DegenerateInterval { .. } | ModelSpec::StableLikeInterval { .. } => 1,
        }
    }

    /// Number of standard Gaussians consumed by one diffusion step.
    pub fn noise_dim(&self) -> usize {
        match self {
            ModelSpec::Hamiltonian { m, .. } => *m,
            ModelSpec::Spherical { n, .. } => *n,
            ModelSpec::WrightFisher { q, .. } => q.len().saturating_sub(1),
            ModelSpec::DegenerateInterval { .. } => 1,
            ModelSpec::StableLikeInterval { .. } => 0,
        }
    }

    /// Ground metric used to compare states.
    pub fn metric(&self) -> Metric {
        match self {
            ModelSpec::Spherical { n, .. } => Metric::ProductSphere { n: *n },
            _ => Metric::Euclidean,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidSpec(msg));
        match self {
            ModelSpec::Hamiltonian {
                n,
                m,
                kappa,
                coupling,
                potential,
            } => {
                if *n == 0 || *m == 0 {
                    return bad("hamiltonian dimensions must be positive".into());
                }
                if !(kappa.is_finite() && *kappa > 0.0) {
                    return bad(format!("kappa must be positive, got {kappa}"));
                }
                potential.validate()?;
                coupling_matrix(*n, *m, coupling.as_deref())?;
                Ok(())
            }
            ModelSpec::Spherical {
                n,
                sigma,
                potential,
            } => {
                if *n < 2 {
                    return bad(format!("spherical model needs n >= 2, got {n}"));
                }
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return bad(format!("sigma must be positive, got {sigma}"));
                }
                potential.validate()
            }
            ModelSpec::WrightFisher { q, .. } => {
                if q.len() < 2 {
                    return bad("wright-fisher needs at least two q entries".into());
                }
                if let Some(qi) = q.iter().find(|qi| !(qi.is_finite() && **qi >= 1.0)) {
                    return bad(format!("every q_i must be >= 1, got {qi}"));
                }
                Ok(())
            }
            ModelSpec::DegenerateInterval { l } => {
                if !(l.is_finite() && *l > 2.0) {
                    return bad(format!("l must exceed 2, got {l}"));
                }
                Ok(())
            }
            ModelSpec::StableLikeInterval {
                alpha_prime,
                grid_size,
                potential,
            } => {
                if !(*alpha_prime > 0.0 && *alpha_prime < 2.0) {
                    return bad(format!("alpha_prime must lie in (0, 2), got {alpha_prime}"));
                }
                if *grid_size < 2 {
                    return bad(format!("grid_size must be at least 2, got {grid_size}"));
                }
                potential.validate()
            }
        }
    }

    /// Checks the model's state-space invariants.
    pub fn check_state(&self, state: &State) -> Result<(), ModelError> {
        let x = &state.coords;
        let fail = |msg: String| Err(ModelError::InvalidState(msg));
        if x.len() != self.state_dim() {
            return fail(format!(
                "expected {} coordinates, got {}",
                self.state_dim(),
                x.len()
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return fail("non-finite coordinate".into());
        }
        match self {
            ModelSpec::Hamiltonian { .. } => Ok(()),
            ModelSpec::Spherical { n, .. } => {
                let r = norm_sq(&x[*n..]).sqrt();
                if (r - 1.0).abs() > SPHERE_ENTRY_TOL {
                    return fail(format!("velocity norm {r} is not 1"));
                }
                Ok(())
            }
            ModelSpec::WrightFisher { .. } => {
                let total: f64 = x.iter().sum();
                if x.iter().any(|&v| v < 0.0) || total > 1.0 + SIMPLEX_TOL {
                    return fail(format!("{x:?} is outside the simplex"));
                }
                Ok(())
            }
            ModelSpec::DegenerateInterval { .. } | ModelSpec::StableLikeInterval { .. } => {
                if !(0.0..=1.0).contains(&x[0]) {
                    return fail(format!("{} is outside [0, 1]", x[0]));
                }
                Ok(())
            }
        }
    }
}

fn coupling_matrix(
    n: usize,
    m: usize,
    rows: Option<&[Vec<f64>]>,
) -> Result<DMatrix<f64>, ModelError> {
    let q = match rows {
        None if n == m => DMatrix::identity(n, m),
        None => {
            return Err(ModelError::InvalidSpec(format!(
                "identity coupling needs n == m, got n={n}, m={m}"
            )))
        }
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != m) {
                return Err(ModelError::InvalidSpec(format!(
                    "coupling must be an {n} x {m} matrix"
                )));
            }
            DMatrix::from_fn(n, m, |i, j| rows[i][j])
        }
    };
    let gram = &q * q.transpose();
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0 && hi / lo < MAX_COUPLING_CONDITION) {
        return Err(ModelError::InvalidSpec(format!(
            "Q Q^* is singular or ill-conditioned (eigenvalues in [{lo:e}, {hi:e}])"
        )));
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub coords: Vec<f64>,
}

impl State {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

/// Result of one step: the new state and the process time it consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: State,
    pub elapsed: f64,
}

enum Prepared {
    Hamiltonian { q: DMatrix<f64> },
    Diffusion,
    Jump(GridChain),
}

/// A validated model ready to be stepped.
pub struct Simulator {
    spec: ModelSpec,
    prepared: Prepared,
    dt_max: f64,
}

impl Simulator {
    pub fn new(spec: &ModelSpec) -> Result<Self, ModelError> {
        spec.validate()?;
        let prepared = match spec {
            ModelSpec::Hamiltonian { n, m, coupling, .. } => Prepared::Hamiltonian {
                q: coupling_matrix(*n, *m, coupling.as_deref())?,
            },
            ModelSpec::StableLikeInterval {
                alpha_prime,
                grid_size,
                potential,
            } => Prepared::Jump(GridChain::new(*grid_size, *alpha_prime, potential)?),
            _ => Prepared::Diffusion,
        };
        Ok(Self {
            spec: spec.clone(),
            prepared,
            dt_max: DEFAULT_DT_MAX,
        })
    }

    pub fn with_dt_max(mut self, dt_max: f64) -> Self {
        self.dt_max = dt_max;
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// The grid chain backing a jump model.
    pub fn chain(&self) -> Option<&GridChain> {
        match &self.prepared {
            Prepared::Jump(chain) => Some(chain),
            _ => None,
        }
    }

    fn check_dt(&self, dt: f64) -> Result<(), ModelError> {
        if dt.is_finite() && dt > 0.0 && dt <= self.dt_max {
            Ok(())
        } else {
            Err(ModelError::StepTooLarge {
                dt,
                dt_max: self.dt_max,
            })
        }
    }

    /// One step of the model. Diffusions advance by `dt`; jump models ignore
    /// `dt` and advance to their next event.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &State,
        dt: f64,
        rng: &mut R,
    ) -> Result<Step, ModelError> {
        self.spec.check_state(state)?;
        if let Prepared::Jump(chain) = &self.prepared {
            let mut cell = chain.cell_of(state.coords[0]);
            let elapsed = chain.holding_time(cell, rng);
            cell = chain.jump(cell, rng);
            return Ok(Step {
                state: State::new(vec![chain.midpoint(cell)]),
                elapsed,
            });
        }
        self.check_dt(dt)?;
        let noise = draw_noise(self.spec.noise_dim(), rng);
        let mut coords = state.coords.clone();
        self.diffuse(&mut coords, dt, &noise);
        Ok(Step {
            state: State::new(coords),
            elapsed: dt,
        })
    }

    /// One diffusion step driven by the given standard Gaussian increments.
    pub fn step_with_noise(
        &self,
        state: &State,
        dt: f64,
        noise: &[f64],
    ) -> Result<State, ModelError> {
        if matches!(self.prepared, Prepared::Jump(_)) {
            return Err(ModelError::NoiseNotApplicable);
        }
        self.spec.check_state(state)?;
        self.check_dt(dt)?;
        if noise.len() != self.spec.noise_dim() {
            return Err(ModelError::InvalidState(format!(
                "expected {} noise components, got {}",
                self.spec.noise_dim(),
                noise.len()
            )));
        }
        let mut coords = state.coords.clone();
        self.diffuse(&mut coords, dt, noise);
        Ok(State::new(coords))
    }

    fn diffuse(&self, x: &mut [f64], dt: f64, noise: &[f64]) {
        match (&self.spec, &self.prepared) {
            (
                ModelSpec::Hamiltonian {
                    n, kappa, potential, ..
                },
                Prepared::Hamiltonian { q },
            ) => hamiltonian_step(x, *n, *kappa, q, potential, dt, noise),
            (
                ModelSpec::Spherical {
                    n,
                    sigma,
                    potential,
                },
                _,
            ) => spherical_step(x, *n, *sigma, potential, dt, noise),
            (ModelSpec::WrightFisher { q, variant }, _) => match variant {
                WrightFisherVariant::Diagonal => wright_fisher_diagonal_step(x, q, dt, noise),
                WrightFisherVariant::Mutation => wright_fisher_mutation_step(x, q, dt, noise),
            },
            (ModelSpec::DegenerateInterval { l }, _) => degenerate_step(x, *l, dt, noise[0]),
            _ => unreachable!("jump models are not diffused"),
        }
    }

    /// Runs the base process and records it at each requested internal time.
    ///
    /// Diffusions record the state at the last grid time `k dt` not after the
    /// request; jump models record the state holding at that instant.
    pub fn simulate_base<R: Rng + ?Sized>(
        &self,
        x0: &State,
        internal_times: &[f64],
        dt: f64,
        rng: &mut R,
    ) -> Result<Vec<State>, ModelError> {
        self.spec.check_state(x0)?;
        check_ascending(internal_times)?;
        let mut out = Vec::with_capacity(internal_times.len());
        if let Prepared::Jump(chain) = &self.prepared {
            let mut cell = chain.cell_of(x0.coords[0]);
            let mut current = x0.coords[0];
            let mut next_event = chain.holding_time(cell, rng);
            for &t in internal_times {
                while next_event <= t {
                    cell = chain.jump(cell, rng);
                    current = chain.midpoint(cell);
                    next_event += chain.holding_time(cell, rng);
                }
                out.push(State::new(vec![current]));
            }
            return Ok(out);
        }
        self.check_dt(dt)?;
        let mut x = x0.coords.clone();
        let mut noise = vec![0.0; self.spec.noise_dim()];
        let mut steps_done: u64 = 0;
        for &t in internal_times {
            let target = (t / dt + 1e-9).floor() as u64;
            while steps_done < target {
                for z in noise.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
                self.diffuse(&mut x, dt, &noise);
                steps_done += 1;
            }
            out.push(State::new(x.clone()));
        }
        Ok(out)
    }

    /// Observes `X_{S_t}` at the given physical times, with `S` drawn from
    /// `bernstein` first and the base path drawn afterwards from the same stream.
    pub fn simulate_subordinated<R: Rng + ?Sized>(
        &self,
        bernstein: &BernsteinSpec,
        x0: &State,
        obs_times: &[f64],
        dt: f64,
        rng: &mut R,
    ) -> Result<Vec<State>, ModelError> {
        let path = bernstein.sample_path(obs_times, rng)?;
        self.simulate_base(x0, &path.values, dt, rng)
    }
}

fn draw_noise<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn hamiltonian_step(
    x: &mut [f64],
    n: usize,
    kappa: f64,
    q: &DMatrix<f64>,
    potential: &PotentialSpec,
    dt: f64,
    noise: &[f64],
) {
    let m = x.len() - n;
    let (pos, vel) = x.split_at_mut(n);
    let mut grad = vec![0.0; n];
    potential.gradient_into(pos, &mut grad);
    let old_vel = vel.to_vec();
    for i in 0..n {
        let push: f64 = (0..m).map(|j| q[(i, j)] * old_vel[j]).sum();
        pos[i] += kappa * push * dt;
    }
    let diffusion = (2.0 * dt).sqrt();
    for j in 0..m {
        let force: f64 = (0..n).map(|i| q[(i, j)] * grad[i]).sum();
        vel[j] += -(force + kappa * old_vel[j]) * dt + diffusion * noise[j];
    }
}

fn spherical_step(
    x: &mut [f64],
    n: usize,
    sigma: f64,
    potential: &PotentialSpec,
    dt: f64,
    noise: &[f64],
) {
    let (pos, vel) = x.split_at_mut(n);
    let mut grad = vec![0.0; n];
    potential.gradient_into(pos, &mut grad);
    let old_vel = vel.to_vec();
    for (p, v) in pos.iter_mut().zip(&old_vel) {
        *p += v * dt;
    }
    let along_grad: f64 = grad.iter().zip(&old_vel).map(|(g, v)| g * v).sum();
    let along_noise: f64 = noise.iter().zip(&old_vel).map(|(z, v)| z * v).sum();
    let dim = (n - 1) as f64;
    let curvature = 0.5 * sigma * sigma * dim;
    let scale = sigma * dt.sqrt();
    for i in 0..n {
        let tangent_grad = grad[i] - along_grad * old_vel[i];
        let tangent_noise = noise[i] - along_noise * old_vel[i];
        vel[i] += (-tangent_grad / dim - curvature * old_vel[i]) * dt + scale * tangent_noise;
    }
    let r = norm_sq(vel).sqrt();
    for v in vel.iter_mut() {
        *v /= r;
    }
}

/// Sets negative coordinates to zero and rescales onto the simplex when the
/// total mass exceeds one.
fn project_to_simplex(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = x.iter().sum();
    if total > 1.0 {
        for v in x.iter_mut() {
            *v /= total;
        }
    }
}

fn wright_fisher_diagonal_step(x: &mut [f64], q: &[f64], dt: f64, noise: &[f64]) {
    let big_n = x.len();
    let rest = 1.0 - x.iter().sum::<f64>();
    let q_last = q[big_n];
    let old = x.to_vec();
    for i in 0..big_n {
        let drift = q[i] * rest - q_last * old[i];
        let var = (2.0 * old[i] * rest).max(0.0);
        x[i] += drift * dt + (var * dt).sqrt() * noise[i];
    }
    project_to_simplex(x);
}

fn wright_fisher_mutation_step(x: &mut [f64], q: &[f64], dt: f64, noise: &[f64]) {
    let big_n = x.len();
    let q_total: f64 = q.iter().sum();
    let cov = DMatrix::from_fn(big_n, big_n, |i, j| {
        let diag = if i == j { x[i] } else { 0.0 };
        2.0 * (diag - x[i] * x[j])
    });
    let eig = SymmetricEigen::new(cov);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    let sdt = dt.sqrt();
    let old = x.to_vec();
    for i in 0..big_n {
        let shock: f64 = (0..big_n).map(|j| root[(i, j)] * noise[j]).sum();
        x[i] = old[i] + (q[i] - q_total * old[i]) * dt + sdt * shock;
    }
    project_to_simplex(x);
}

fn degenerate_step(x: &mut [f64], l: f64, dt: f64, noise: f64) {
    let y = x[0];
    let spread = y * (1.0 - y);
    let drift = l * spread.powf(l - 1.0) * (1.0 - 2.0 * y);
    let var = 2.0 * spread.max(0.0).powf(l);
    x[0] = (y + drift * dt + (var * dt).sqrt() * noise).clamp(INTERVAL_CLAMP, 1.0 - INTERVAL_CLAMP);
}

pub(crate) fn sample_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}
