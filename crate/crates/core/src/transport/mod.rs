//! Wasserstein distances between finite point clouds.
//!
//! Exact distances come from the monotone coupling in one dimension, a
//! shortest-augmenting-path assignment for equal-size uniform clouds and a
//! network simplex for everything else. A factorial brute force serves as an
//! oracle for small inputs, and sliced distances give a cheap diagnostic.

mod assignment;
mod network_simplex;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::State;

pub use assignment::solve_assignment;
pub use network_simplex::{optimal_flow, transport_cost, FlowError};

/// Default cap on the total support size handed to the exact solvers.
pub const DEFAULT_SIZE_CAP: usize = 4096;
/// Largest size the brute-force oracle accepts.
pub const BRUTEFORCE_MAX: usize = 8;
const WEIGHT_TOL: f64 = 1e-12;
const SPHERE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("point cloud is empty")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("metrics of the two clouds differ")]
    MetricMismatch,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("order p must be finite and at least 1, got {0}")]
    InvalidOrder(f64),
    #[error("total support {size} exceeds the cap of {cap}")]
    SizeCapExceeded { size: usize, cap: usize },
    #[error("brute force needs equal-size uniform clouds with at most {max} points")]
    TooLarge { max: usize },
    #[error("sliced distances need the Euclidean metric")]
    NotEuclidean,
    #[error("transport problem is infeasible")]
    Infeasible,
}

/// Ground metric on the points of a cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Metric {
    Euclidean,
    /// `R^n x S^{n-1}` embedded in `R^{2n}`: Euclidean on the first `n`
    /// coordinates, great-circle arc on the last `n`.
    ProductSphere { n: usize },
}

impl Metric {
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Metric::Euclidean => squared_gap(x, y).sqrt(),
            Metric::ProductSphere { n } => {
                let flat = squared_gap(&x[..n], &y[..n]);
                // chord form stays accurate for nearby points, unlike acos
                let chord = squared_gap(&x[n..], &y[n..]).sqrt();
                let arc = 2.0 * (0.5 * chord).min(1.0).asin();
                (flat + arc * arc).sqrt()
            }
        }
    }

    fn check_point(&self, point: &[f64]) -> Result<(), TransportError> {
        if let Metric::ProductSphere { n } = *self {
            if point.len() != 2 * n {
                return Err(TransportError::DimensionMismatch {
                    expected: 2 * n,
                    got: point.len(),
                });
            }
            let r: f64 = point[n..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if (r - 1.0).abs() > SPHERE_TOL {
                return Err(TransportError::InvalidPoint(format!(
                    "sphere component has norm {r}"
                )));
            }
        }
        Ok(())
    }
}

fn squared_gap(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Weighted point cloud with points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    metric: Metric,
    uniform: bool,
}

impl PointCloud {
    pub fn new(
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        metric: Metric,
    ) -> Result<Self, TransportError> {
        let dim = points.first().ok_or(TransportError::Empty)?.len();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(TransportError::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, weights, metric)
    }

    pub fn uniform(points: Vec<Vec<f64>>, metric: Metric) -> Result<Self, TransportError> {
        let w = 1.0 / points.len().max(1) as f64;
        let n = points.len();
        Self::new(points, vec![w; n], metric)
    }

    pub fn from_flat(
        dim: usize,
        coords: Vec<f64>,
        weights: Vec<f64>,
        metric: Metric,
    ) -> Result<Self, TransportError> {
        if dim == 0 || weights.is_empty() {
            return Err(TransportError::Empty);
        }
        if coords.len() != dim * weights.len() {
            return Err(TransportError::DimensionMismatch {
                expected: dim * weights.len(),
                got: coords.len(),
            });
        }
        if let Some(bad) = coords.iter().find(|v| !v.is_finite()) {
            return Err(TransportError::InvalidPoint(format!("coordinate {bad}")));
        }
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(TransportError::InvalidWeights(format!(
                "weight {bad} is not positive"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(TransportError::InvalidWeights(format!(
                "weights sum to {total}"
            )));
        }
        for point in coords.chunks(dim) {
            metric.check_point(point)?;
        }
        let uniform = weights.iter().all(|&w| w == weights[0]);
        Ok(Self {
            dim,
            coords,
            weights,
            metric,
            uniform,
        })
    }

    pub fn uniform_flat(dim: usize, coords: Vec<f64>, metric: Metric) -> Result<Self, TransportError> {
        let n = coords.len().checked_div(dim).unwrap_or(0);
        let w = 1.0 / n.max(1) as f64;
        Self::from_flat(dim, coords, vec![w; n], metric)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    /// True when every weight is the same.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// The cloud with every point scaled by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self, TransportError> {
        Self::from_flat(
            self.dim,
            self.coords.iter().map(|v| v * c).collect(),
            self.weights.clone(),
            self.metric,
        )
    }

    /// Projection onto a direction, as a one-dimensional Euclidean cloud.
    pub fn project(&self, direction: &[f64]) -> Result<Self, TransportError> {
        if direction.len() != self.dim {
            return Err(TransportError::DimensionMismatch {
                expected: self.dim,
                got: direction.len(),
            });
        }
        let coords = self
            .points()
            .map(|p| p.iter().zip(direction).map(|(a, b)| a * b).sum())
            .collect();
        Ok(Self {
            dim: 1,
            coords,
            weights: self.weights.clone(),
            metric: Metric::Euclidean,
            uniform: self.uniform,
        })
    }
}

/// Uniform cloud over the states of a trajectory sampled on a uniform grid.
pub fn empirical_from_trajectory(
    states: &[State],
    metric: Metric,
) -> Result<PointCloud, TransportError> {
    let dim = states.first().ok_or(TransportError::Empty)?.coords.len();
    let mut coords = Vec::with_capacity(states.len() * dim);
    for s in states {
        if s.coords.len() != dim {
            return Err(TransportError::DimensionMismatch {
                expected: dim,
                got: s.coords.len(),
            });
        }
        coords.extend_from_slice(&s.coords);
    }
    PointCloud::uniform_flat(dim, coords, metric)
}

fn check_order(p: f64) -> Result<(), TransportError> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(TransportError::InvalidOrder(p))
    }
}

fn check_pair(a: &PointCloud, b: &PointCloud) -> Result<(), TransportError> {
    if a.dim != b.dim {
        return Err(TransportError::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    if a.metric != b.metric {
        return Err(TransportError::MetricMismatch);
    }
    Ok(())
}

/// Exact `W_p` on the line through the monotone coupling.
pub fn w_p_1d(a: &PointCloud, b: &PointCloud, p: f64) -> Result<f64, TransportError> {
    check_order(p)?;
    check_pair(a, b)?;
    if a.dim != 1 {
        return Err(TransportError::DimensionMismatch {
            expected: 1,
            got: a.dim,
        });
    }
    Ok(monotone_cost(a, b, p).powf(1.0 / p))
}

fn sorted_atoms(positions: &[f64], masses: impl Iterator<Item = f64>) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> = positions.iter().copied().zip(masses).collect();
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    atoms
}

/// `W_p^p` of the monotone coupling. Uniform pairs are swept with integer
/// masses so that ties in the cumulative weights are exact.
fn monotone_cost(a: &PointCloud, b: &PointCloud, p: f64) -> f64 {
    if a.uniform && b.uniform {
        let (n, m) = (a.len() as i64, b.len() as i64);
        let l = n / gcd(n, m) * m;
        let xs = sorted_atoms(&a.coords, std::iter::repeat((l / n) as f64));
        let ys = sorted_atoms(&b.coords, std::iter::repeat((l / m) as f64));
        return sweep(&xs, &ys, p) / l as f64;
    }
    let xs = sorted_atoms(&a.coords, a.weights.iter().copied());
    let ys = sorted_atoms(&b.coords, b.weights.iter().copied());
    sweep(&xs, &ys, p)
}

fn sweep(xs: &[(f64, f64)], ys: &[(f64, f64)], p: f64) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut left_x, mut left_y) = (xs[0].1, ys[0].1);
    let mut cost = 0.0;
    loop {
        let mass = left_x.min(left_y);
        if mass > 0.0 {
            cost += mass * (xs[i].0 - ys[j].0).abs().powf(p);
        }
        left_x -= mass;
        left_y -= mass;
        // the side that ran out advances; ties advance both
        let advance_x = left_x <= left_y;
        let advance_y = left_y <= left_x;
        if advance_x {
            i += 1;
            if i == xs.len() {
                break;
            }
            left_x = xs[i].1;
        }
        if advance_y {
            j += 1;
            if j == ys.len() {
                break;
            }
            left_y = ys[j].1;
        }
    }
    cost
}

/// Matrix of `rho(x_i, y_j)^p`, rows indexed by `a`.
pub fn cost_matrix(a: &PointCloud, b: &PointCloud, p: f64) -> Vec<f64> {
    let m = b.len();
    let mut out = vec![0.0; a.len() * m];
    let fill = |(i, row): (usize, &mut [f64])| {
        let x = a.point(i);
        for (j, c) in row.iter_mut().enumerate() {
            *c = a.metric.distance(x, b.point(j)).powf(p);
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(m).enumerate().for_each(fill);
    }
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(m).enumerate().for_each(fill);
    out
}

/// Exact `W_p` with the default support cap.
pub fn w_p_exact(a: &PointCloud, b: &PointCloud, p: f64) -> Result<f64, TransportError> {
    w_p_exact_with_cap(a, b, p, DEFAULT_SIZE_CAP)
}

pub fn w_p_exact_with_cap(
    a: &PointCloud,
    b: &PointCloud,
    p: f64,
    cap: usize,
) -> Result<f64, TransportError> {
    check_order(p)?;
    check_pair(a, b)?;
    let size = a.len() + b.len();
    if size > cap {
        return Err(TransportError::SizeCapExceeded { size, cap });
    }
    let costs = cost_matrix(a, b, p);
    let total = if a.uniform && b.uniform && a.len() == b.len() {
        let n = a.len();
        let assigned = solve_assignment(n, &costs);
        assigned
            .iter()
            .enumerate()
            .map(|(i, &j)| costs[i * n + j])
            .sum::<f64>()
            / n as f64
    } else {
        let (supply, demand, scale) = integer_masses(a, b);
        let cost = transport_cost(&supply, &demand, &costs).map_err(|_| TransportError::Infeasible)?;
        cost / scale
    };
    Ok(total.max(0.0).powf(1.0 / p))
}

/// Integer supplies proportional to the weights, with their common scale.
///
/// Uniform clouds get exact rational masses via the least common multiple of
/// the sizes; general weights are rounded on a `2^50` grid with the rounding
/// surplus absorbed by the heaviest atom, and the scale is the final total.
fn integer_masses(a: &PointCloud, b: &PointCloud) -> (Vec<i64>, Vec<i64>, f64) {
    let (n, m) = (a.len() as i64, b.len() as i64);
    if a.uniform && b.uniform {
        let l = n / gcd(n, m) * m;
        return (vec![l / n; a.len()], vec![l / m; b.len()], l as f64);
    }
    let scale = (1u64 << 50) as f64;
    let round = |w: &[f64]| -> Vec<i64> { w.iter().map(|x| ((x * scale).round() as i64).max(1)).collect() };
    let mut supply = round(&a.weights);
    let mut demand = round(&b.weights);
    let surplus: i64 = supply.iter().sum::<i64>() - demand.iter().sum::<i64>();
    let heaviest = |v: &[i64]| (0..v.len()).max_by_key(|&k| v[k]).unwrap_or(0);
    if surplus > 0 {
        let k = heaviest(&demand);
        demand[k] += surplus;
    } else if surplus < 0 {
        let k = heaviest(&supply);
        supply[k] -= surplus;
    }
    let total = supply.iter().sum::<i64>() as f64;
    (supply, demand, total)
}

fn gcd(mut x: i64, mut y: i64) -> i64 {
    while y != 0 {
        (x, y) = (y, x % y);
    }
    x
}

/// Minimum over all `n!` assignments; the reference oracle for small inputs.
pub fn w_p_bruteforce(a: &PointCloud, b: &PointCloud, p: f64) -> Result<f64, TransportError> {
    check_order(p)?;
    check_pair(a, b)?;
    let n = a.len();
    if n != b.len() || n > BRUTEFORCE_MAX || !a.uniform || !b.uniform {
        return Err(TransportError::TooLarge { max: BRUTEFORCE_MAX });
    }
    let costs = cost_matrix(a, b, p);
    let eval = |perm: &[usize]| -> f64 { perm.iter().enumerate().map(|(i, &j)| costs[i * n + j]).sum() };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = eval(&perm);
    // Heap's algorithm, iterative form
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok((best / n as f64).powf(1.0 / p))
}

/// Uniformly distributed unit vectors in `R^dim`.
pub fn random_directions<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r > 0.0 {
                break v.into_iter().map(|x| x / r).collect();
            }
        })
        .collect()
}

/// Sliced `W_p`: `(mean_theta W_p^p(a.theta, b.theta))^{1/p}` over random directions.
pub fn sliced_w_p<R: Rng + ?Sized>(
    a: &PointCloud,
    b: &PointCloud,
    p: f64,
    num_projections: usize,
    rng: &mut R,
) -> Result<f64, TransportError> {
    check_pair(a, b)?;
    let directions = random_directions(a.dim, num_projections.max(1), rng);
    sliced_w_p_with_directions(a, b, p, &directions)
}

pub fn sliced_w_p_with_directions(
    a: &PointCloud,
    b: &PointCloud,
    p: f64,
    directions: &[Vec<f64>],
) -> Result<f64, TransportError> {
    check_order(p)?;
    check_pair(a, b)?;
    if a.metric != Metric::Euclidean {
        return Err(TransportError::NotEuclidean);
    }
    if directions.is_empty() {
        return Err(TransportError::Empty);
    }
    let mut total = 0.0;
    for theta in directions {
        total += monotone_cost(&a.project(theta)?, &b.project(theta)?, p);
    }
    Ok((total / directions.len() as f64).powf(1.0 / p))
}

/// Exact `W_p` through the cheapest applicable solver.
pub fn w_p(a: &PointCloud, b: &PointCloud, p: f64) -> Result<f64, TransportError> {
    if a.dim == 1 && a.metric == Metric::Euclidean {
        w_p_1d(a, b, p)
    } else {
        w_p_exact(a, b, p)
    }
}
