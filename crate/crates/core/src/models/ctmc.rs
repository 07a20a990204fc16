use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{sample_exp, ModelError, PotentialSpec};

/// Jump chain on the midpoints of a uniform grid of `[0, 1]`.
///
/// Rates are `lambda(i -> j) = w_j / |x_i - x_j|^{1 + alpha'}` where `w` is
/// the normalised cell mass of `exp(-V)`, so `w_i lambda(i -> j)` is
/// symmetric and `w` is reversible for the chain.
#[derive(Debug, Clone)]
pub struct GridChain {
    weights: Vec<f64>,
    alpha_prime: f64,
    totals: Vec<f64>,
    /// Row-major cumulative jump probabilities, one row per cell.
    cumulative: Vec<f64>,
}

impl GridChain {
    pub fn new(
        grid_size: usize,
        alpha_prime: f64,
        potential: &PotentialSpec,
    ) -> Result<Self, ModelError> {
        if grid_size < 2 {
            return Err(ModelError::InvalidSpec("grid needs at least two cells".into()));
        }
        let g = grid_size;
        let raw: Vec<f64> = (0..g)
            .map(|j| (-potential.value(&[midpoint(j, g)])).exp())
            .collect();
        let mass: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / mass).collect();
        let mut chain = Self {
            weights,
            alpha_prime,
            totals: vec![0.0; g],
            cumulative: vec![0.0; g * g],
        };
        for i in 0..g {
            let mut acc = 0.0;
            for j in 0..g {
                acc += chain.rate(i, j);
                chain.cumulative[i * g + j] = acc;
            }
            chain.totals[i] = acc;
            let row = &mut chain.cumulative[i * g..(i + 1) * g];
            for c in row.iter_mut() {
                *c /= acc;
            }
            // pin the last reachable cell to exactly 1 so rounding never
            // selects the diagonal
            let last = if i == g - 1 { g - 2 } else { g - 1 };
            for c in &mut row[last..] {
                *c = 1.0;
            }
        }
        Ok(chain)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Normalised cell masses of the invariant measure.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        midpoint(cell, self.len())
    }

    pub fn cell_of(&self, x: f64) -> usize {
        let g = self.len();
        ((x * g as f64).floor().max(0.0) as usize).min(g - 1)
    }

    /// Jump rate from cell `i` to cell `j` (zero on the diagonal).
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let gap = (self.midpoint(i) - self.midpoint(j)).abs();
        self.weights[j] / gap.powf(1.0 + self.alpha_prime)
    }

    pub fn holding_time<R: Rng + ?Sized>(&self, cell: usize, rng: &mut R) -> f64 {
        sample_exp(rng) / self.totals[cell]
    }

    pub fn jump<R: Rng + ?Sized>(&self, cell: usize, rng: &mut R) -> usize {
        let g = self.len();
        let row = &self.cumulative[cell * g..(cell + 1) * g];
        let u: f64 = rng.random();
        row.partition_point(|&c| c <= u).min(g - 1)
    }

    pub fn generator(&self) -> DMatrix<f64> {
        let g = self.len();
        DMatrix::from_fn(g, g, |i, j| {
            if i == j {
                -self.totals[i]
            } else {
                self.rate(i, j)
            }
        })
    }

    /// Solves `pi Q = 0`, `sum(pi) = 1` directly.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>, ModelError> {
        let g = self.len();
        let mut system = self.generator().transpose();
        let mut rhs = DVector::zeros(g);
        for j in 0..g {
            system[(g - 1, j)] = 1.0;
        }
        rhs[g - 1] = 1.0;
        system
            .lu()
            .solve(&rhs)
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| ModelError::InvalidSpec("singular generator".into()))
    }
}

fn midpoint(cell: usize, g: usize) -> f64 {
    (cell as f64 + 0.5) / g as f64
}
