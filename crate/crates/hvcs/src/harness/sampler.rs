//! Parameter sampling and the field-sampler abstraction.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::pde::{PdeProblem, PARAM_BOUND};

/// Draws `m` points uniformly from `(-sqrt(3), sqrt(3))^d`, deterministic
/// in the seed. Draws are nested: the first `m1` points of a longer draw
/// with the same seed equal the `m1`-point draw.
pub fn draw_samples(m: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(m >= 1 && d >= 1, "m and d must be positive");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(-PARAM_BOUND..PARAM_BOUND)).collect())
        .collect()
}

/// Maps a physical parameter point `t in (-sqrt(3), sqrt(3))^d` to basis
/// coordinates `y = t / sqrt(3) in (-1, 1)^d`.
pub fn to_basis_coords(t: &[f64]) -> Vec<f64> {
    t.iter().map(|&v| v / PARAM_BOUND).collect()
}

/// Anything that produces a discretized field per parameter point.
pub trait FieldSampler: Sync {
    fn parametric_dim(&self) -> usize;
    /// Discretization dimension of the produced fields.
    fn field_dim(&self) -> usize;
    /// Field at physical parameter point `t`.
    fn sample(&self, t: &[f64]) -> Array1<f64>;
}

/// The elliptic model problem as a field sampler.
pub struct PdeFieldSampler {
    problem: PdeProblem,
}

impl PdeFieldSampler {
    pub fn new(problem: PdeProblem) -> Self {
        PdeFieldSampler { problem }
    }

    pub fn problem(&self) -> &PdeProblem {
        &self.problem
    }
}

impl FieldSampler for PdeFieldSampler {
    fn parametric_dim(&self) -> usize {
        self.problem.coefficient().dimension()
    }

    fn field_dim(&self) -> usize {
        self.problem.interior_nodes()
    }

    fn sample(&self, t: &[f64]) -> Array1<f64> {
        self.problem.solve(t)
    }
}
