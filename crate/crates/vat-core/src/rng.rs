//! Deterministic randomness.
//!
//! Every random draw in the library flows through an [`RngStream`] keyed by a
//! (seed, stream id) pair. Streams are independent ChaCha8 instances, so draws
//! from one stream are unaffected by how other streams are consumed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution as _, Pareto, StandardNormal};

use crate::model::Matrix;

/// A reproducible random stream. Identical (seed, stream) pairs yield
/// bit-identical draw sequences.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { rng, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// One standard normal draw.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform draw from [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    /// Uniform integer draw from 0..n.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// A chi-distributed draw with `dof` degrees of freedom.
    pub fn chi(&mut self, dof: usize) -> f64 {
        let chi_sq = ChiSquared::new(dof as f64).expect("dof >= 1");
        chi_sq.sample(&mut self.rng).sqrt()
    }

    /// A Pareto draw with scale 1 and the given shape (support [1, inf)).
    pub fn pareto(&mut self, shape: f64) -> f64 {
        let p = Pareto::new(1.0, shape).expect("shape > 0");
        p.sample(&mut self.rng)
    }
}

/// Matrix of i.i.d. standard normals, filled row-major, deterministic for a
/// fixed stream.
pub fn gaussian_matrix(rng: &mut RngStream, rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            *m.get_mut(r, c) = rng.normal();
        }
    }
    m
}
