//! Random directions and reproducible random substreams.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::norm;

/// Largest batch index addressable by [`Substreams::sample`].
pub const MAX_BATCH: u64 = 1 << 20;

const NOISE_STREAM_BIT: u64 = 1 << 63;

/// A pair of independent generators for one estimator sample: `geometry`
/// drives directions and radii, `noise` drives the oracle's stochastic terms.
#[derive(Debug, Clone)]
pub struct SampleRng {
    pub geometry: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

impl SampleRng {
    pub fn from_seed(seed: u64) -> Self {
        Substreams::new(seed).sample(0, 0)
    }
}

/// Splits one run seed into independent ChaCha streams addressed by
/// `(iteration, batch index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Substreams {
    key: [u8; 32],
}

impl Substreams {
    pub fn new(seed: u64) -> Self {
        Self {
            key: ChaCha8Rng::seed_from_u64(seed).get_seed(),
        }
    }

    fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(id);
        rng
    }

    /// Streams for sample `index` of iteration `iter`.
    ///
    /// # Panics
    /// If `index >= MAX_BATCH` or `iter >= 2^43`.
    pub fn sample(&self, iter: u64, index: u64) -> SampleRng {
        assert!(index < MAX_BATCH, "batch index {index} exceeds {MAX_BATCH}");
        assert!(iter < 1 << 43, "iteration {iter} exceeds the stream address space");
        let id = (iter << 20) | index;
        SampleRng {
            geometry: self.stream(id),
            noise: self.stream(id | NOISE_STREAM_BIT),
        }
    }
}

/// Fills `out` with a point drawn uniformly from the unit sphere in `R^d`
/// (normalised Gaussian; degenerate draws are redrawn).
pub fn fill_sphere<R: RngCore + ?Sized>(out: &mut [f64], rng: &mut R) {
    loop {
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let n = norm(out);
        if n > 0.0 && n.is_finite() {
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

pub fn sample_sphere<R: RngCore + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    assert!(d >= 1, "sphere dimension must be positive");
    let mut e = vec![0.0; d];
    fill_sphere(&mut e, rng);
    e
}

pub fn fill_gaussian<R: RngCore + ?Sized>(out: &mut [f64], rng: &mut R) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Uniform draw on `[-1, 1]`.
pub fn sample_radius<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    2.0 * rng.random::<f64>() - 1.0
}
