//! Seeded sampling plumbing.
//!
//! Every estimator draws from a ChaCha stream keyed by the caller's seed, so
//! identical inputs reproduce identical floats. Estimators that walk a grid
//! give each grid point its own stream index; extending the sample count then
//! only appends draws, which is what makes the nested-sampling monotonicity
//! guarantees exact rather than statistical.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Real;

/// Whether a draw targets the norm sphere or the full closed ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Interior,
    Sphere,
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One standard normal draw, taken in f64 and narrowed, so that f32 and f64
/// instantiations consume the stream identically.
pub fn std_normal<F: Real>(rng: &mut ChaCha8Rng) -> F {
    let x: f64 = StandardNormal.sample(rng);
    F::of(x)
}

/// Uniform draw in [0, 1).
pub fn unit<F: Real>(rng: &mut ChaCha8Rng) -> F {
    F::of(rng.gen::<f64>())
}

/// Isotropic direction with unit Euclidean length. Rejects the (measure-zero)
/// near-origin draws instead of dividing by a denormal.
pub fn gaussian_direction<F: Real>(rng: &mut ChaCha8Rng, dim: usize) -> Vec<F> {
    loop {
        let g: Vec<F> = (0..dim).map(|_| std_normal(rng)).collect();
        let len = crate::vecops::norm2(&g);
        if len > F::of(1e-12) {
            return crate::vecops::scale(&g, F::one() / len);
        }
    }
}
