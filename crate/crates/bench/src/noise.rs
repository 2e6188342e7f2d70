//! Additive Gaussian measurement noise.

use done_core::rng::{stream_rng, Stream, StreamRng};
use done_core::Objective;
use rand::Rng;
use rand_distr::StandardNormal;

/// `y = f(x) + eta`, `eta ~ N(0, sigma^2)` drawn fresh on every call.
pub struct NoisyObjective<F> {
    inner: F,
    sigma: f64,
    rng: StreamRng,
}

impl<F: FnMut(&[f64]) -> f64> Objective for NoisyObjective<F> {
    fn measure(&mut self, x: &[f64]) -> f64 {
        let y = (self.inner)(x);
        if self.sigma == 0.0 {
            return y;
        }
        let eta: f64 = self.rng.sample(StandardNormal);
        y + self.sigma * eta
    }
}

/// Wraps `objective` with seeded i.i.d. noise of standard deviation `sigma`.
pub fn with_noise<F: FnMut(&[f64]) -> f64>(
    objective: F,
    sigma: f64,
    seed: u64,
) -> NoisyObjective<F> {
    assert!(
        sigma >= 0.0 && sigma.is_finite(),
        "noise std must be nonnegative, got {sigma}"
    );
    NoisyObjective {
        inner: objective,
        sigma,
        rng: stream_rng(seed, Stream::Noise),
    }
}
