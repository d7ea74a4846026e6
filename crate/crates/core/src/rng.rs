//! Seed derivation and standard normal variates.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded with an
//! explicit 64-bit seed. Monte Carlo replications derive their seed from
//! `(master_seed, row, replication)` through [`replication_seed`], so results
//! do not depend on how replications are scheduled across threads.
//!
//! Normals are produced with the Box–Muller transform: two uniforms
//! `u1 ∈ (0, 1]`, `u2 ∈ [0, 1)` (53-bit mantissas from consecutive `u64`
//! outputs) give `sqrt(-2 ln u1) cos(2π u2)` and `sqrt(-2 ln u1) sin(2π u2)`.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` in row `row` of an experiment seeded with
/// `master`: `splitmix64(splitmix64(splitmix64(master) ^ row) ^ rep)`.
pub fn replication_seed(master: u64, row: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ row) ^ rep)
}

/// Derives an independent stream seed from `seed` for a named purpose.
pub fn substream(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ stream.wrapping_mul(GOLDEN_GAMMA))
}

/// Standard normal generator over a seeded ChaCha8 stream.
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bit(&mut self) -> bool {
        self.rng.next_u64() >> 63 == 1
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}
