//! Seeded random streams.
//!
//! Every simulator draws from ChaCha8 generators. A master seed selects the
//! key and an independent 64-bit stream id selects the substream, so stream
//! `k` is unchanged when further streams are added.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

pub type SimRng = ChaCha8Rng;

/// Substream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exact draw from Binomial(n, p); `p` is clamped to `[0, 1]`.
pub fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, n: u32, p: f64) -> u32 {
    if p <= 0.0 || n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(u64::from(n), p)
        .expect("p in (0,1)")
        .sample(rng) as u32
}
