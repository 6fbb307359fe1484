use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Seeded random stream. `split` derives an independent child stream, so a
/// recursion node's draws do not depend on how its siblings consumed theirs.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn split(&mut self) -> RngStream {
        RngStream::new(self.rng.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw from `[lo, hi)`; returns `lo` for a degenerate range.
    pub fn uniform<T: Scalar>(&mut self, lo: T, hi: T) -> T {
        let (a, b) = (lo.as_f64(), hi.as_f64());
        if b <= a {
            return lo;
        }
        T::of(self.rng.gen_range(a..b))
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
