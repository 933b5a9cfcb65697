//! Deterministic batched random number streams.
//!
//! Every Monte-Carlo routine in this crate draws its randomness through
//! [`batch_rng`]: sample index space is split into fixed-size batches and
//! batch `b` of seed `s` always receives the same ChaCha stream, no matter
//! how batches are scheduled across threads. Results are therefore
//! bit-identical for a given `(seed, sample count)` whether the batches run
//! sequentially or on a rayon pool of any width.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of samples drawn per RNG batch.
pub const BATCH_SIZE: usize = 4096;

/// RNG for batch `batch` of the stream family identified by `seed`.
pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch.wrapping_add(1));
    rng
}

/// Batch layout for `samples` total draws: `(batch_index, batch_len)` pairs.
pub fn batch_layout(samples: usize) -> Vec<(u64, usize)> {
    let full = samples / BATCH_SIZE;
    let rem = samples % BATCH_SIZE;
    let mut layout: Vec<(u64, usize)> = (0..full as u64).map(|b| (b, BATCH_SIZE)).collect();
    if rem > 0 {
        layout.push((full as u64, rem));
    }
    layout
}

/// Streaming mean/variance accumulator that combines across batches in a
/// fixed order (Welford within a batch, Chan's rule between batches).
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningMoments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let delta = other.mean - self.mean;
        let total = n1 + n2;
        self.mean += delta * n2 / total;
        self.m2 += other.m2 + delta * delta * n1 * n2 / total;
        self.count += other.count;
    }

    /// Unbiased sample variance; `None` below two observations.
    pub fn sample_variance(&self) -> Option<f64> {
        if self.count < 2 {
            None
        } else {
            Some((self.m2 / (self.count as f64 - 1.0)).max(0.0))
        }
    }

    /// Standard error of the mean; `None` below two observations.
    pub fn standard_error(&self) -> Option<f64> {
        self.sample_variance()
            .map(|v| (v / self.count as f64).sqrt())
    }
}
