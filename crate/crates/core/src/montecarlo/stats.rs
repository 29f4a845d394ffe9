use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Episodes simulated sequentially by one task before merging.
pub const CHUNK_EPISODES: u64 = 2048;

/// Count, sum and sum of squares of a sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn push_flag(&mut self, hit: bool) {
        self.push(if hit { 1.0 } else { 0.0 });
    }

    pub fn merge(&mut self, other: &RunningStats) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn estimate(&self) -> Estimate {
        let std_error = if self.count < 2 {
            f64::NAN
        } else {
            (self.variance() / self.count as f64).sqrt()
        };
        Estimate {
            mean: self.mean(),
            std_error,
            count: self.count,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
}

impl Estimate {
    /// `(mean - reference) / std_error`. A zero standard error gives 0 on
    /// exact agreement and infinity otherwise.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.mean - reference;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff.abs() <= 1e-12 * reference.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }

    pub fn within(&self, reference: f64, sigmas: f64) -> bool {
        self.z_score(reference).abs() < sigmas
    }
}

/// Random stream of one episode.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

/// Statistics that can absorb the outcome of another chunk.
pub(crate) trait Merge: Send {
    fn merge_from(&mut self, other: Self);
}

/// Runs `episode(acc, index, rng)` for every episode, in parallel chunks of
/// [`CHUNK_EPISODES`], and merges the chunk accumulators in index order.
pub(crate) fn run_chunked<A, I, F>(episodes: u64, seed: u64, init: I, episode: F) -> A
where
    A: Merge,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64, &mut ChaCha8Rng) + Sync,
{
    let chunks = episodes.div_ceil(CHUNK_EPISODES);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let lo = c * CHUNK_EPISODES;
            let hi = (lo + CHUNK_EPISODES).min(episodes);
            for e in lo..hi {
                let mut rng = episode_rng(seed, e);
                episode(&mut acc, e, &mut rng);
            }
            acc
        })
        .collect();
    let mut total = init();
    for part in parts {
        total.merge_from(part);
    }
    total
}

impl Merge for RunningStats {
    fn merge_from(&mut self, other: Self) {
        self.merge(&other);
    }
}

impl<T: Merge> Merge for Vec<T> {
    fn merge_from(&mut self, other: Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.merge_from(b);
        }
    }
}
