//! Seeded, thread-count-independent Monte Carlo helpers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Samples per shard; each shard owns its own ChaCha stream.
pub const SHARD: usize = 1024;

/// Generator for one shard of a seeded computation.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Draws `count` values with `draw`, in shards evaluated in parallel; the output order (and so
/// every reduction over it) does not depend on the number of threads.
pub fn par_draw<T, F>(seed: u64, count: usize, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let shards = count.div_ceil(SHARD);
    let chunks: Vec<Vec<T>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = shard_rng(seed, s as u64);
            let n = SHARD.min(count - s * SHARD);
            (0..n).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self { mean, stderr: (var / n as f64).sqrt(), n }
    }

    /// `mean + 3·stderr`.
    pub fn upper(&self) -> f64 {
        self.mean + 3.0 * self.stderr
    }

    /// `mean − 3·stderr`.
    pub fn lower(&self) -> f64 {
        self.mean - 3.0 * self.stderr
    }
}
