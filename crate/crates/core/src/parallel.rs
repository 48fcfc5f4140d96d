//! Deterministic per-pixel parallelism.
//!
//! Every pixel draws from its own generator seeded from `(seed, pixel index)`,
//! so results do not depend on how pixels are distributed over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "PRT_THREADS";

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` of a run seeded with `seed`.
#[inline]
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn pixel_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index as u64))
}

/// Worker count from an explicit request, else `PRT_THREADS`, else all cores.
pub fn worker_count(requested: Option<usize>) -> usize {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let env_cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match (requested.filter(|&n| n > 0), env_cap) {
        (Some(r), Some(cap)) => r.min(cap),
        (Some(r), None) => r,
        (None, Some(cap)) => cap,
        (None, None) => cores,
    }
}

/// Evaluates `f` for indices `0..count` on `workers` threads, preserving order.
pub fn map_indexed<R, F>(count: usize, workers: Option<usize>, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    let n = worker_count(workers);
    if n == 1 {
        return Ok((0..count).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}
