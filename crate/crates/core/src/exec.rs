//! Data-parallel execution helpers.
//!
//! Every hot loop in the crate goes through [`map_range`], which runs on the
//! rayon pool when the `parallel` feature is enabled and falls back to a plain
//! iterator otherwise. Results are always collected in index order, so both
//! strategies produce identical output.
//!
//! Randomized loops never share a generator: each work item derives its own
//! ChaCha stream from `(seed, component, index)` via [`stream_rng`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How a data-parallel loop is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Sequential,
    /// Uses rayon when compiled with the `parallel` feature, sequential otherwise.
    Parallel,
}

impl Default for Strategy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Strategy::Parallel
        } else {
            Strategy::Sequential
        }
    }
}

/// Applies `f` to every index in `0..len`, collecting results in index order.
pub fn map_range<T, F>(strategy: Strategy, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match strategy {
        Strategy::Sequential => (0..len).map(f).collect(),
        Strategy::Parallel => parallel_map(len, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

/// Splits `total` items into contiguous chunks suitable for [`map_range`].
pub fn chunk_bounds(total: u64, max_chunks: u64) -> Vec<(u64, u64)> {
    if total == 0 {
        return Vec::new();
    }
    let chunks = max_chunks.clamp(1, total);
    let size = total.div_ceil(chunks);
    (0..total).step_by(size as usize).map(|start| (start, (start + size).min(total))).collect()
}

/// Stream identifiers keeping independent components on disjoint ChaCha streams.
pub mod component {
    pub const GENERIC: u32 = 0;
    pub const DESIGN: u32 = 1;
    pub const SOURCES: u32 = 2;
    pub const STORAGE: u32 = 3;
    pub const RECONSTRUCTION: u32 = 4;
    pub const GOLDREICH_LEVIN: u32 = 5;
    pub const RAC: u32 = 6;
    pub const ADVANTAGE: u32 = 7;
}

/// Deterministic per-work-item generator.
pub fn stream_rng(seed: u64, component: u32, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((component as u64) << 56));
    rng.set_stream(index);
    rng
}

/// Independent per-trial seed (SplitMix64 finalizer over `seed + index`).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
