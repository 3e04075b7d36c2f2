//! Executable reconstruction: a distinguisher for the extractor output is
//! turned into a next-bit predictor for the codeword (hybrid argument over the
//! design), which is then list decoded, inner Hadamard layer by
//! Goldreich–Levin and outer Reed–Muller layer by enumeration.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::exec::{self, component, stream_rng, Strategy};
use crate::trevisan::{ExtractorParams, Trevisan};

mod gl;
mod list;
mod nw;
mod worst;

pub use gl::{gl_decode, gl_rounds, GlOutput};
pub use list::{brute_list_decode, hadamard_scores, point_scores, CodeSpec, Received};
pub use nw::{avg_case_reconstruct, Advice, AdviceBits, AvgCase, AvgCaseReport, Predictor, SearchBudget};
pub use worst::{run_game, worst_case_reconstruct, Budgets, GameReport, TrialSummary, WorstCase, WorstCaseReport};

/// Two-sided Hoeffding confidence level used for every empirical threshold.
pub const CONFIDENCE: f64 = 0.99;

/// Half-width of a 99% interval for a mean of `samples` values in `[0, 1]`.
pub fn mean_slack(samples: u64) -> f64 {
    ((2.0 / (1.0 - CONFIDENCE)).ln() / (2.0 * samples as f64)).sqrt()
}

/// A test `T(y, z)` against extractor outputs. Implementations may use the
/// supplied randomness but keep no other state between calls.
pub trait Distinguisher: Sync {
    fn seed_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn test(&self, y: &BitString, z: &BitString, rng: &mut dyn RngCore) -> bool;
}

/// Randomized answers on codeword positions `[0, len)`.
pub trait ProbOracle: Sync {
    fn len(&self) -> u64;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn query(&self, j: u64, rng: &mut dyn RngCore) -> bool;
}

impl<D: Distinguisher + ?Sized> Distinguisher for &D {
    fn seed_len(&self) -> usize {
        (**self).seed_len()
    }
    fn output_len(&self) -> usize {
        (**self).output_len()
    }
    fn test(&self, y: &BitString, z: &BitString, rng: &mut dyn RngCore) -> bool {
        (**self).test(y, z, rng)
    }
}

impl<O: ProbOracle + ?Sized> ProbOracle for &O {
    fn len(&self) -> u64 {
        (**self).len()
    }
    fn query(&self, j: u64, rng: &mut dyn RngCore) -> bool {
        (**self).query(j, rng)
    }
}

/// Wraps a distinguisher or oracle with an atomic query counter.
#[derive(Debug)]
pub struct Counted<T> {
    inner: T,
    queries: AtomicU64,
}

impl<T> Counted<T> {
    pub fn new(inner: T) -> Self {
        Counted { inner, queries: AtomicU64::new(0) }
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn reset(&self) -> u64 {
        self.queries.swap(0, Ordering::Relaxed)
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: Distinguisher> Distinguisher for Counted<T> {
    fn seed_len(&self) -> usize {
        self.inner.seed_len()
    }
    fn output_len(&self) -> usize {
        self.inner.output_len()
    }
    fn test(&self, y: &BitString, z: &BitString, rng: &mut dyn RngCore) -> bool {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.inner.test(y, z, rng)
    }
}

impl<T: ProbOracle> ProbOracle for Counted<T> {
    fn len(&self) -> u64 {
        self.inner.len()
    }
    fn query(&self, j: u64, rng: &mut dyn RngCore) -> bool {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.inner.query(j, rng)
    }
}

/// Accepts exactly when `z` is the extractor output on `y`.
#[derive(Clone, Debug)]
pub struct ExactMatch {
    extractor: Trevisan,
}

impl ExactMatch {
    pub fn new(f: &BitString, p: &ExtractorParams) -> Result<Self> {
        Ok(ExactMatch { extractor: Trevisan::new(f, p)? })
    }

    pub fn extractor(&self) -> &Trevisan {
        &self.extractor
    }
}

impl Distinguisher for ExactMatch {
    fn seed_len(&self) -> usize {
        self.extractor.params().t
    }
    fn output_len(&self) -> usize {
        self.extractor.params().m
    }
    fn test(&self, y: &BitString, z: &BitString, _rng: &mut dyn RngCore) -> bool {
        self.extractor.eval(y).is_ok_and(|out| &out == z)
    }
}

/// A coin flip, independent of its input.
#[derive(Clone, Copy, Debug)]
pub struct IgnoreOutput {
    pub t: usize,
    pub m: usize,
}

impl Distinguisher for IgnoreOutput {
    fn seed_len(&self) -> usize {
        self.t
    }
    fn output_len(&self) -> usize {
        self.m
    }
    fn test(&self, _y: &BitString, _z: &BitString, rng: &mut dyn RngCore) -> bool {
        rng.gen()
    }
}

/// Another distinguisher whose answer is flipped with probability `flip`.
#[derive(Clone, Debug)]
pub struct Noisy<D> {
    pub inner: D,
    pub flip: f64,
}

impl<D: Distinguisher> Distinguisher for Noisy<D> {
    fn seed_len(&self) -> usize {
        self.inner.seed_len()
    }
    fn output_len(&self) -> usize {
        self.inner.output_len()
    }
    fn test(&self, y: &BitString, z: &BitString, rng: &mut dyn RngCore) -> bool {
        let answer = self.inner.test(y, z, rng);
        answer ^ rng.gen_bool(self.flip)
    }
}

/// A fixed word answered exactly.
#[derive(Clone, Debug)]
pub struct WordOracle {
    pub word: BitString,
}

impl ProbOracle for WordOracle {
    fn len(&self) -> u64 {
        self.word.len() as u64
    }
    fn query(&self, j: u64, _rng: &mut dyn RngCore) -> bool {
        self.word.get(j as usize)
    }
}

/// A fixed word with every answer independently flipped with probability `flip`.
#[derive(Clone, Debug)]
pub struct NoisyWord {
    pub word: BitString,
    pub flip: f64,
}

impl ProbOracle for NoisyWord {
    fn len(&self) -> u64 {
        self.word.len() as u64
    }
    fn query(&self, j: u64, rng: &mut dyn RngCore) -> bool {
        self.word.get(j as usize) ^ rng.gen_bool(self.flip)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct UniformOracle {
    pub len: u64,
}

impl ProbOracle for UniformOracle {
    fn len(&self) -> u64 {
        self.len
    }
    fn query(&self, _j: u64, rng: &mut dyn RngCore) -> bool {
        rng.gen()
    }
}

/// The window `[base, base + len)` of another oracle.
#[derive(Clone, Copy, Debug)]
pub struct BlockView<O> {
    pub inner: O,
    pub base: u64,
    pub len: u64,
}

impl<O: ProbOracle> ProbOracle for BlockView<O> {
    fn len(&self) -> u64 {
        self.len
    }
    fn query(&self, j: u64, rng: &mut dyn RngCore) -> bool {
        self.inner.query(self.base + j, rng)
    }
}

/// Fraction of `samples` uniform positions where the oracle agrees with `word`.
pub fn measured_agreement(o: &dyn ProbOracle, word: &BitString, samples: u64, rng: &mut dyn RngCore) -> f64 {
    let len = o.len();
    let hits = (0..samples)
        .filter(|_| {
            let j = rng.gen_range(0..len);
            o.query(j, rng) == word.get(j as usize)
        })
        .count();
    hits as f64 / samples as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    /// `Pr[T(y, E(f, y)) = 1] − Pr[T(y, u) = 1]`.
    pub advantage: f64,
    /// Half-width of the 99% interval (0 in exact mode).
    pub half_width: f64,
    pub exact: bool,
    pub samples: u64,
}

/// Advantage of `d` at telling `(y, E(f, y))` from `(y, u)`. Enumerates every
/// `(y, u)` when `2^t·(2^m + 1)` fits `exact_budget`; otherwise samples
/// `trials` seeds, each paired with a fresh uniform `u`.
pub fn estimate_advantage(
    d: &dyn Distinguisher,
    f: &BitString,
    p: &ExtractorParams,
    trials: u64,
    exact_budget: u64,
    rng_seed: u64,
    strategy: Strategy,
) -> Result<AdvantageEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParams("need at least one trial".into()));
    }
    if d.seed_len() != p.t || d.output_len() != p.m {
        return Err(Error::InvalidParams("distinguisher shape differs from the extractor".into()));
    }
    let ext = Trevisan::new(f, p)?;
    let work = (p.t < 40 && p.m < 20).then(|| (1u128 << p.t) * ((1u128 << p.m) + 1));
    if work.is_some_and(|w| w <= exact_budget as u128) {
        let chunks = exec::chunk_bounds(1u64 << p.t, 64);
        let sums = exec::map_range(strategy, chunks.len(), |c| {
            let (start, end) = chunks[c];
            let mut rng = stream_rng(rng_seed, component::ADVANTAGE, c as u64);
            let (mut real, mut ideal) = (0u64, 0u64);
            for yv in start..end {
                let y = BitString::from_u64(yv, p.t);
                real += d.test(&y, &ext.eval(&y).expect("seed length"), &mut rng) as u64;
                for u in 0..1u64 << p.m {
                    ideal += d.test(&y, &BitString::from_u64(u, p.m), &mut rng) as u64;
                }
            }
            (real, ideal)
        });
        let (real, ideal) = sums.into_iter().fold((0, 0), |a, s| (a.0 + s.0, a.1 + s.1));
        let seeds = (1u64 << p.t) as f64;
        return Ok(AdvantageEstimate {
            advantage: real as f64 / seeds - ideal as f64 / (seeds * (1u64 << p.m) as f64),
            half_width: 0.0,
            exact: true,
            samples: 1 << p.t,
        });
    }
    let chunks = exec::chunk_bounds(trials, 64);
    let diffs = exec::map_range(strategy, chunks.len(), |c| {
        let (start, end) = chunks[c];
        let mut rng = stream_rng(rng_seed, component::ADVANTAGE, c as u64);
        let mut diff = 0i64;
        for _ in start..end {
            let y = BitString::from_bits((0..p.t).map(|_| rng.gen::<bool>()));
            let u = BitString::from_bits((0..p.m).map(|_| rng.gen::<bool>()));
            let real = d.test(&y, &ext.eval(&y).expect("seed length"), &mut rng);
            let ideal = d.test(&y, &u, &mut rng);
            diff += real as i64 - ideal as i64;
        }
        diff
    });
    let total: i64 = diffs.into_iter().sum();
    Ok(AdvantageEstimate {
        advantage: total as f64 / trials as f64,
        half_width: (2.0 * (2.0 / (1.0 - CONFIDENCE)).ln() / trials as f64).sqrt(),
        exact: false,
        samples: trials,
    })
}
