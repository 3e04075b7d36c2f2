//! Goldreich–Levin list decoding of the Hadamard code from a probabilistic
//! oracle.
//!
//! Each round draws `k` random vectors `r_1..r_k` and queries
//! `O(r_J ⊕ e_i)` for every nonempty `J ⊆ [k]` (`r_J = ⊕_{i∈J} r_i`, pairwise
//! independent). For a guess `σ ∈ {0,1}^k` of the inner products `⟨x, r_i⟩`,
//! bit `i` is the majority of `O(r_J ⊕ e_i) ⊕ ⟨σ, J⟩` over `J`; a Walsh–Hadamard
//! transform over `J` evaluates that majority for all `2^k` guesses at once.
//! Candidates are then filtered by their agreement on fresh samples.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::ProbOracle;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlOutput {
    /// Surviving messages, by decreasing estimated agreement.
    pub candidates: Vec<u64>,
    pub estimates: Vec<f64>,
    pub queries: u64,
    pub rounds: u32,
    /// Random vectors per round.
    pub k: u32,
    /// Distinct messages produced before filtering.
    pub generated: usize,
    pub filter_samples: u64,
}

/// Rounds needed when one round succeeds with probability 3/4.
pub fn gl_rounds(conf: f64) -> u32 {
    ((1.0 / (1.0 - conf)).ln() / 4f64.ln()).ceil().max(1.0) as u32
}

/// In-place Walsh–Hadamard transform.
pub(crate) fn fwht(v: &mut [i64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (s, d) = (*x + *y, *x - *y);
                *x = s;
                *y = d;
            }
        }
        h *= 2;
    }
}

pub fn gl_decode(o: &dyn ProbOracle, delta: f64, conf: f64, rng: &mut dyn RngCore) -> Result<GlOutput> {
    let len = o.len();
    if !len.is_power_of_two() || len > 1 << 20 {
        return Err(Error::InvalidParams(format!("Hadamard length {len} must be a power of two ≤ 2^20")));
    }
    if !(delta > 0.0 && delta <= 0.5) || !(conf > 0.0 && conf < 1.0) {
        return Err(Error::InvalidParams(format!("need 0 < delta ≤ 1/2 and 0 < conf < 1 (delta={delta}, conf={conf})")));
    }
    let s = len.trailing_zeros();
    let need = s as f64 / (delta * delta);
    let k = (1..=20u32).find(|&k| ((1u64 << k) - 1) as f64 >= need).ok_or(Error::TooLarge {
        what: "Goldreich–Levin subset count",
        size: need as u128,
        limit: 1 << 20,
    })?;
    let rounds = gl_rounds(conf);
    let subsets = 1usize << k;
    let mut queries = 0u64;
    let mut generated: Vec<u64> = Vec::with_capacity(rounds as usize * subsets);
    let mut votes = vec![0i64; subsets];
    let mut r_sum = vec![0u64; subsets];
    for _ in 0..rounds {
        let r: Vec<u64> = (0..k).map(|_| rng.gen_range(0..len)).collect();
        for j in 1..subsets {
            r_sum[j] = r_sum[j & (j - 1)] ^ r[j.trailing_zeros() as usize];
        }
        let mut cands = vec![0u64; subsets];
        for i in 0..s {
            votes[0] = 0;
            for j in 1..subsets {
                votes[j] = if o.query(r_sum[j] ^ 1 << i, rng) { -1 } else { 1 };
            }
            queries += subsets as u64 - 1;
            fwht(&mut votes);
            for (c, &v) in cands.iter_mut().zip(votes.iter()) {
                if v < 0 {
                    *c |= 1 << i;
                }
            }
        }
        generated.extend(cands);
    }
    generated.sort_unstable();
    generated.dedup();

    let pool = (rounds as u64) << k;
    let filter_samples = ((4.0 * pool as f64 / (1.0 - conf)).ln() * 8.0 / (delta * delta)).ceil() as u64;
    let mut tally = vec![0i64; len as usize];
    for _ in 0..filter_samples {
        let u = rng.gen_range(0..len);
        tally[u as usize] += if o.query(u, rng) { -1 } else { 1 };
    }
    queries += filter_samples;
    fwht(&mut tally);
    let keep = 0.5 + delta / 2.0;
    let mut scored: Vec<(f64, u64)> = generated
        .iter()
        .map(|&x| ((filter_samples as i64 + tally[x as usize]) as f64 / (2 * filter_samples) as f64, x))
        .filter(|&(est, _)| est >= keep)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.truncate((4.0 / (delta * delta)).floor() as usize);
    Ok(GlOutput {
        candidates: scored.iter().map(|&(_, x)| x).collect(),
        estimates: scored.iter().map(|&(e, _)| e).collect(),
        queries,
        rounds,
        k,
        generated: generated.len(),
        filter_samples,
    })
}
