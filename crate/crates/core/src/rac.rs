//! Classical random-access-code experiments: majority amplification of a
//! biased decoder, Regev's hashing code for one-1-per-block strings, and the
//! zero-length code for heavy strings that only works on average.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, Discrete, DiscreteCDF};

use crate::bits::{rational_text, BitString, Rational};
use crate::error::{Error, Result};
use crate::exec::{self, component, stream_rng, Strategy};

/// Range of Regev's hash functions.
pub const DEFAULT_RANGE: u64 = 10;

/// Two-sided Hoeffding half-width at 99% confidence for a mean of `trials`
/// independent indicators.
pub fn hoeffding_slack(trials: u64) -> f64 {
    ((200f64).ln() / (2.0 * trials as f64)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RacFamily {
    /// All of `{0,1}^n`.
    All,
    /// Exactly one 1 in each of the `√n` blocks.
    OnePerBlock,
    /// Weight at least `2n/3`.
    Heavy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RacInstance {
    pub family: RacFamily,
    pub n: usize,
    /// Per-query success target.
    pub target: f64,
}

impl RacInstance {
    pub fn contains(&self, f: &BitString) -> bool {
        if f.len() != self.n {
            return false;
        }
        match self.family {
            RacFamily::All => true,
            RacFamily::OnePerBlock => {
                block_side(self.n).is_some_and(|side| (0..side).all(|j| (0..side).filter(|&i| f.get(j * side + i)).count() == 1))
            }
            RacFamily::Heavy => 3 * f.weight() >= 2 * self.n,
        }
    }
}

fn block_side(n: usize) -> Option<usize> {
    let side = (n as f64).sqrt().round() as usize;
    (side > 0 && side * side == n).then_some(side)
}

/// Number of majority votes `⌈2·ln(1/eps)/δ²⌉`.
pub fn amplify_votes(delta: f64, eps: f64) -> u64 {
    (2.0 * (1.0 / eps).ln() / (delta * delta)).ceil().max(1.0) as u64
}

/// Probability that a majority of `votes` answers, each correct with
/// probability `p`, is correct (ties broken by a fair coin).
pub fn majority_success_exact(p: f64, votes: u64) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    let dist = Binomial::new(p, votes).expect("p in [0, 1]");
    let above = dist.sf(votes / 2);
    if votes.is_multiple_of(2) {
        above + 0.5 * dist.pmf(votes / 2)
    } else {
        above
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplifyReport {
    pub delta: f64,
    pub eps: f64,
    pub votes: u64,
    pub trials: u64,
    pub measured_success: f64,
    pub exact_success: f64,
    pub slack: f64,
    /// `|measured − exact| ≤ slack`.
    pub within_slack: bool,
    /// `measured ≥ 1 − eps − slack`.
    pub meets_target: bool,
}

pub fn amplify(delta: f64, eps: f64, trials: u64, rng_seed: u64, strategy: Strategy) -> Result<AmplifyReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!("eps={eps} outside (0, 1)")));
    }
    amplify_with_votes(delta, eps, amplify_votes(delta, eps), trials, rng_seed, strategy)
}

/// Majority vote over `votes` independent answers, each correct with
/// probability `1/2 + delta`.
pub fn amplify_with_votes(
    delta: f64,
    eps: f64,
    votes: u64,
    trials: u64,
    rng_seed: u64,
    strategy: Strategy,
) -> Result<AmplifyReport> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParams(format!("delta={delta} outside (0, 1/2]")));
    }
    if trials == 0 || votes == 0 {
        return Err(Error::InvalidParams("need at least one trial and one vote".into()));
    }
    let p = 0.5 + delta;
    let chunks = exec::chunk_bounds(trials, 64);
    let wins: u64 = exec::map_range(strategy, chunks.len(), |c| {
        let (start, end) = chunks[c];
        let mut rng = stream_rng(rng_seed, component::RAC, c as u64);
        (start..end)
            .filter(|_| {
                let right = (0..votes).filter(|_| rng.gen_bool(p)).count() as u64;
                let wrong = votes - right;
                right > wrong || (right == wrong && rng.gen::<bool>())
            })
            .count() as u64
    })
    .into_iter()
    .sum();
    let measured = wins as f64 / trials as f64;
    let exact = majority_success_exact(p, votes);
    let slack = hoeffding_slack(trials);
    Ok(AmplifyReport {
        delta,
        eps,
        votes,
        trials,
        measured_success: measured,
        exact_success: exact,
        slack,
        within_slack: (measured - exact).abs() <= slack,
        meets_target: measured >= 1.0 - eps - slack,
    })
}

fn is_prime(v: u64) -> bool {
    v >= 2 && (2..).take_while(|d| d * d <= v).all(|d| !v.is_multiple_of(d))
}

/// Smallest prime `≥ max(side, range)`.
pub fn hash_modulus(side: u64, range: u64) -> u64 {
    (side.max(range).max(2)..).find(|&v| is_prime(v)).expect("primes are unbounded")
}

/// `h(x) = ((a·x + b) mod q) mod range`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseHash {
    pub q: u64,
    pub a: u64,
    pub b: u64,
    pub range: u64,
}

impl PairwiseHash {
    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        (self.a * x + self.b) % self.q % self.range
    }
}

fn bits_for(v: u64) -> usize {
    (64 - (v.max(1) - 1).leading_zeros()) as usize
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegevEncoding {
    pub n: usize,
    pub side: usize,
    pub hash: PairwiseHash,
    /// `h(i_j)` for the position `i_j` of the 1 in block `j`.
    pub values: Vec<u64>,
}

impl RegevEncoding {
    /// `2⌈log2 q⌉` bits for the hash seed plus `⌈log2 range⌉` per block.
    pub fn bit_length(&self) -> usize {
        2 * bits_for(self.hash.q) + self.side * bits_for(self.hash.range)
    }
}

/// Encodes with hash seed `(a, b)`, each reduced mod `q`.
pub fn regev_encode(f: &BitString, range: u64, hash_seed: (u64, u64)) -> Result<RegevEncoding> {
    let n = f.len();
    let side = block_side(n).ok_or_else(|| Error::InvalidParams(format!("n={n} is not a perfect square")))?;
    if range < 2 {
        return Err(Error::InvalidParams("hash range must be at least 2".into()));
    }
    let q = hash_modulus(side as u64, range);
    let hash = PairwiseHash { q, a: hash_seed.0 % q, b: hash_seed.1 % q, range };
    let values = (0..side)
        .map(|j| {
            let ones: Vec<usize> = (0..side).filter(|&i| f.get(j * side + i)).collect();
            match ones.as_slice() {
                [i] => Ok(hash.apply(*i as u64)),
                _ => Err(Error::Malformed(format!("block {j} has {} ones, expected exactly one", ones.len()))),
            }
        })
        .collect::<Result<_>>()?;
    Ok(RegevEncoding { n, side, hash, values })
}

pub fn regev_decode(enc: &RegevEncoding, position: usize) -> Result<bool> {
    if position >= enc.n {
        return Err(Error::IndexOutOfRange { index: position as u64, len: enc.n as u64 });
    }
    let (block, offset) = (position / enc.side, position % enc.side);
    Ok(enc.hash.apply(offset as u64) == enc.values[block])
}

/// Exact per-query success for uniform `f`, uniform position and uniform
/// hash seed `(a, b) ∈ [q]²`.
pub fn regev_exact_success(n: usize, range: u64) -> Result<Rational> {
    let side = block_side(n).ok_or_else(|| Error::InvalidParams(format!("n={n} is not a perfect square")))? as u64;
    let q = hash_modulus(side, range);
    let mut collisions = 0i128;
    for a in 0..q {
        for b in 0..q {
            let h = PairwiseHash { q, a, b, range };
            for i in 0..side {
                for j in 0..side {
                    if i != j && h.apply(i) == h.apply(j) {
                        collisions += 1;
                    }
                }
            }
        }
    }
    // a query hits the block's 1 w.p. 1/side; otherwise it errs on collision
    let total = (q * q * side * side) as i128;
    Ok(Rational::from_integer(1) - Rational::new(collisions, total))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegevReport {
    pub n: usize,
    pub range: u64,
    pub q: u64,
    pub bit_length: usize,
    pub queries: u64,
    pub measured_success: f64,
    #[serde(with = "rational_text")]
    pub exact_success: Rational,
    pub exact_success_value: f64,
    /// Measured error rate on queries at 0-positions.
    pub zero_position_error: f64,
    pub slack: f64,
}

/// Each query draws a fresh string, hash seed and position.
pub fn regev_experiment(n: usize, range: u64, queries: u64, rng_seed: u64, strategy: Strategy) -> Result<RegevReport> {
    let side = block_side(n).ok_or_else(|| Error::InvalidParams(format!("n={n} is not a perfect square")))?;
    if queries == 0 {
        return Err(Error::InvalidParams("need at least one query".into()));
    }
    let q = hash_modulus(side as u64, range);
    let chunks = exec::chunk_bounds(queries, 64);
    let tallies = exec::map_range(strategy, chunks.len(), |c| {
        let (start, end) = chunks[c];
        let mut rng = stream_rng(rng_seed, component::RAC, (1 << 32) | c as u64);
        let (mut right, mut zero_q, mut zero_err) = (0u64, 0u64, 0u64);
        for _ in start..end {
            let mut f = BitString::zeros(n);
            for j in 0..side {
                f.set(j * side + rng.gen_range(0..side), true);
            }
            let enc = regev_encode(&f, range, (rng.gen_range(0..q), rng.gen_range(0..q))).expect("well-formed string");
            let pos = rng.gen_range(0..n);
            let answer = regev_decode(&enc, pos).expect("position in range");
            right += (answer == f.get(pos)) as u64;
            if !f.get(pos) {
                zero_q += 1;
                zero_err += answer as u64;
            }
        }
        (right, zero_q, zero_err)
    });
    let (right, zero_q, zero_err) = tallies.into_iter().fold((0, 0, 0), |acc, t| (acc.0 + t.0, acc.1 + t.1, acc.2 + t.2));
    let exact = regev_exact_success(n, range)?;
    let probe = regev_encode(&one_per_block_first(n), range, (1, 0))?;
    Ok(RegevReport {
        n,
        range,
        q,
        bit_length: probe.bit_length(),
        queries,
        measured_success: right as f64 / queries as f64,
        exact_success_value: *exact.numer() as f64 / *exact.denom() as f64,
        exact_success: exact,
        zero_position_error: if zero_q == 0 { 0.0 } else { zero_err as f64 / zero_q as f64 },
        slack: hoeffding_slack(queries),
    })
}

/// The string with a 1 at the first position of every block.
pub fn one_per_block_first(n: usize) -> BitString {
    let side = block_side(n).unwrap_or(1);
    let mut f = BitString::zeros(n);
    for j in 0..side {
        f.set(j * side, true);
    }
    f
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvgCaseReport {
    pub n: usize,
    pub weight: usize,
    #[serde(with = "rational_text")]
    pub exact_average: Rational,
    pub exact_average_value: f64,
    pub measured_average: f64,
    pub worst_case_success: f64,
    pub trials: u64,
}

/// Average and worst-case success of the decoder that always answers 1.
pub fn constant_one_success(f: &BitString) -> (Rational, Rational) {
    let avg = Rational::new(f.weight() as i128, f.len().max(1) as i128);
    let worst = if f.weight() == f.len() { 1 } else { 0 };
    (avg, Rational::from_integer(worst))
}

/// The zero-length code on strings of weight `⌈2n/3⌉`.
pub fn avgcase_counterexample(n: usize, trials: u64, rng_seed: u64) -> Result<AvgCaseReport> {
    if n < 3 {
        return Err(Error::InvalidParams("need n ≥ 3".into()));
    }
    let weight = (2 * n).div_ceil(3);
    let mut rng = stream_rng(rng_seed, component::RAC, 2 << 32);
    let mut f = BitString::zeros(n);
    for i in rand::seq::index::sample(&mut rng, n, weight) {
        f.set(i, true);
    }
    let (avg, worst) = constant_one_success(&f);
    let hits = (0..trials).filter(|_| f.get(rng.gen_range(0..n))).count();
    Ok(AvgCaseReport {
        n,
        weight,
        exact_average_value: *avg.numer() as f64 / *avg.denom() as f64,
        exact_average: avg,
        measured_average: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 },
        worst_case_success: *worst.numer() as f64,
        trials,
    })
}
