//! Desk-scale ground truth for seeded extractors: exact distance of
//! `(Y, E(X, Y))` from `(Y, U_m)`, worst-case flat sources, and classical
//! adversaries keeping `b` bits about the source.
//!
//! Everything is computed from the count numerator
//! `N(A) = Σ_{y,z} |#{x ∈ A : E(x,y) = z}·2^m − |A||`, so that the distance of
//! a flat source `A` is exactly `N(A) / (2·|A|·2^{t+m})`.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{rational_text, FlatSource, Rational};
use crate::code;
use crate::design::slice_index_u64;
use crate::error::{Error, Result};
use crate::exec::{self, component, stream_rng, Strategy};
use crate::trevisan::{toeplitz_u64, ExtractorParams};

/// Largest `2^{n+t}` table [`EvalTable`] will build.
pub const MAX_TABLE_ENTRIES: u64 = 1 << 26;

/// Largest support for which every subset numerator is tabulated.
pub const MAX_SUBSET_SUPPORT: usize = 24;

/// An extractor on integer-packed inputs: bit `i` of `x` is `x_i`, likewise
/// for seeds and outputs.
pub trait SeededExtractor: Sync {
    fn name(&self) -> String;
    fn input_len(&self) -> usize;
    fn seed_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn eval(&self, x: u64, y: u64) -> u64;

    /// `E(x ⊕ x', y) = E(x, y) ⊕ E(x', y)`. Translating a source by one of
    /// its own points then leaves every count numerator unchanged.
    fn is_linear(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BitSelect {
    n: usize,
}

impl BitSelect {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n > 64 {
            return Err(Error::InvalidParams(format!("bit selection needs n a power of two ≤ 64, got {n}")));
        }
        Ok(BitSelect { n })
    }
}

impl SeededExtractor for BitSelect {
    fn name(&self) -> String {
        "bitselect".into()
    }
    fn input_len(&self) -> usize {
        self.n
    }
    fn seed_len(&self) -> usize {
        self.n.trailing_zeros() as usize
    }
    fn output_len(&self) -> usize {
        1
    }
    fn eval(&self, x: u64, y: u64) -> u64 {
        x >> y & 1
    }
    fn is_linear(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ToeplitzHash {
    n: usize,
    m: usize,
}

impl ToeplitzHash {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 || n + m - 1 > 63 {
            return Err(Error::InvalidParams(format!("Toeplitz hash needs n, m ≥ 1 and n+m−1 ≤ 63 (n={n}, m={m})")));
        }
        Ok(ToeplitzHash { n, m })
    }
}

impl SeededExtractor for ToeplitzHash {
    fn name(&self) -> String {
        "hash".into()
    }
    fn input_len(&self) -> usize {
        self.n
    }
    fn seed_len(&self) -> usize {
        self.n + self.m - 1
    }
    fn output_len(&self) -> usize {
        self.m
    }
    fn eval(&self, x: u64, y: u64) -> u64 {
        toeplitz_u64(x, y, self.n, self.m)
    }
    fn is_linear(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantExtractor {
    pub n: usize,
    pub t: usize,
    pub m: usize,
    pub value: u64,
}

impl SeededExtractor for ConstantExtractor {
    fn name(&self) -> String {
        "constant".into()
    }
    fn input_len(&self) -> usize {
        self.n
    }
    fn seed_len(&self) -> usize {
        self.t
    }
    fn output_len(&self) -> usize {
        self.m
    }
    fn eval(&self, _x: u64, _y: u64) -> u64 {
        self.value
    }
}

/// The NW-over-code extractor with every source string's codeword cached.
#[derive(Clone, Debug)]
pub struct TrevisanExtractor {
    params: ExtractorParams,
    codewords: Vec<crate::bits::BitString>,
}

impl TrevisanExtractor {
    pub fn new(params: &ExtractorParams, strategy: Strategy) -> Result<Self> {
        params.validate()?;
        let cells = (1u128 << params.n.min(100)) * params.code.nbar as u128;
        if params.n > 20 || params.t > 63 || cells > code::MAX_MATERIALIZED_BITS as u128 {
            return Err(Error::TooLarge {
                what: "cached codeword table",
                size: cells,
                limit: code::MAX_MATERIALIZED_BITS as u128,
            });
        }
        let codewords = exec::map_range(strategy, 1usize << params.n, |x| {
            let f = crate::bits::BitString::from_u64(x as u64, params.n);
            code::encode_all_with(&f, &params.code, Strategy::Sequential).expect("validated size")
        });
        Ok(TrevisanExtractor { params: params.clone(), codewords })
    }
}

impl SeededExtractor for TrevisanExtractor {
    fn name(&self) -> String {
        "trevisan".into()
    }
    fn input_len(&self) -> usize {
        self.params.n
    }
    fn seed_len(&self) -> usize {
        self.params.t
    }
    fn output_len(&self) -> usize {
        self.params.m
    }
    fn eval(&self, x: u64, y: u64) -> u64 {
        let word = &self.codewords[x as usize];
        self.params
            .design
            .sets
            .iter()
            .enumerate()
            .fold(0, |acc, (i, set)| acc | (word.get(slice_index_u64(y, set) as usize) as u64) << i)
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// Every value `E(x, y)`, indexed by `y·2^n + x`.
#[derive(Clone, Debug)]
pub struct EvalTable {
    n: usize,
    t: usize,
    m: usize,
    values: Vec<u32>,
}

impl EvalTable {
    pub fn new(e: &dyn SeededExtractor, strategy: Strategy) -> Result<Self> {
        let (n, t, m) = (e.input_len(), e.seed_len(), e.output_len());
        if n + t > 26 || m > 16 {
            return Err(Error::TooLarge {
                what: "evaluation table entries",
                size: 1u128 << (n + t).min(127),
                limit: MAX_TABLE_ENTRIES as u128,
            });
        }
        let values =
            exec::map_range(strategy, 1usize << (n + t), |i| e.eval((i & ((1 << n) - 1)) as u64, (i >> n) as u64) as u32);
        Ok(EvalTable { n, t, m, values })
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn seed_len(&self) -> usize {
        self.t
    }

    pub fn output_len(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, x: u64, y: u64) -> u32 {
        self.values[(y << self.n | x) as usize]
    }

    /// `N(A)` for the given support.
    pub fn numerator(&self, support: &[u64]) -> u64 {
        let outputs = 1usize << self.m;
        let size = support.len() as i64;
        let mut counts = vec![0i64; outputs];
        let mut total = 0u64;
        for y in 0..1u64 << self.t {
            counts.fill(0);
            for &x in support {
                counts[self.get(x, y) as usize] += 1;
            }
            total += counts.iter().map(|&c| (c * outputs as i64 - size).unsigned_abs()).sum::<u64>();
        }
        total
    }

    /// `2·|A|·2^{t+m}`.
    pub fn denominator(&self, size: usize) -> u128 {
        2 * size as u128 * (1u128 << (self.t + self.m))
    }

    pub fn distance(&self, support: &[u64]) -> Rational {
        ratio(self.numerator(support) as u128, self.denominator(support.len()))
    }
}

fn ratio(num: u128, den: u128) -> Rational {
    Rational::new(num as i128, den as i128)
}

/// Exact distance of `(Y, E(X, Y))` from `(Y, U_m)`, refusing instances with
/// more than `budget` joint outcomes `|supp X|·2^t·2^m`.
pub fn extractor_distance_exact(e: &dyn SeededExtractor, x: &FlatSource, budget: u64) -> Result<Rational> {
    if x.outcome_len() != e.input_len() {
        return Err(Error::LengthMismatch { expected: e.input_len(), actual: x.outcome_len() });
    }
    let (t, m) = (e.seed_len(), e.output_len());
    let work = (x.size() as u128) << (t + m).min(100);
    if t + m > 40 || work > budget as u128 {
        return Err(Error::TooLarge { what: "enumerated (x, y, z) outcomes", size: work, limit: budget as u128 });
    }
    let support = x.values();
    let size = support.len() as i64;
    let outputs = 1usize << m;
    let mut counts = vec![0i64; outputs];
    let mut total = 0u128;
    for y in 0..1u64 << t {
        counts.fill(0);
        for &v in &support {
            counts[e.eval(v, y) as usize] += 1;
        }
        total += counts.iter().map(|&c| (c * outputs as i64 - size).unsigned_abs() as u128).sum::<u128>();
    }
    Ok(ratio(total, 2 * size as u128 * (1u128 << (t + m))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    Sampled,
    /// Exhaustive when the candidate count fits the budget, sampled otherwise.
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstSource {
    pub extractor: String,
    pub n: usize,
    pub k: usize,
    pub values: Vec<u64>,
    #[serde(with = "rational_text")]
    pub distance: Rational,
    pub distance_value: f64,
    pub mode: SearchMode,
    /// Flat sources whose distance was computed.
    pub sources_examined: u64,
    /// Sources an exhaustive search must cover (after translation reduction
    /// for linear extractors), as decimal text since it can exceed `u64`.
    #[serde(with = "count_text")]
    pub candidates: u128,
}

mod count_text {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u128, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(|_| D::Error::custom(format!("not a count: {text}")))
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn unrank_combination(universe: u64, k: usize, mut rank: u128) -> Vec<u64> {
    let mut out = Vec::with_capacity(k);
    let mut c = 0u64;
    for i in 0..k {
        loop {
            let rest = binomial(universe - c - 1, (k - i - 1) as u64);
            if rank < rest {
                break;
            }
            rank -= rest;
            c += 1;
        }
        out.push(c);
        c += 1;
    }
    out
}

fn next_combination(comb: &mut [u64], universe: u64) -> bool {
    let k = comb.len();
    for i in (0..k).rev() {
        if comb[i] < universe - (k - i) as u64 {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The flat source of size `2^k` maximizing the distance from uniform.
pub fn worst_flat_source(
    e: &dyn SeededExtractor,
    k: usize,
    mode: SearchMode,
    budget: u64,
    rng_seed: u64,
    strategy: Strategy,
) -> Result<WorstSource> {
    let n = e.input_len();
    if k > n {
        return Err(Error::InvalidParams(format!("min-entropy k={k} exceeds n={n}")));
    }
    let table = EvalTable::new(e, strategy)?;
    let universe = 1u64 << n;
    let size = 1u64 << k;
    let linear = e.is_linear();
    let candidates = if linear { binomial(universe - 1, size - 1) } else { binomial(universe, size) };
    let resolved = match mode {
        SearchMode::Exhaustive if candidates > budget as u128 => {
            return Err(Error::TooLarge { what: "flat sources to enumerate", size: candidates, limit: budget as u128 })
        }
        SearchMode::Auto if candidates <= budget as u128 => SearchMode::Exhaustive,
        SearchMode::Auto => SearchMode::Sampled,
        other => other,
    };
    let (num, values, examined) = match resolved {
        SearchMode::Exhaustive => {
            let chunks = exec::chunk_bounds(candidates as u64, 256);
            let best = exec::map_range(strategy, chunks.len(), |c| {
                let (start, end) = chunks[c];
                let (pool, pick, offset) = if linear { (universe - 1, size - 1, 1) } else { (universe, size, 0) };
                let mut comb = unrank_combination(pool, pick as usize, start as u128);
                let mut support = Vec::with_capacity(size as usize);
                let mut best: Option<(u64, Vec<u64>)> = None;
                for r in start..end {
                    support.clear();
                    if linear {
                        support.push(0);
                    }
                    support.extend(comb.iter().map(|&v| v + offset));
                    let num = table.numerator(&support);
                    if best.as_ref().is_none_or(|(b, _)| num > *b) {
                        best = Some((num, support.clone()));
                    }
                    if r + 1 < end {
                        next_combination(&mut comb, pool);
                    }
                }
                best
            });
            let (num, values) = pick_first_max(best.into_iter().flatten());
            (num, values, candidates as u64)
        }
        SearchMode::Sampled => {
            let samples = budget.max(1);
            let chunks = exec::chunk_bounds(samples, 256);
            let best = exec::map_range(strategy, chunks.len(), |c| {
                let (start, end) = chunks[c];
                let mut best: Option<(u64, Vec<u64>)> = None;
                for i in start..end {
                    let support = sample_source(n, k, i, rng_seed);
                    let num = table.numerator(&support);
                    if best.as_ref().is_none_or(|(b, _)| num > *b) {
                        best = Some((num, support));
                    }
                }
                best
            });
            let (num, values) = pick_first_max(best.into_iter().flatten());
            (num, values, samples)
        }
        SearchMode::Auto => unreachable!("resolved above"),
    };
    let distance = ratio(num as u128, table.denominator(size as usize));
    let mut values = values;
    values.sort_unstable();
    Ok(WorstSource {
        extractor: e.name(),
        n,
        k,
        values,
        distance_value: rational_value(&distance),
        distance,
        mode: resolved,
        sources_examined: examined,
        candidates,
    })
}

fn pick_first_max(items: impl Iterator<Item = (u64, Vec<u64>)>) -> (u64, Vec<u64>) {
    items
        .fold(None, |best: Option<(u64, Vec<u64>)>, (num, v)| match best {
            Some((b, _)) if b >= num => best,
            _ => Some((num, v)),
        })
        .expect("at least one candidate")
}

/// Pairwise collision data of a seeded family, valid for every source at once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionCertificate {
    pub extractor: String,
    pub k: usize,
    /// `max_{x≠x'} Pr_y[E(x,y) = E(x',y)]`.
    #[serde(with = "rational_text")]
    pub max_pair_collision: Rational,
    /// Upper bound on `4·Δ²` over every flat source of size `2^k`:
    /// `2^m·(1/K + (1 − 1/K)·c) − 1`.
    #[serde(with = "rational_text")]
    pub bound_sq: Rational,
    /// `4·(½·2^{(m−k)/2})² = 2^{m−k}`.
    #[serde(with = "rational_text")]
    pub target_sq: Rational,
    pub holds: bool,
}

/// Collision-probability bound on the distance of every flat source of size
/// `2^k`, from the exact worst pairwise collision probability over all
/// `x ≠ x'`. Because `Δ ≤ ½·√(2^{t+m}·CP(Y, E(X,Y)) − 1)`, `holds` certifies
/// `Δ ≤ ½·2^{(m−k)/2}` for all such sources.
pub fn collision_certificate(e: &dyn SeededExtractor, k: usize, strategy: Strategy) -> Result<CollisionCertificate> {
    let n = e.input_len();
    if k > n || n == 0 {
        return Err(Error::InvalidParams(format!("need 0 < n and k ≤ n (n={n}, k={k})")));
    }
    let table = EvalTable::new(e, strategy)?;
    let (t, m) = (table.seed_len(), table.output_len());
    let inputs = 1u64 << n;
    let worst = exec::map_range(strategy, inputs as usize, |x| {
        let x = x as u64;
        (x + 1..inputs)
            .map(|x2| (0..1u64 << t).filter(|&y| table.get(x, y) == table.get(x2, y)).count() as u64)
            .max()
            .unwrap_or(0)
    })
    .into_iter()
    .max()
    .unwrap_or(0);
    let c = ratio(worst as u128, 1u128 << t);
    let size = Rational::from_integer(1i128 << k);
    let outputs = Rational::from_integer(1i128 << m);
    let one = Rational::from_integer(1);
    let bound_sq = outputs * (one / size + (one - one / size) * c) - one;
    let target_sq = outputs / size;
    Ok(CollisionCertificate { extractor: e.name(), k, max_pair_collision: c, holds: bound_sq <= target_sq, bound_sq, target_sq })
}

pub fn rational_value(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Sample `index` of the structured source sampler: uniform supports,
/// subcubes (some coordinates fixed), Hamming balls and affine subspaces,
/// in rotation. Each sample draws from its own stream.
pub fn sample_source(n: usize, k: usize, index: u64, rng_seed: u64) -> Vec<u64> {
    let mut rng = stream_rng(rng_seed, component::SOURCES, index);
    let universe = 1usize << n;
    let size = 1usize << k;
    let uniform = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<u64> {
        sample_indices(rng, universe, size).into_iter().map(|v| v as u64).collect()
    };
    match index % 4 {
        0 => uniform(&mut rng),
        1 => {
            let fixed: Vec<usize> = sample_indices(&mut rng, n, n - k).into_vec();
            let free: Vec<usize> = (0..n).filter(|c| !fixed.contains(c)).collect();
            let base = fixed.iter().fold(0u64, |acc, &c| acc | (rng.gen::<bool>() as u64) << c);
            (0..size as u64).map(|a| free.iter().enumerate().fold(base, |acc, (pos, &c)| acc | (a >> pos & 1) << c)).collect()
        }
        2 => {
            let center = rng.gen_range(0..universe as u64);
            let mut keyed: Vec<(u32, u32, u64)> =
                (0..universe as u64).map(|x| ((x ^ center).count_ones(), rng.gen::<u32>(), x)).collect();
            keyed.sort_unstable();
            keyed.into_iter().take(size).map(|(_, _, x)| x).collect()
        }
        _ => {
            // echelon basis keyed by leading bit
            let mut basis: Vec<u64> = Vec::with_capacity(k);
            let mut attempts = 0;
            while basis.len() < k && attempts < 64 {
                attempts += 1;
                let mut v = rng.gen_range(0..universe as u64);
                for &b in &basis {
                    v = v.min(v ^ b);
                }
                if v != 0 {
                    basis.push(v);
                    basis.sort_unstable_by(|a, b| b.cmp(a));
                }
            }
            if basis.len() < k {
                return uniform(&mut rng);
            }
            let offset = rng.gen_range(0..universe as u64);
            (0..size as u64)
                .map(|a| basis.iter().enumerate().fold(offset, |acc, (pos, &b)| if a >> pos & 1 == 1 { acc ^ b } else { acc }))
                .collect()
        }
    }
}

/// `N(S)` for every subset `S` of `elements`, indexed by subset mask
/// (bit `i` selects `elements[i]`). Walks each chunk in Gray-code order so
/// every step updates one count per seed.
pub fn subset_numerators(table: &EvalTable, elements: &[u64], strategy: Strategy) -> Result<Vec<u64>> {
    let s = elements.len();
    if s > MAX_SUBSET_SUPPORT {
        return Err(Error::TooLarge {
            what: "support for subset tabulation",
            size: s as u128,
            limit: MAX_SUBSET_SUPPORT as u128,
        });
    }
    let (t, m) = (table.seed_len(), table.output_len());
    let outputs = 1i64 << m;
    let chunks = exec::chunk_bounds(1u64 << s, 64);
    let parts = exec::map_range(strategy, chunks.len(), |c| {
        let (start, end) = chunks[c];
        let mut counts = vec![0i64; 1usize << (t + m)];
        let mut mask = start ^ (start >> 1);
        let toggle = |counts: &mut Vec<i64>, i: usize, delta: i64| {
            for y in 0..1u64 << t {
                counts[(y << m) as usize | table.get(elements[i], y) as usize] += delta;
            }
        };
        for i in 0..s {
            if mask >> i & 1 == 1 {
                toggle(&mut counts, i, 1);
            }
        }
        let mut out = Vec::with_capacity((end - start) as usize);
        for g in start..end {
            let size = mask.count_ones() as i64;
            let num: u64 = counts.iter().map(|&c| (c * outputs - size).unsigned_abs()).sum();
            out.push((mask, num));
            if g + 1 < end {
                let bit = (g + 1).trailing_zeros() as usize;
                let delta = if mask >> bit & 1 == 1 { -1 } else { 1 };
                toggle(&mut counts, bit, delta);
                mask ^= 1 << bit;
            }
        }
        out
    });
    let mut nums = vec![0u64; 1usize << s];
    for (mask, num) in parts.into_iter().flatten() {
        nums[mask as usize] = num;
    }
    Ok(nums)
}

/// Largest `Σ_c N(A_c)` over partitions of the full mask into at most `2^b`
/// cells, given `N` on every subset. The numerator is subadditive, so once
/// the cells can isolate every element the partition into singletons wins.
pub fn partition_max(nums: &[u64], b: u32) -> u64 {
    let s = nums.len().trailing_zeros() as usize;
    let full = nums.len() - 1;
    if b == 0 || s == 0 {
        return nums[full];
    }
    if b >= 32 || 1usize << b >= s {
        return (0..s).map(|i| nums[1 << i]).sum();
    }
    let mut cur = nums.to_vec();
    for _ in 1..b {
        let mut next = cur.clone();
        for mask in 1..nums.len() {
            let mut sub = (mask - 1) & mask;
            while sub > 0 {
                let v = cur[sub] + cur[mask ^ sub];
                if v > next[mask] {
                    next[mask] = v;
                }
                sub = (sub - 1) & mask;
            }
        }
        cur = next;
    }
    let mut best = cur[full];
    let mut sub = (full - 1) & full;
    while sub > 0 {
        best = best.max(cur[sub] + cur[full ^ sub]);
        sub = (sub - 1) & full;
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StorageReport {
    pub extractor: String,
    pub b: u32,
    pub support_size: usize,
    #[serde(with = "rational_text")]
    pub advantage: Rational,
    pub advantage_value: f64,
    pub mode: SearchMode,
    pub partitions_examined: u64,
}

/// Best advantage of a classical adversary that keeps `b` bits `c(x)` and
/// then distinguishes `(c(X), Y, E(X, Y))` from `(c(X), Y, U_m)`:
/// `max_c Σ_cells N(A_c) / (2·|A|·2^{t+m})`.
pub fn classical_storage_advantage(
    e: &dyn SeededExtractor,
    x: &FlatSource,
    b: u32,
    budget: u64,
    rng_seed: u64,
    strategy: Strategy,
) -> Result<StorageReport> {
    if x.outcome_len() != e.input_len() {
        return Err(Error::LengthMismatch { expected: e.input_len(), actual: x.outcome_len() });
    }
    let table = EvalTable::new(e, strategy)?;
    let support = x.values();
    let s = support.len();
    let cells_isolate = b >= 32 || 1usize << b >= s;
    let dp_cost = if b <= 1 { 1u128 << s.min(100) } else { 3u128.saturating_pow(s as u32) * (b as u128 - 1) };
    let tab_cost = (1u128 << s.min(100)) << (table.seed_len() + table.output_len());
    let (num, mode, examined) = if b == 0 {
        (table.numerator(&support), SearchMode::Exhaustive, 1)
    } else if cells_isolate {
        let num = support.iter().map(|&v| table.numerator(&[v])).sum();
        (num, SearchMode::Exhaustive, 1)
    } else if s <= MAX_SUBSET_SUPPORT && dp_cost.max(tab_cost) <= budget as u128 {
        let nums = subset_numerators(&table, &support, strategy)?;
        (partition_max(&nums, b), SearchMode::Exhaustive, 1)
    } else {
        let samples = (budget / (s as u64 * (1 << table.seed_len())).max(1)).clamp(1, 4096);
        let cells = 1usize << b;
        let found =
            exec::map_range(strategy, samples as usize, |i| local_search_partition(&table, &support, cells, rng_seed, i as u64));
        (found.into_iter().max().unwrap_or(0), SearchMode::Sampled, samples)
    };
    let advantage = ratio(num as u128, table.denominator(s));
    Ok(StorageReport {
        extractor: e.name(),
        b,
        support_size: s,
        advantage_value: rational_value(&advantage),
        advantage,
        mode,
        partitions_examined: examined,
    })
}

/// Random storage function improved by single-element moves.
fn local_search_partition(table: &EvalTable, support: &[u64], cells: usize, rng_seed: u64, index: u64) -> u64 {
    let mut rng = stream_rng(rng_seed, component::STORAGE, index);
    let mut assign: Vec<usize> = support.iter().map(|_| rng.gen_range(0..cells)).collect();
    let score = |assign: &[usize]| -> u64 {
        (0..cells)
            .map(|c| {
                let cell: Vec<u64> = support.iter().zip(assign).filter(|(_, &a)| a == c).map(|(&v, _)| v).collect();
                if cell.is_empty() {
                    0
                } else {
                    table.numerator(&cell)
                }
            })
            .sum()
    };
    let mut best = score(&assign);
    for _ in 0..4 {
        let mut improved = false;
        for i in 0..support.len() {
            let orig = assign[i];
            for c in 0..cells {
                if c == orig {
                    continue;
                }
                assign[i] = c;
                let v = score(&assign);
                if v > best {
                    best = v;
                    improved = true;
                    break;
                }
                assign[i] = orig;
            }
        }
        if !improved {
            break;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    /// Smallest flat-source size the premise quantifies over.
    pub s: usize,
    #[serde(with = "rational_text")]
    pub eps_lo: Rational,
    #[serde(with = "rational_text")]
    pub eps_hi: Rational,
    /// Worst distance over flat sources of size ≥ s.
    #[serde(with = "rational_text")]
    pub worst_distance: Rational,
    /// Smallest ε in `(eps_lo, eps_hi]` (as an infimum) at which the premise
    /// holds, or `None` when it fails throughout the interval.
    pub premise_eps: Option<String>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub extractor: String,
    pub n: usize,
    pub k: usize,
    pub b: u32,
    #[serde(with = "rational_text")]
    pub advantage: Rational,
    pub rows: Vec<LemmaRow>,
    pub violations: usize,
}

/// Every flat source of a tiny input space with all subset numerators, for
/// checking that a `(k − b − log(1/ε), ε)` extractor is `(k, b, 2ε)`-secure
/// against classical storage.
pub struct StorageLemma {
    name: String,
    n: usize,
    table: EvalTable,
    nums: Vec<u64>,
    /// `worst_by_size[s]`: max distance over flat sources of size ≥ s.
    worst_by_size: Vec<Rational>,
}

impl StorageLemma {
    pub fn new(e: &dyn SeededExtractor, strategy: Strategy) -> Result<Self> {
        let n = e.input_len();
        if n > 4 {
            return Err(Error::TooLarge { what: "input space for full subset enumeration", size: 1 << n, limit: 16 });
        }
        let table = EvalTable::new(e, strategy)?;
        let universe: Vec<u64> = (0..1u64 << n).collect();
        let nums = subset_numerators(&table, &universe, strategy)?;
        let mut best = vec![0u64; universe.len() + 1];
        for (mask, &num) in nums.iter().enumerate() {
            let size = mask.count_ones() as usize;
            best[size] = best[size].max(num);
        }
        let mut worst_by_size = vec![Rational::from_integer(0); universe.len() + 2];
        for size in (1..=universe.len()).rev() {
            let here = ratio(best[size] as u128, table.denominator(size));
            worst_by_size[size] = here.max(worst_by_size[size + 1]);
        }
        Ok(StorageLemma { name: e.name(), n, table, nums, worst_by_size })
    }

    /// Exact best `b`-bit adversary over all flat sources of size `2^k`.
    pub fn storage_advantage(&self, k: usize, b: u32) -> Rational {
        let size = 1usize << k;
        let mut best = 0u64;
        let mut local = vec![0u64; 1 << size];
        let mut global = vec![0usize; 1 << size];
        for a in 0..self.nums.len() {
            if a.count_ones() as usize != size {
                continue;
            }
            let elems: Vec<usize> = (0..self.nums.len().trailing_zeros() as usize).filter(|i| a >> i & 1 == 1).collect();
            for lm in 1..local.len() {
                let low = lm.trailing_zeros() as usize;
                global[lm] = global[lm & (lm - 1)] | 1 << elems[low];
                local[lm] = self.nums[global[lm]];
            }
            best = best.max(partition_max(&local, b));
        }
        ratio(best as u128, self.table.denominator(size))
    }

    pub fn check(&self, k: usize, b: u32) -> Result<LemmaCheck> {
        if b as usize > k || k > self.n {
            return Err(Error::InvalidParams(format!("need b ≤ k ≤ n (k={k}, b={b}, n={})", self.n)));
        }
        let advantage = self.storage_advantage(k, b);
        let scale = 1i128 << (k - b as usize);
        let rows: Vec<LemmaRow> = (1..=scale as usize)
            .map(|s| {
                let lo = Rational::new(s as i128 - 1, scale);
                let hi = Rational::new(s as i128, scale);
                let worst = self.worst_by_size[s];
                let premise = (worst <= hi).then(|| worst.max(lo));
                let holds = premise.is_none_or(|eps| advantage <= eps * 2);
                LemmaRow { s, eps_lo: lo, eps_hi: hi, worst_distance: worst, premise_eps: premise.map(|p| p.to_string()), holds }
            })
            .collect();
        Ok(LemmaCheck {
            extractor: self.name.clone(),
            n: self.n,
            k,
            b,
            advantage,
            violations: rows.iter().filter(|r| !r.holds).count(),
            rows,
        })
    }
}
