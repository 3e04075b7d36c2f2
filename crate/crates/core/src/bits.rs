//! Bit strings, explicit finite distributions, statistical distance and
//! min-entropy.
//!
//! Bit order is fixed crate-wide: bit `i` of a string is bit `i` of its
//! integer rendering (index 0 is the least significant bit), and byte
//! serialization is LSB-first within each byte. The textual form prints
//! index 0 leftmost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Exact probability type used by the brute-force verifiers.
pub type Rational = Ratio<i128>;

/// A fixed-length sequence of bits, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

impl BitString {
    /// All-zero string of length `len`.
    pub fn zeros(len: usize) -> Self {
        BitString { len, words: SmallVec::from_elem(0, len.div_ceil(64)) }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self::zeros(len);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.clear_tail();
        s
    }

    /// The low `len` bits of `value`; `len` may not exceed 64.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mut s = Self::zeros(len);
        if len > 0 {
            s.words[0] = value;
            s.clear_tail();
        }
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words: SmallVec<[u64; 2]> = SmallVec::new();
        let mut len = 0usize;
        for b in bits {
            if len.is_multiple_of(64) {
                words.push(0);
            }
            if b {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        BitString { len, words }
    }

    /// Parses a string of `0`/`1` characters, index 0 leftmost.
    pub fn parse_binary(text: &str) -> Result<Self> {
        text.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Malformed(format!("unexpected character {other:?} in bit string"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }

    /// Reads the first `len` bits of `bytes`, LSB-first within each byte.
    pub fn from_bytes_lsb(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() * 8 < len {
            return Err(Error::LengthMismatch { expected: len, actual: bytes.len() * 8 });
        }
        Ok(Self::from_bits((0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1)))
    }

    /// Packs the string into bytes, LSB-first, zero-padding the final byte.
    pub fn to_bytes_lsb(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in self.ones_iter() {
            out[i / 8] |= 1 << (i % 8);
        }
        out
    }

    /// Hex rendering of [`to_bytes_lsb`](Self::to_bytes_lsb).
    pub fn to_hex(&self) -> String {
        self.to_bytes_lsb().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(text: &str, len: usize) -> Result<Self> {
        let text = text.trim();
        if !text.len().is_multiple_of(2) {
            return Err(Error::Malformed("hex string has odd length".into()));
        }
        let bytes = (0..text.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&text[i..i + 2], 16)
                    .map_err(|e| Error::Malformed(format!("bad hex digit pair {:?}: {e}", &text[i..i + 2])))
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_bytes_lsb(&bytes, len)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn try_get(&self, i: usize) -> Result<bool> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange { index: i as u64, len: self.len as u64 });
        }
        Ok(self.get(i))
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let b = self.get(i);
        self.set(i, !b);
    }

    /// Integer rendering; the string must be at most 64 bits long.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64, "to_u64 on a {}-bit string", self.len);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of set bits in ascending order.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        check_len(self.len, other.len)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect();
        Ok(BitString { len: self.len, words })
    }

    /// Number of positions where the two strings differ.
    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        check_len(self.len, other.len)?;
        Ok(self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones() as usize).sum())
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        BitString::parse_binary(&text).map_err(serde::de::Error::custom)
    }
}

/// Σ aᵢ·bᵢ mod 2.
pub fn inner_product_mod2(a: &BitString, b: &BitString) -> Result<bool> {
    check_len(a.len, b.len)?;
    let ones: u32 = a.words.iter().zip(&b.words).map(|(x, y)| (x & y).count_ones()).sum();
    Ok(ones % 2 == 1)
}

/// Parity of `a & b` for packed integers.
#[inline]
pub fn parity(a: u64, b: u64) -> bool {
    (a & b).count_ones() & 1 == 1
}

/// Probability values a [`FiniteDist`] can carry.
pub trait Probability: Signed + Clone + PartialOrd + fmt::Debug {
    fn to_f64(&self) -> f64;
    /// Whether a probability total is acceptably close to one.
    fn is_unit_total(&self) -> bool;
}

impl Probability for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_unit_total(&self) -> bool {
        (self - 1.0).abs() <= 1e-12
    }
}

impl Probability for Rational {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_unit_total(&self) -> bool {
        *self == Rational::from_integer(1)
    }
}

/// A distribution with explicit finite support over equal-length bit strings.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDist<P> {
    outcome_len: usize,
    support: BTreeMap<BitString, P>,
}

impl<P: Probability> FiniteDist<P> {
    pub fn new(entries: Vec<(BitString, P)>) -> Result<Self> {
        let outcome_len =
            entries.first().map(|(b, _)| b.len()).ok_or_else(|| Error::InvalidDistribution("empty support".into()))?;
        let mut support = BTreeMap::new();
        let mut total = P::zero();
        for (outcome, p) in entries {
            check_len(outcome_len, outcome.len())?;
            if p < P::zero() || p > P::one() {
                return Err(Error::InvalidDistribution(format!("probability {p:?} outside [0, 1]")));
            }
            total = total + p.clone();
            if support.insert(outcome.clone(), p).is_some() {
                return Err(Error::InvalidDistribution(format!("duplicate outcome {outcome}")));
            }
        }
        if !total.is_unit_total() {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total:?}")));
        }
        Ok(FiniteDist { outcome_len, support })
    }

    /// Point mass on `outcome`.
    pub fn point(outcome: BitString) -> Self {
        let outcome_len = outcome.len();
        FiniteDist { outcome_len, support: BTreeMap::from([(outcome, P::one())]) }
    }

    pub fn outcome_len(&self) -> usize {
        self.outcome_len
    }

    pub fn prob(&self, outcome: &BitString) -> P {
        self.support.get(outcome).cloned().unwrap_or_else(P::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitString, &P)> {
        self.support.iter()
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// Relabels every outcome through `f`, which must be injective.
    pub fn map_outcomes(&self, f: impl Fn(&BitString) -> BitString) -> Result<Self> {
        Self::new(self.support.iter().map(|(b, p)| (f(b), p.clone())).collect())
    }
}

impl FiniteDist<Rational> {
    /// Uniform distribution over `outcomes` with exact weights.
    pub fn uniform(outcomes: impl IntoIterator<Item = BitString>) -> Result<Self> {
        let outcomes: Vec<_> = outcomes.into_iter().collect();
        let weight = Rational::new(1, outcomes.len().max(1) as i128);
        Self::new(outcomes.into_iter().map(|o| (o, weight)).collect())
    }
}

/// Variational distance `½ Σ |d1(a) − d2(a)|` over the union of supports.
pub fn stat_distance<P: Probability>(d1: &FiniteDist<P>, d2: &FiniteDist<P>) -> Result<P> {
    check_len(d1.outcome_len, d2.outcome_len)?;
    let mut total = P::zero();
    for (a, p) in &d1.support {
        total = total + (p.clone() - d2.prob(a)).abs();
    }
    for (a, q) in &d2.support {
        if !d1.support.contains_key(a) {
            total = total + q.clone();
        }
    }
    let two = P::one() + P::one();
    Ok(total / two)
}

/// `−log2(max_a d(a))`.
pub fn min_entropy<P: Probability>(d: &FiniteDist<P>) -> f64 {
    let max = d.support.values().map(|p| p.to_f64()).fold(0.0f64, f64::max);
    let h = -max.log2();
    // -log2(1) is -0.0
    if h == 0.0 {
        0.0
    } else {
        h
    }
}

/// Whether `d` has min-entropy at least `k`.
///
/// Any such `d` is a convex combination of flat sources with min-entropy at
/// least `k`, which is why the verifiers only ever enumerate flat sources.
pub fn flat_decompose_check<P: Probability>(d: &FiniteDist<P>, k: f64) -> bool {
    min_entropy(d) >= k - 1e-12
}

/// A distribution uniform over a nonempty set of equal-length strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlatSource {
    outcome_len: usize,
    support: BTreeSet<BitString>,
}

impl FlatSource {
    pub fn new(outcomes: impl IntoIterator<Item = BitString>) -> Result<Self> {
        let support: BTreeSet<BitString> = outcomes.into_iter().collect();
        let outcome_len = support
            .first()
            .map(BitString::len)
            .ok_or_else(|| Error::InvalidDistribution("flat source with empty support".into()))?;
        if let Some(bad) = support.iter().find(|b| b.len() != outcome_len) {
            return Err(Error::LengthMismatch { expected: outcome_len, actual: bad.len() });
        }
        Ok(FlatSource { outcome_len, support })
    }

    /// Flat source over integer-encoded outcomes of `len` bits.
    pub fn from_values(values: impl IntoIterator<Item = u64>, len: usize) -> Result<Self> {
        Self::new(values.into_iter().map(|v| BitString::from_u64(v, len)))
    }

    /// The uniform distribution on all of `{0,1}^n`.
    pub fn full(n: usize) -> Self {
        Self::from_values(0..1u64 << n, n).expect("nonempty")
    }

    pub fn outcome_len(&self) -> usize {
        self.outcome_len
    }

    pub fn size(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> impl Iterator<Item = &BitString> {
        self.support.iter()
    }

    /// Integer renderings of the support (requires outcome length ≤ 64).
    pub fn values(&self) -> Vec<u64> {
        self.support.iter().map(BitString::to_u64).collect()
    }

    /// Exactly `log2 |support|`.
    pub fn min_entropy(&self) -> f64 {
        (self.support.len() as f64).log2()
    }

    pub fn to_dist(&self) -> FiniteDist<Rational> {
        FiniteDist::uniform(self.support.iter().cloned()).expect("flat source is a valid distribution")
    }
}

/// Serde adapter writing a [`Rational`] in its `num/den` text form.
pub mod rational_text {
    use super::Rational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(|_| D::Error::custom(format!("not a rational: {text}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(s: &str) -> BitString {
        BitString::parse_binary(s).unwrap()
    }

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn bit_order_is_lsb_first() {
        let s = BitString::from_u64(0b110, 3);
        assert_eq!(s.to_string(), "011");
        assert_eq!(s.to_bytes_lsb(), vec![0b110]);
        assert_eq!(BitString::from_bytes_lsb(&[0x01, 0x80], 16).unwrap().ones_iter().collect::<Vec<_>>(), vec![0, 15]);
        assert_eq!(BitString::from_hex("0180", 16).unwrap().to_hex(), "0180");
    }

    #[test]
    fn inner_product_examples() {
        assert!(inner_product_mod2(&b("101"), &b("110")).unwrap());
        assert!(!inner_product_mod2(&b("101"), &b("000")).unwrap());
        assert!(inner_product_mod2(&b("111"), &b("111")).unwrap());
        assert_eq!(inner_product_mod2(&b("11"), &b("111")), Err(Error::LengthMismatch { expected: 2, actual: 3 }));
    }

    #[test]
    fn stat_distance_examples() {
        let zero = FiniteDist::<Rational>::point(b("0"));
        let one = FiniteDist::<Rational>::point(b("1"));
        let unif = FiniteDist::uniform([b("0"), b("1")]).unwrap();
        assert_eq!(stat_distance(&zero, &zero).unwrap(), r(0, 1));
        assert_eq!(stat_distance(&zero, &one).unwrap(), r(1, 1));
        assert_eq!(stat_distance(&unif, &zero).unwrap(), r(1, 2));
        let wide = FiniteDist::<Rational>::point(b("00"));
        assert!(stat_distance(&zero, &wide).is_err());
    }

    #[test]
    fn min_entropy_examples() {
        let unif = FiniteDist::uniform((0..8).map(|v| BitString::from_u64(v, 3))).unwrap();
        assert_eq!(min_entropy(&unif), 3.0);
        assert_eq!(min_entropy(&FiniteDist::<f64>::point(b("01"))), 0.0);
        let skew = FiniteDist::new(vec![(b("0"), 0.75), (b("1"), 0.25)]).unwrap();
        assert!((min_entropy(&skew) - (4.0f64 / 3.0).log2()).abs() < 1e-15);
    }

    #[test]
    fn flat_decompose_examples() {
        let unif4 = FlatSource::full(2).to_dist();
        assert!(flat_decompose_check(&unif4, 2.0));
        assert!(!flat_decompose_check(&FiniteDist::<f64>::point(b("0")), 1.0));
        // -log2(3/4) ≈ 0.415 ≥ 0.4
        let skew = FiniteDist::new(vec![(b("0"), r(3, 4)), (b("1"), r(1, 4))]).unwrap();
        assert!(flat_decompose_check(&skew, 0.4));
        assert!(!flat_decompose_check(&skew, 0.42));
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(FiniteDist::new(vec![(b("0"), 0.5), (b("1"), 0.4)]).is_err());
        assert!(FiniteDist::new(vec![(b("0"), r(1, 2)), (b("0"), r(1, 2))]).is_err());
        assert!(FiniteDist::new(vec![(b("0"), r(1, 2)), (b("10"), r(1, 2))]).is_err());
        assert!(FiniteDist::<f64>::new(vec![]).is_err());
        assert!(FlatSource::new(Vec::new()).is_err());
    }

    #[test]
    fn flat_source_min_entropy_is_exact() {
        for k in 0..6 {
            let src = FlatSource::from_values(0..1u64 << k, 8).unwrap();
            assert_eq!(src.min_entropy(), k as f64);
            assert_eq!(min_entropy(&src.to_dist()), k as f64);
        }
    }

    /// Brute-force `max_S D1(S) − D2(S)` over every subset of the joint support.
    fn subset_form(d1: &FiniteDist<Rational>, d2: &FiniteDist<Rational>) -> Rational {
        let outcomes: Vec<BitString> =
            d1.iter().chain(d2.iter()).map(|(o, _)| o.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let mut best = r(0, 1);
        for mask in 0u32..1 << outcomes.len() {
            let mut diff = r(0, 1);
            for (i, o) in outcomes.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    diff += d1.prob(o) - d2.prob(o);
                }
            }
            best = best.max(diff);
        }
        best
    }

    fn arb_dist(len: usize) -> impl Strategy<Value = FiniteDist<Rational>> {
        proptest::collection::vec(0u32..5, 1usize << len).prop_filter_map("nonzero", move |w| {
            let total: u32 = w.iter().sum();
            (total > 0).then(|| {
                FiniteDist::new(
                    w.iter()
                        .enumerate()
                        .filter(|(_, &x)| x > 0)
                        .map(|(v, &x)| (BitString::from_u64(v as u64, len), r(x as i128, total as i128)))
                        .collect(),
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn distance_matches_subset_form(d1 in arb_dist(3), d2 in arb_dist(3)) {
            prop_assert_eq!(stat_distance(&d1, &d2).unwrap(), subset_form(&d1, &d2));
        }

        #[test]
        fn distance_is_a_metric(d1 in arb_dist(2), d2 in arb_dist(2), d3 in arb_dist(2)) {
            let d12 = stat_distance(&d1, &d2).unwrap();
            prop_assert_eq!(d12, stat_distance(&d2, &d1).unwrap());
            prop_assert!(d12 <= stat_distance(&d1, &d3).unwrap() + stat_distance(&d3, &d2).unwrap());
            prop_assert!(d12 >= r(0, 1) && d12 <= r(1, 1));
        }

        #[test]
        fn distance_invariant_under_relabeling(d1 in arb_dist(3), d2 in arb_dist(3), key in 0u64..8) {
            let relabel = |o: &BitString| BitString::from_u64(o.to_u64() ^ key, 3);
            prop_assert_eq!(
                stat_distance(&d1, &d2).unwrap(),
                stat_distance(&d1.map_outcomes(relabel).unwrap(), &d2.map_outcomes(relabel).unwrap()).unwrap()
            );
        }

        #[test]
        fn bytes_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let s = BitString::from_bits(bits.iter().copied());
            prop_assert_eq!(BitString::from_bytes_lsb(&s.to_bytes_lsb(), s.len()).unwrap(), s.clone());
            prop_assert_eq!(BitString::parse_binary(&s.to_string()).unwrap(), s);
        }
    }
}
