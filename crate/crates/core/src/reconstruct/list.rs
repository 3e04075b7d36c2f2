//! Exhaustive list decoding, the ground truth for list sizes and the stand-in
//! for the outer Reed–Muller decoder at toy scale.

use rand::RngCore;

use super::gl::fwht;
use super::ProbOracle;
use crate::bits::BitString;
use crate::code::{CodeParams, MessageColumns, MAX_ENUMERATED_MESSAGES};
use crate::error::{Error, Result};
use crate::exec::{self, component, stream_rng, Strategy};

#[derive(Clone, Copy, Debug)]
pub enum CodeSpec<'a> {
    /// The Hadamard code on `s`-bit messages.
    Hadamard { s: u32 },
    /// The concatenated Reed–Muller ⊗ Hadamard code.
    Concatenated(&'a CodeParams),
}

impl CodeSpec<'_> {
    pub fn len(&self) -> u64 {
        match self {
            CodeSpec::Hadamard { s } => 1 << s,
            CodeSpec::Concatenated(p) => p.nbar,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn message_bits(&self) -> u32 {
        match self {
            CodeSpec::Hadamard { s } => *s,
            CodeSpec::Concatenated(p) => p.n as u32,
        }
    }
}

/// What the decoder sees: a fixed word, or an oracle sampled
/// `samples_per_position` times at every position.
#[derive(Clone, Copy)]
pub enum Received<'a> {
    Word(&'a BitString),
    Oracle { oracle: &'a dyn ProbOracle, samples_per_position: u32, rng_seed: u64 },
}

impl Received<'_> {
    fn len(&self) -> u64 {
        match self {
            Received::Word(w) => w.len() as u64,
            Received::Oracle { oracle, .. } => oracle.len(),
        }
    }

    fn samples(&self) -> u32 {
        match self {
            Received::Word(_) => 1,
            Received::Oracle { samples_per_position, .. } => *samples_per_position,
        }
    }

    /// Ones observed per position.
    fn tally(&self, strategy: Strategy) -> Vec<u32> {
        match *self {
            Received::Word(w) => (0..w.len()).map(|i| w.get(i) as u32).collect(),
            Received::Oracle { oracle, samples_per_position, rng_seed } => {
                let chunks = exec::chunk_bounds(oracle.len(), 64);
                exec::map_range(strategy, chunks.len(), |c| {
                    let (start, end) = chunks[c];
                    let mut rng = stream_rng(rng_seed, component::GENERIC, c as u64);
                    (start..end)
                        .map(|j| {
                            (0..samples_per_position).filter(|_| oracle.query(j, &mut rng as &mut dyn RngCore)).count() as u32
                        })
                        .collect::<Vec<_>>()
                })
                .concat()
            }
        }
    }
}

/// Twice the agreement count of every Hadamard codeword with a block whose
/// position `u` saw `ones[u]` ones out of `samples`.
pub fn hadamard_scores(ones: &[u32], samples: u32) -> Vec<i64> {
    let sm = samples as i64;
    let mut v: Vec<i64> = ones.iter().map(|&o| sm - 2 * o as i64).collect();
    fwht(&mut v);
    let base = sm * ones.len() as i64;
    v.iter_mut().for_each(|x| *x += base);
    v
}

/// [`hadamard_scores`] for every point block of a concatenated codeword.
pub fn point_scores(p: &CodeParams, ones: &[u32], samples: u32) -> Vec<Vec<i64>> {
    ones.chunks(p.block_len() as usize).map(|block| hadamard_scores(block, samples)).collect()
}

/// Every message whose codeword agrees with `received` on at least a `p`
/// fraction of the observations, in increasing order.
pub fn brute_list_decode(received: &Received, code: CodeSpec, p: f64, strategy: Strategy) -> Result<Vec<u64>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("agreement threshold {p} outside [0, 1]")));
    }
    let bits = code.message_bits();
    if bits > MAX_ENUMERATED_MESSAGES.trailing_zeros() {
        return Err(Error::TooLarge {
            what: "message space",
            size: 1u128 << bits.min(127),
            limit: MAX_ENUMERATED_MESSAGES as u128,
        });
    }
    if received.len() != code.len() {
        return Err(Error::LengthMismatch { expected: code.len() as usize, actual: received.len() as usize });
    }
    let samples = received.samples();
    if samples == 0 {
        return Err(Error::InvalidParams("need at least one sample per position".into()));
    }
    let ones = received.tally(strategy);
    // 2·agree ≥ 2p·len·samples, compared exactly up to float rounding of p.
    let need = 2.0 * p * code.len() as f64 * samples as f64;
    let passes = |score: i64| score as f64 >= need - 1e-9;
    match code {
        CodeSpec::Hadamard { s } => {
            let scores = hadamard_scores(&ones, samples);
            Ok((0..1u64 << s).filter(|&x| passes(scores[x as usize])).collect())
        }
        CodeSpec::Concatenated(params) => {
            let table = point_scores(params, &ones, samples);
            let cols = MessageColumns::new(params, strategy)?;
            let mut found = cols.scan(strategy, |msg, values| {
                let score: i64 = values.iter().zip(&table).map(|(&v, row)| row[v as usize]).sum();
                passes(score).then_some(msg)
            });
            found.sort_unstable();
            Ok(found)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{code_params_with, encode_all, expand_hadamard, CodeConfig};
    use crate::reconstruct::{NoisyWord, WordOracle};

    #[test]
    fn hadamard_one_flip() {
        for x in 0..8u32 {
            for flip in 0..8 {
                let mut w = expand_hadamard(&[x], 3);
                w.flip(flip);
                let list =
                    brute_list_decode(&Received::Word(&w), CodeSpec::Hadamard { s: 3 }, 0.75, Strategy::Sequential).unwrap();
                assert_eq!(list, vec![x as u64]);
            }
        }
    }

    #[test]
    fn zero_word() {
        let w = BitString::zeros(8);
        let list = brute_list_decode(&Received::Word(&w), CodeSpec::Hadamard { s: 3 }, 0.6, Strategy::Sequential).unwrap();
        assert_eq!(list, vec![0]);
        let all = brute_list_decode(&Received::Word(&w), CodeSpec::Hadamard { s: 3 }, 0.0, Strategy::Sequential).unwrap();
        assert_eq!(all, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn scores_count_agreements() {
        let w = BitString::parse_binary("10110010").unwrap();
        let ones: Vec<u32> = (0..8).map(|i| w.get(i) as u32).collect();
        let scores = hadamard_scores(&ones, 1);
        for x in 0..8u32 {
            let agree = 8 - expand_hadamard(&[x], 3).hamming_distance(&w).unwrap();
            assert_eq!(scores[x as usize], 2 * agree as i64);
        }
    }

    #[test]
    fn concatenated_exact_codewords() {
        let p = code_params_with(4, 0.25, &CodeConfig::desk()).unwrap();
        for msg in [0u64, 5, 15] {
            let f = BitString::from_u64(msg, 4);
            let w = encode_all(&f, &p).unwrap();
            let seq = brute_list_decode(&Received::Word(&w), CodeSpec::Concatenated(&p), 1.0, Strategy::Sequential).unwrap();
            assert_eq!(seq, vec![msg]);
            let par = brute_list_decode(&Received::Word(&w), CodeSpec::Concatenated(&p), 0.5, Strategy::Parallel).unwrap();
            assert!(par.contains(&msg));
        }
    }

    #[test]
    fn sampled_oracle() {
        let w = expand_hadamard(&[11], 5);
        let o = NoisyWord { word: w.clone(), flip: 0.1 };
        let rec = Received::Oracle { oracle: &o, samples_per_position: 16, rng_seed: 3 };
        let list = brute_list_decode(&rec, CodeSpec::Hadamard { s: 5 }, 0.8, Strategy::Sequential).unwrap();
        assert_eq!(list, vec![11]);
        let exact = WordOracle { word: w };
        let rec = Received::Oracle { oracle: &exact, samples_per_position: 1, rng_seed: 0 };
        assert_eq!(brute_list_decode(&rec, CodeSpec::Hadamard { s: 5 }, 1.0, Strategy::Parallel).unwrap(), vec![11]);
    }

    #[test]
    fn rejects_large_or_mismatched() {
        let w = BitString::zeros(8);
        assert!(brute_list_decode(&Received::Word(&w), CodeSpec::Hadamard { s: 4 }, 0.5, Strategy::Sequential).is_err());
        assert!(brute_list_decode(&Received::Word(&w), CodeSpec::Hadamard { s: 21 }, 0.5, Strategy::Sequential).is_err());
        assert!(brute_list_decode(&Received::Word(&w), CodeSpec::Hadamard { s: 3 }, 1.5, Strategy::Sequential).is_err());
    }
}
