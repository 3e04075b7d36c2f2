//! Average-case reconstruction for the NW generator: fix the hybrid index
//! `i*` and every seed bit outside `S_{i*}`, tabulate the earlier output bits
//! as functions of the shared seed bits, and predict codeword bit `j` from one
//! distinguisher call.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{mean_slack, Counted, Distinguisher, ProbOracle};
use crate::bits::BitString;
use crate::design::{self, DesignFamily};
use crate::error::{Error, Result};
use crate::exec::{self, component, stream_rng, Strategy};
use crate::trevisan::{ExtractorParams, Trevisan};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advice {
    pub i_star: usize,
    /// Seed with the bits of `S_{i*}` cleared.
    pub fixing: BitString,
    /// `tables[k][idx]` is output bit `k < i*` when the seed bits in
    /// `S_k ∩ S_{i*}` read `idx` (smallest seed index least significant).
    pub tables: Vec<BitString>,
    /// Position of the true message in the decoded list, once known.
    pub list_index: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdviceBits {
    pub hybrid_index: u64,
    pub fixing: u64,
    pub tables: u64,
    pub list_index: u64,
    pub total: u64,
}

pub(crate) fn ceil_log2(v: u64) -> u64 {
    (64 - v.saturating_sub(1).leading_zeros()) as u64
}

impl Advice {
    /// Advice for hybrid index `i_star` under seed fixing `fixing`, with the
    /// tables read off the extractor itself.
    pub fn build(ext: &Trevisan, i_star: usize, fixing: &BitString) -> Result<Self> {
        let p = ext.params();
        if i_star >= p.m {
            return Err(Error::IndexOutOfRange { index: i_star as u64, len: p.m as u64 });
        }
        if fixing.len() != p.t {
            return Err(Error::LengthMismatch { expected: p.t, actual: fixing.len() });
        }
        let target = p.design.set(i_star);
        let mut base = fixing.clone();
        for &u in target {
            base.set(u, false);
        }
        let tables = (0..i_star)
            .map(|k| {
                let shared: Vec<usize> = p.design.set(k).iter().copied().filter(|u| target.contains(u)).collect();
                BitString::from_bits((0..1u64 << shared.len()).map(|idx| {
                    let mut y = base.clone();
                    for (q, &u) in shared.iter().enumerate() {
                        y.set(u, idx >> q & 1 == 1);
                    }
                    ext.code_bit(design::slice_index(&y, p.design.set(k)))
                }))
            })
            .collect();
        Ok(Advice { i_star, fixing: base, tables, list_index: None })
    }

    /// Sizes of the advice fields; `list_size` adds `⌈log2 L⌉` for the list index.
    pub fn bits(&self, p: &ExtractorParams, list_size: Option<u64>) -> AdviceBits {
        let hybrid_index = ceil_log2(p.m as u64);
        let fixing = (p.t - p.design.l) as u64;
        let tables = self.tables.iter().map(|t| t.len() as u64).sum();
        let list_index = list_size.map_or(0, ceil_log2);
        AdviceBits { hybrid_index, fixing, tables, list_index, total: hybrid_index + fixing + tables + list_index }
    }
}

/// `R^T(adv, ·)` as a probabilistic oracle on codeword positions.
pub struct Predictor<'a, D: ?Sized> {
    d: &'a D,
    advice: &'a Advice,
    target: &'a [usize],
    /// For `k < i*`: positions inside `S_{i*}` of the elements of `S_k ∩ S_{i*}`.
    shared: Vec<Vec<usize>>,
    m: usize,
}

impl<'a, D: Distinguisher + ?Sized> Predictor<'a, D> {
    pub fn new(d: &'a D, design: &'a DesignFamily, advice: &'a Advice) -> Result<Self> {
        if d.seed_len() != design.t || d.output_len() != design.m() || advice.i_star >= design.m() {
            return Err(Error::InvalidParams("distinguisher, design and advice disagree".into()));
        }
        let target = design.set(advice.i_star);
        let shared = (0..advice.i_star)
            .map(|k| target.iter().enumerate().filter(|(_, u)| design.set(k).contains(u)).map(|(pos, _)| pos).collect())
            .collect();
        Ok(Predictor { d, advice, target, shared, m: design.m() })
    }
}

impl<D: Distinguisher + ?Sized> ProbOracle for Predictor<'_, D> {
    fn len(&self) -> u64 {
        1u64 << self.target.len()
    }

    /// Exactly one distinguisher call.
    fn query(&self, j: u64, rng: &mut dyn RngCore) -> bool {
        let mut y = self.advice.fixing.clone();
        for (pos, &u) in self.target.iter().enumerate() {
            if j >> pos & 1 == 1 {
                y.set(u, true);
            }
        }
        let i_star = self.advice.i_star;
        let mut z = BitString::zeros(self.m);
        for (k, positions) in self.shared.iter().enumerate() {
            let idx = positions.iter().enumerate().fold(0usize, |acc, (q, &pos)| acc | ((j >> pos & 1) as usize) << q);
            z.set(k, self.advice.tables[k].get(idx));
        }
        let mut guess = false;
        for k in i_star..self.m {
            let bit: bool = rng.gen();
            if k == i_star {
                guess = bit;
            }
            z.set(k, bit);
        }
        if self.d.test(&y, &z, rng) {
            guess
        } else {
            !guess
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Random seed fixings tried for each hybrid index.
    pub fixings_per_index: u64,
    /// Positions sampled to score each candidate advice.
    pub samples_per_candidate: u64,
    /// Sweep every codeword position when there are at most this many.
    pub final_sweep_limit: u64,
    /// Positions sampled in the final measurement otherwise.
    pub final_samples: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { fixings_per_index: 4, samples_per_candidate: 1024, final_sweep_limit: 1 << 16, final_samples: 1 << 14 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvgCaseReport {
    pub passed: bool,
    pub i_star: usize,
    /// Predictor success over the final measurement.
    pub success: f64,
    /// `1/2 + eps/(2m)`.
    pub threshold: f64,
    pub slack: f64,
    pub positions: u64,
    pub distinguisher_queries: u64,
    pub one_query_per_position: bool,
    pub full_sweep: bool,
    pub candidates_examined: u64,
    pub best_search_success: f64,
    pub advice_bits: AdviceBits,
}

#[derive(Clone, Debug)]
pub struct AvgCase {
    /// The best advice found, returned even when the bound is missed.
    pub advice: Advice,
    pub report: AvgCaseReport,
}

fn random_seed_bits(len: usize, rng: &mut impl Rng) -> BitString {
    BitString::from_bits((0..len).map(|_| rng.gen::<bool>()))
}

/// Searches hybrid indices and seed fixings for advice whose predictor beats
/// `1/2 + eps/(2m)` (minus sampling slack) on uniform codeword positions.
pub fn avg_case_reconstruct(
    d: &dyn Distinguisher,
    f: &BitString,
    p: &ExtractorParams,
    budget: &SearchBudget,
    rng_seed: u64,
    strategy: Strategy,
) -> Result<AvgCase> {
    if budget.fixings_per_index == 0 || budget.samples_per_candidate == 0 || budget.final_samples == 0 {
        return Err(Error::InvalidParams("search budget must be positive".into()));
    }
    let ext = Trevisan::new(f, p)?;
    let nbar = p.code.nbar;
    let candidates = p.m as u64 * budget.fixings_per_index;
    let scored = exec::map_range(strategy, candidates as usize, |c| -> Result<u64> {
        let mut rng = stream_rng(rng_seed, component::RECONSTRUCTION, c as u64);
        let i_star = c / budget.fixings_per_index as usize;
        let advice = Advice::build(&ext, i_star, &random_seed_bits(p.t, &mut rng))?;
        let predictor = Predictor::new(d, &p.design, &advice)?;
        Ok((0..budget.samples_per_candidate)
            .filter(|_| {
                let j = rng.gen_range(0..nbar);
                predictor.query(j, &mut rng) == ext.code_bit(j)
            })
            .count() as u64)
    });
    let scored = scored.into_iter().collect::<Result<Vec<u64>>>()?;
    let (best_c, best_hits) = scored.iter().enumerate().fold((0, 0), |(bc, bh), (c, &h)| if h > bh { (c, h) } else { (bc, bh) });
    let mut rng = stream_rng(rng_seed, component::RECONSTRUCTION, best_c as u64);
    let advice = Advice::build(&ext, best_c / budget.fixings_per_index as usize, &random_seed_bits(p.t, &mut rng))?;

    let counted = Counted::new(d);
    let predictor = Predictor::new(&counted, &p.design, &advice)?;
    let full_sweep = nbar <= budget.final_sweep_limit;
    let positions = if full_sweep { nbar } else { budget.final_samples };
    let chunks = exec::chunk_bounds(positions, 64);
    let hits: u64 = exec::map_range(strategy, chunks.len(), |c| {
        let (start, end) = chunks[c];
        let mut rng = stream_rng(rng_seed, component::RECONSTRUCTION, 1 << 40 | c as u64);
        (start..end)
            .filter(|&i| {
                let j = if full_sweep { i } else { rng.gen_range(0..nbar) };
                predictor.query(j, &mut rng) == ext.code_bit(j)
            })
            .count() as u64
    })
    .into_iter()
    .sum();
    let queries = counted.queries();
    let success = hits as f64 / positions as f64;
    let threshold = 0.5 + p.eps / (2.0 * p.m as f64);
    let slack = mean_slack(positions);
    Ok(AvgCase {
        report: AvgCaseReport {
            passed: success >= threshold - slack,
            i_star: advice.i_star,
            success,
            threshold,
            slack,
            positions,
            distinguisher_queries: queries,
            one_query_per_position: queries == positions,
            full_sweep,
            candidates_examined: candidates,
            best_search_success: best_hits as f64 / budget.samples_per_candidate as f64,
            advice_bits: advice.bits(p, None),
        },
        advice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::CodeConfig;
    use crate::reconstruct::{ExactMatch, IgnoreOutput};
    use crate::trevisan::plan_params_with;

    fn toy() -> ExtractorParams {
        plan_params_with(16, 16, 1, 0.7, 15.0, 10.0, &CodeConfig::desk()).unwrap().feasible().unwrap()
    }

    #[test]
    fn advice_tables_follow_intersections() {
        let p = toy();
        let f = BitString::from_u64(0x0ff0, 16);
        let ext = Trevisan::new(&f, &p).unwrap();
        let fixing = BitString::from_u64(0x0555_5555, p.t);
        let adv = Advice::build(&ext, 1, &fixing).unwrap();
        let shared = design::intersection_size(p.design.set(0), p.design.set(1));
        assert_eq!(adv.tables.len(), 1);
        assert_eq!(adv.tables[0].len(), 1 << shared);
        assert!(p.design.set(1).iter().all(|&u| !adv.fixing.get(u)));
        let bits = adv.bits(&p, Some(3));
        assert_eq!(bits.hybrid_index, 1);
        assert_eq!(bits.fixing, (p.t - p.design.l) as u64);
        assert_eq!(bits.list_index, 2);
        assert_eq!(bits.total, 1 + 13 + 2 + 2);
    }

    #[test]
    fn last_hybrid_predictor_is_exact_for_exact_match() {
        let p = toy();
        let f = BitString::from_u64(0xa5c3, 16);
        let d = ExactMatch::new(&f, &p).unwrap();
        let adv = Advice::build(d.extractor(), p.m - 1, &BitString::from_u64(12345, p.t)).unwrap();
        let pred = Predictor::new(&d, &p.design, &adv).unwrap();
        let mut rng = stream_rng(0, component::GENERIC, 0);
        for j in (0..p.code.nbar).step_by(97) {
            assert_eq!(pred.query(j, &mut rng), d.extractor().code_bit(j));
        }
    }

    #[test]
    fn first_hybrid_predictor_is_three_quarters() {
        let p = toy();
        let f = BitString::from_u64(0x0123, 16);
        let d = ExactMatch::new(&f, &p).unwrap();
        let adv = Advice::build(d.extractor(), 0, &BitString::zeros(p.t)).unwrap();
        let pred = Predictor::new(&d, &p.design, &adv).unwrap();
        let mut rng = stream_rng(1, component::GENERIC, 0);
        let n = 20_000;
        let hits = (0..n)
            .filter(|_| {
                let j = rng.gen_range(0..p.code.nbar);
                pred.query(j, &mut rng) == d.extractor().code_bit(j)
            })
            .count();
        assert!((hits as f64 / n as f64 - 0.75).abs() <= mean_slack(n));
    }

    #[test]
    fn exact_match_reconstructs_with_one_query_each() {
        let p = toy();
        let f = BitString::from_u64(0xbeef, 16);
        let d = ExactMatch::new(&f, &p).unwrap();
        let avg = avg_case_reconstruct(&d, &f, &p, &SearchBudget::default(), 9, Strategy::Sequential).unwrap();
        let r = &avg.report;
        assert!(r.passed);
        assert!(r.full_sweep);
        assert_eq!(r.positions, p.code.nbar);
        assert!(r.one_query_per_position);
        assert!(r.success >= r.threshold - r.slack);
        assert!(r.success >= 0.5 - r.slack);
    }

    #[test]
    fn ignoring_distinguisher_fails() {
        let p = toy();
        let f = BitString::from_u64(0xbeef, 16);
        let d = IgnoreOutput { t: p.t, m: p.m };
        let avg = avg_case_reconstruct(&d, &f, &p, &SearchBudget::default(), 9, Strategy::Sequential).unwrap();
        assert!(!avg.report.passed);
        assert!(avg.report.success >= 0.5 - avg.report.slack);
    }

    #[test]
    fn search_is_strategy_independent() {
        let p = toy();
        let f = BitString::from_u64(0x7777, 16);
        let d = crate::reconstruct::Noisy { inner: ExactMatch::new(&f, &p).unwrap(), flip: 0.1 };
        let budget = SearchBudget { final_sweep_limit: 0, final_samples: 2000, ..SearchBudget::default() };
        let a = avg_case_reconstruct(&d, &f, &p, &budget, 4, Strategy::Sequential).unwrap();
        let b = avg_case_reconstruct(&d, &f, &p, &budget, 4, Strategy::Parallel).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.advice, b.advice);
    }
}
