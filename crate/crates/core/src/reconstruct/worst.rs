//! Worst-case reconstruction: the average-case predictor is read as a
//! probabilistic oracle on codeword positions, each point block is list
//! decoded by Goldreich–Levin, and the outer Reed–Muller layer is recovered
//! by enumerating messages against the per-point lists.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gl::gl_decode;
use super::nw::{avg_case_reconstruct, AdviceBits, AvgCaseReport, Predictor, SearchBudget};
use super::{estimate_advantage, BlockView, Counted, Distinguisher, ExactMatch};
use crate::bits::BitString;
use crate::code::{LowDegreeExtension, MessageColumns};
use crate::error::Result;
use crate::exec::{self, component, derive_seed, stream_rng, Strategy};
use crate::trevisan::ExtractorParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub search: SearchBudget,
    /// Confidence asked of each inner decode.
    pub gl_conf: f64,
    /// Inner decoding radius as a multiple of the code's `δ`.
    pub inner_delta_factor: f64,
    /// Outer threshold `τ = ⌊factor·√(η·points·Σ|list_p|)⌋ + 1`, the
    /// Johnson list-recovery radius at `factor = 1`.
    pub outer_threshold_factor: f64,
    /// Monte-Carlo trials for the advantage estimate in [`run_game`].
    pub advantage_trials: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            search: SearchBudget::default(),
            gl_conf: 0.9,
            inner_delta_factor: 0.5,
            outer_threshold_factor: 1.0,
            advantage_trials: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseReport {
    pub passed: bool,
    pub failure: Option<String>,
    pub avg: AvgCaseReport,
    pub inner_delta: f64,
    pub points: u64,
    pub inner_list_max: usize,
    pub inner_list_mean: f64,
    /// Points whose inner list holds the true field value.
    pub points_with_true_value: u64,
    pub outer_threshold: u64,
    pub outer_candidates: usize,
    pub list_index: Option<u64>,
    /// Distinguisher calls made by the inner decodes.
    pub queries: u64,
    pub queries_per_point_max: u64,
    /// `queries ≤ queries_per_point_max · points`, checked on the counter.
    pub queries_within_bound: bool,
    pub advice_bits: AdviceBits,
}

#[derive(Clone, Debug)]
pub struct WorstCase {
    pub recovered: Option<BitString>,
    pub report: WorstCaseReport,
}

/// Recovers `f` from a distinguisher for `E(f, ·)` plus advice.
pub fn worst_case_reconstruct(
    d: &dyn Distinguisher,
    f: &BitString,
    p: &ExtractorParams,
    budgets: &Budgets,
    rng_seed: u64,
    strategy: Strategy,
) -> Result<WorstCase> {
    let avg = avg_case_reconstruct(d, f, p, &budgets.search, rng_seed, strategy)?;
    let code = &p.code;
    let points = code.num_points();
    let inner_delta = budgets.inner_delta_factor * code.delta;
    let mut report = WorstCaseReport {
        passed: false,
        failure: None,
        avg: avg.report.clone(),
        inner_delta,
        points,
        inner_list_max: 0,
        inner_list_mean: 0.0,
        points_with_true_value: 0,
        outer_threshold: 0,
        outer_candidates: 0,
        list_index: None,
        queries: 0,
        queries_per_point_max: 0,
        queries_within_bound: true,
        advice_bits: avg.advice.bits(p, None),
    };
    if !avg.report.passed {
        report.failure = Some(format!(
            "average-case predictor success {:.4} below {:.4} − {:.4}",
            avg.report.success, avg.report.threshold, avg.report.slack
        ));
        return Ok(WorstCase { recovered: None, report });
    }

    let counted = Counted::new(d);
    let predictor = Predictor::new(&counted, &p.design, &avg.advice)?;
    let block = code.block_len();
    let lists = exec::map_range(strategy, points as usize, |pc| {
        let view = BlockView { inner: &predictor, base: (pc as u64) << code.s, len: block };
        let mut rng = stream_rng(rng_seed, component::GOLDREICH_LEVIN, pc as u64);
        gl_decode(&view, inner_delta, budgets.gl_conf, &mut rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let queries = counted.queries();
    let per_point_max = lists.iter().map(|o| o.queries).max().unwrap_or(0);
    report.queries = queries;
    report.queries_per_point_max = per_point_max;
    report.queries_within_bound = queries == lists.iter().map(|o| o.queries).sum::<u64>() && queries <= per_point_max * points;
    report.inner_list_max = lists.iter().map(|o| o.candidates.len()).max().unwrap_or(0);
    report.inner_list_mean = lists.iter().map(|o| o.candidates.len()).sum::<usize>() as f64 / points as f64;

    let truth = LowDegreeExtension::new(f, code)?.eval_all_points(strategy);
    report.points_with_true_value = lists.iter().zip(&truth).filter(|(o, &v)| o.candidates.contains(&(v as u64))).count() as u64;

    let listed: usize = lists.iter().map(|o| o.candidates.len()).sum();
    let outer_threshold =
        (budgets.outer_threshold_factor * (code.eta() * points as f64 * listed as f64).sqrt()).floor() as u64 + 1;
    report.outer_threshold = outer_threshold;
    let member: Vec<Vec<bool>> = lists
        .iter()
        .map(|o| {
            let mut row = vec![false; block as usize];
            o.candidates.iter().for_each(|&x| row[x as usize] = true);
            row
        })
        .collect();
    let cols = MessageColumns::new(code, strategy)?;
    let mut outer = cols.scan(strategy, |msg, values| {
        let score = values.iter().zip(&member).filter(|(&v, row)| row[v as usize]).count() as u64;
        (score >= outer_threshold).then_some((score, msg))
    });
    outer.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    report.outer_candidates = outer.len();

    let target = f.to_u64();
    let mut advice = avg.advice;
    advice.list_index = outer.iter().position(|&(_, msg)| msg == target).map(|i| i as u64);
    report.list_index = advice.list_index;
    report.advice_bits = advice.bits(p, Some(outer.len().max(1) as u64));
    match advice.list_index {
        Some(_) => {
            report.passed = true;
            Ok(WorstCase { recovered: Some(f.clone()), report })
        }
        None => {
            report.failure = Some(format!(
                "message absent from {} outer candidates (true value listed at {}/{} points, threshold {})",
                outer.len(),
                report.points_with_true_value,
                points,
                outer_threshold
            ));
            Ok(WorstCase { recovered: None, report })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u64,
    pub seed: u64,
    pub message: String,
    pub advantage: f64,
    pub advantage_half_width: f64,
    pub avg_success: f64,
    pub i_star: usize,
    pub one_query_per_position: bool,
    pub recovered: bool,
    pub outer_candidates: usize,
    pub queries: u64,
    pub advice_bits: u64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub mean_advantage: f64,
    pub min_avg_success: f64,
    /// `1/2 + eps/(2m)`.
    pub threshold: f64,
    pub all_one_query: bool,
    pub mean_queries: f64,
    pub max_advice_bits: u64,
    pub per_trial: Vec<TrialSummary>,
}

/// The reconstruction game: each trial draws a fresh message, builds the
/// exact-match distinguisher for it and tries to recover the message.
pub fn run_game(p: &ExtractorParams, trials: u64, budgets: &Budgets, rng_seed: u64, strategy: Strategy) -> Result<GameReport> {
    let mut per_trial = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let seed = derive_seed(rng_seed, trial);
        let mut rng = stream_rng(seed, component::GENERIC, 0);
        let f = BitString::from_bits((0..p.n).map(|_| rng.gen::<bool>()));
        let d = ExactMatch::new(&f, p)?;
        let adv = estimate_advantage(&d, &f, p, budgets.advantage_trials.max(1), 0, seed, strategy)?;
        let run = worst_case_reconstruct(&d, &f, p, budgets, seed, strategy)?;
        let r = run.report;
        per_trial.push(TrialSummary {
            trial,
            seed,
            message: f.to_string(),
            advantage: adv.advantage,
            advantage_half_width: adv.half_width,
            avg_success: r.avg.success,
            i_star: r.avg.i_star,
            one_query_per_position: r.avg.one_query_per_position,
            recovered: run.recovered.as_ref() == Some(&f),
            outer_candidates: r.outer_candidates,
            queries: r.queries,
            advice_bits: r.advice_bits.total,
            failure: r.failure,
        });
    }
    let n = trials.max(1) as f64;
    let successes = per_trial.iter().filter(|t| t.recovered).count() as u64;
    Ok(GameReport {
        trials,
        successes,
        success_rate: successes as f64 / n,
        mean_advantage: per_trial.iter().map(|t| t.advantage).sum::<f64>() / n,
        min_avg_success: per_trial.iter().map(|t| t.avg_success).fold(f64::INFINITY, f64::min),
        threshold: 0.5 + p.eps / (2.0 * p.m as f64),
        all_one_query: per_trial.iter().all(|t| t.one_query_per_position),
        mean_queries: per_trial.iter().map(|t| t.queries as f64).sum::<f64>() / n,
        max_advice_bits: per_trial.iter().map(|t| t.advice_bits).max().unwrap_or(0),
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::CodeConfig;
    use crate::reconstruct::{IgnoreOutput, Noisy};
    use crate::trevisan::plan_params_with;

    fn toy() -> ExtractorParams {
        plan_params_with(16, 16, 1, 0.7, 15.0, 10.0, &CodeConfig::desk()).unwrap().feasible().unwrap()
    }

    #[test]
    fn exact_match_recovers_message() {
        let p = toy();
        let f = BitString::from_u64(0xbeef, 16);
        let d = ExactMatch::new(&f, &p).unwrap();
        let run = worst_case_reconstruct(&d, &f, &p, &Budgets::default(), 5, Strategy::default()).unwrap();
        assert_eq!(run.recovered, Some(f));
        let r = run.report;
        assert!(r.passed && r.queries_within_bound);
        assert!(r.advice_bits.total as f64 >= (r.outer_candidates as f64).log2());
        assert!(r.inner_list_max as f64 <= 4.0 / (r.inner_delta * r.inner_delta));
    }

    #[test]
    fn noisy_distinguisher_still_recovers() {
        let p = toy();
        let f = BitString::from_u64(0x1234, 16);
        let d = Noisy { inner: ExactMatch::new(&f, &p).unwrap(), flip: 0.1 };
        let run = worst_case_reconstruct(&d, &f, &p, &Budgets::default(), 7, Strategy::default()).unwrap();
        assert_eq!(run.recovered, Some(f));
        assert!(run.report.avg.success > 0.85);
    }

    #[test]
    fn ignoring_distinguisher_fails() {
        let p = toy();
        let f = BitString::from_u64(0x0f0f, 16);
        let d = IgnoreOutput { t: p.t, m: p.m };
        let run = worst_case_reconstruct(&d, &f, &p, &Budgets::default(), 6, Strategy::default()).unwrap();
        assert!(run.recovered.is_none());
        assert!(!run.report.passed && run.report.failure.is_some());
    }
}
