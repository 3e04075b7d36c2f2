//! The extractor `TR^f(y) = NW^{C(f)}(y)`: the source string is encoded with
//! the list-decodable code and the codeword is read at the positions named by
//! the design slices of the seed. Also hosts the two classical baselines.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::code::{self, CodeConfig, CodeParams, LowDegreeExtension};
use crate::design::{self, DesignFamily};
use crate::error::{Error, Result};
use crate::exec::{self, Strategy};

pub const DEFAULT_C_EXPONENT: f64 = 15.0;

/// Codewords up to this many bits are materialized by [`Trevisan::new`].
pub const CACHED_CODEWORD_BITS: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractorParams {
    pub n: usize,
    pub k: usize,
    pub b: usize,
    pub eps: f64,
    pub m: usize,
    pub c_exponent: f64,
    pub multiplier: f64,
    /// Seed length, equal to `design.t`.
    pub t: usize,
    pub code: CodeParams,
    pub design: DesignFamily,
}

/// Why the planner produced no extractor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    pub n: usize,
    pub k: usize,
    pub b: usize,
    pub eps: f64,
    pub c_exponent: f64,
    pub multiplier: f64,
    /// Unrounded output length `mult·(eps/log2 n)·(k/b)^{1/c}`.
    pub m_tilde: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Plan {
    Feasible(ExtractorParams),
    Infeasible(InfeasibilityReport),
}

impl Plan {
    pub fn feasible(self) -> Option<ExtractorParams> {
        match self {
            Plan::Feasible(p) => Some(p),
            Plan::Infeasible(_) => None,
        }
    }
}

pub fn m_tilde(n: usize, k: usize, b: usize, eps: f64, c_exponent: f64, multiplier: f64) -> f64 {
    multiplier * (eps / (n as f64).log2()) * (k as f64 / b as f64).powf(1.0 / c_exponent)
}

pub fn plan_params(n: usize, k: usize, b: usize, eps: f64, c_exponent: f64, multiplier: f64) -> Result<Plan> {
    plan_params_with(n, k, b, eps, c_exponent, multiplier, &CodeConfig::default())
}

pub fn plan_params_with(
    n: usize,
    k: usize,
    b: usize,
    eps: f64,
    c_exponent: f64,
    multiplier: f64,
    code_cfg: &CodeConfig,
) -> Result<Plan> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!("eps={eps} outside (0, 1)")));
    }
    if !(0 < b && b <= k && k <= n) {
        return Err(Error::InvalidParams(format!("need 0 < b ≤ k ≤ n (got n={n}, k={k}, b={b})")));
    }
    if n < 2 {
        return Err(Error::InvalidParams("log2 n must be positive: n ≥ 2".into()));
    }
    if !(c_exponent > 0.0 && multiplier > 0.0) {
        return Err(Error::InvalidParams("c exponent and multiplier must be positive".into()));
    }
    let mt = m_tilde(n, k, b, eps, c_exponent, multiplier);
    let infeasible =
        |reason: String| Ok(Plan::Infeasible(InfeasibilityReport { n, k, b, eps, c_exponent, multiplier, m_tilde: mt, reason }));
    if mt < 1.0 {
        return infeasible(format!("output length formula gives m = {mt:.6} < 1"));
    }
    let m = mt.floor() as usize;
    let delta = eps / (2.0 * m as f64);
    let code = match code::code_params_with(n, delta, code_cfg) {
        Ok(c) => c,
        Err(Error::Infeasible(reason)) => return infeasible(reason),
        Err(e) => return Err(e),
    };
    let design = design::make_design(m, code.log2_nbar() as usize, design::default_intersection(m))?;
    Ok(Plan::Feasible(ExtractorParams { n, k, b, eps, m, c_exponent, multiplier, t: design.t, code, design }))
}

impl ExtractorParams {
    /// Checks the wiring between design, code and extractor parameters, for
    /// parameters read back from JSON.
    pub fn validate(&self) -> Result<()> {
        self.code.validate()?;
        let bad = |msg: &str| Err(Error::InvalidParams(msg.into()));
        if self.code.n != self.n {
            return bad("code message length differs from n");
        }
        if self.design.m() != self.m || self.m == 0 {
            return bad("design must have exactly m ≥ 1 sets");
        }
        if self.design.l != self.code.log2_nbar() as usize {
            return bad("design set size must equal log2 of the codeword length");
        }
        if self.design.r != design::default_intersection(self.m) {
            return bad("design intersection bound must equal ⌈log2 m⌉");
        }
        if self.t != self.design.t {
            return bad("seed length must equal the design universe");
        }
        let delta = self.eps / (2.0 * self.m as f64);
        if (self.code.delta - delta).abs() > 1e-12 * delta.max(1.0) {
            return bad("code delta must equal eps/(2m)");
        }
        if !design::verify_design(&self.design) {
            return bad("design violates its intersection bound");
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        self.code.delta
    }
}

fn check_len(what: usize, expected: usize) -> Result<()> {
    if what != expected {
        return Err(Error::LengthMismatch { expected, actual: what });
    }
    Ok(())
}

/// The extractor for one fixed source string, ready to evaluate on seeds.
#[derive(Clone, Debug)]
pub struct Trevisan {
    params: ExtractorParams,
    lde: LowDegreeExtension,
    codeword: Option<BitString>,
}

impl Trevisan {
    pub fn new(f: &BitString, p: &ExtractorParams) -> Result<Self> {
        check_len(f.len(), p.n)?;
        let lde = LowDegreeExtension::new(f, &p.code)?;
        let codeword = (p.code.nbar <= CACHED_CODEWORD_BITS)
            .then(|| code::expand_hadamard(&lde.eval_all_points(Strategy::Sequential), p.code.s));
        Ok(Trevisan { params: p.clone(), lde, codeword })
    }

    pub fn params(&self) -> &ExtractorParams {
        &self.params
    }

    pub fn codeword(&self) -> Option<&BitString> {
        self.codeword.as_ref()
    }

    /// Codeword bit at position `j`.
    pub fn code_bit(&self, j: u64) -> bool {
        match &self.codeword {
            Some(w) => w.get(j as usize),
            None => self.lde.encode_bit(j).expect("slice index below nbar"),
        }
    }

    pub fn eval(&self, y: &BitString) -> Result<BitString> {
        check_len(y.len(), self.params.t)?;
        Ok(BitString::from_bits(self.params.design.sets.iter().map(|set| self.code_bit(design::slice_index(y, set)))))
    }

    /// As [`Trevisan::eval`], with output bits computed in parallel.
    pub fn eval_with(&self, y: &BitString, strategy: Strategy) -> Result<BitString> {
        check_len(y.len(), self.params.t)?;
        let bits = exec::map_range(strategy, self.params.m, |i| self.code_bit(design::slice_index(y, self.params.design.set(i))));
        Ok(BitString::from_bits(bits))
    }
}

pub fn extract(f: &BitString, y: &BitString, p: &ExtractorParams) -> Result<BitString> {
    check_len(f.len(), p.n)?;
    check_len(y.len(), p.t)?;
    let lde = LowDegreeExtension::new(f, &p.code)?;
    nw_generate(|j| lde.encode_bit(j), y, &p.design)
}

/// The NW generator over an arbitrary codeword oracle.
pub fn nw_generate<G>(mut g: G, y: &BitString, d: &DesignFamily) -> Result<BitString>
where
    G: FnMut(u64) -> Result<bool>,
{
    check_len(y.len(), d.t)?;
    let bits = d.sets.iter().map(|set| g(design::slice_index(y, set))).collect::<Result<Vec<_>>>()?;
    Ok(BitString::from_bits(bits))
}

/// Toeplitz hashing: `out_i = Σ_j seed_{i+j}·x_j mod 2`.
pub fn leftover_hash(x: &BitString, seed: &BitString, m: usize) -> Result<BitString> {
    if m == 0 {
        return Err(Error::InvalidParams("hash output length must be at least 1".into()));
    }
    check_len(seed.len(), x.len() + m - 1)?;
    Ok(BitString::from_bits((0..m).map(|i| x.ones_iter().fold(false, |acc, j| acc ^ seed.get(i + j)))))
}

/// Packed Toeplitz hash on integers (bit `j` of `x` is `x_j`).
#[inline]
pub fn toeplitz_u64(x: u64, seed: u64, n: usize, m: usize) -> u64 {
    let mut out = 0u64;
    let row_mask = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    for i in 0..m {
        let row = (seed >> i) & row_mask;
        out |= ((row & x).count_ones() as u64 & 1) << i;
    }
    out
}

pub fn bit_select(x: &BitString, i: usize) -> Result<bool> {
    x.try_get(i)
}
