//! Reed–Muller low-degree extension over GF(2^s) concatenated with the
//! Hadamard code, encoded one bit at a time.
//!
//! A message `f ∈ {0,1}^n` is placed on the cube `H^d` (`H` = the first `h`
//! field elements in value order, zero-padded past `n`), extended to the
//! unique polynomial of degree `< h` in each variable, and every evaluation
//! `v ∈ GF(2^s)` is expanded into the `2^s` Hadamard bits `⟨v, mask⟩ mod 2`.
//!
//! Codeword positions pack as `j = mask + 2^s · (x_0 + 2^s · (x_1 + …))`.

use serde::{Deserialize, Serialize};

use crate::bits::{parity, BitString};
use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::gf2e::{FieldCtx, FieldElement, NodeBasis, MAX_DEGREE};

/// Largest codeword [`encode_all`] will materialize, in bits.
pub const MAX_MATERIALIZED_BITS: u64 = 1 << 26;

/// Largest message space the brute-force enumerators accept.
pub const MAX_ENUMERATED_MESSAGES: u64 = 1 << 20;

/// Field-size constant used for desk-scale instances. The asymptotic floor
/// `|F| ≥ C·log²n/δ⁵` with `C = 1` puts every interesting instance above
/// GF(2^16); this constant keeps the same inequality shape at toy sizes.
pub const DESK_C_FIELD: f64 = 1.0 / 1024.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    /// Message length in bits.
    pub n: usize,
    /// Decoding radius parameter: list decoding at agreement `1/2 + delta`.
    pub delta: f64,
    /// Field degree, `|F| = 2^s`.
    pub s: u32,
    /// Number of variables.
    pub d: u32,
    /// Subcube side.
    pub h: u32,
    /// Total degree bound `d·(h−1)`.
    pub degree: u32,
    /// Codeword length `2^{s·d} · 2^s`.
    pub nbar: u64,
    pub c_field: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeConfig {
    pub c_field: f64,
    pub max_vars: u32,
}

impl Default for CodeConfig {
    fn default() -> Self {
        CodeConfig { c_field: 1.0, max_vars: 32 }
    }
}

impl CodeConfig {
    pub fn desk() -> Self {
        CodeConfig { c_field: DESK_C_FIELD, ..Self::default() }
    }
}

/// Johnson bound for a binary code of relative distance `≥ (1−η)/2`: at most
/// `(1−η)/(4δ²−η)` codewords agree with any word on a `1/2+δ` fraction.
pub fn johnson_list_bound(eta: f64, delta: f64) -> Option<f64> {
    let gap = 4.0 * delta * delta - eta;
    (gap > 0.0).then(|| (1.0 - eta) / gap)
}

fn smallest_side(n: usize, d: u32) -> u32 {
    let mut h = (n as f64).powf(1.0 / d as f64).floor().max(1.0) as u64;
    while h.checked_pow(d).is_some_and(|v| v < n as u64) {
        h += 1;
    }
    while h > 1 && (h - 1).checked_pow(d).is_some_and(|v| v >= n as u64) {
        h -= 1;
    }
    h as u32
}

fn field_floor(n: usize, delta: f64, c_field: f64) -> f64 {
    let log_n = (n as f64).log2();
    c_field * log_n * log_n / delta.powi(5)
}

fn admissible_degree(s: u32, n: usize, delta: f64, c_field: f64, h: u32, degree: u32) -> bool {
    let order = (1u64 << s) as f64;
    order >= field_floor(n, delta, c_field)
        && (1u64 << s) > degree as u64
        && (1u64 << s) >= h as u64
        && order * 4.0 * delta * delta > degree as f64
}

/// Default planner (`C_field = 1`).
pub fn code_params(n: usize, delta: f64) -> Result<CodeParams> {
    code_params_with(n, delta, &CodeConfig::default())
}

/// Smallest admissible parameters: the first `d` (ascending) that admits some
/// field degree, with the minimal such `s`.
pub fn code_params_with(n: usize, delta: f64, cfg: &CodeConfig) -> Result<CodeParams> {
    check_domain(n, delta)?;
    for d in 1..=cfg.max_vars {
        let h = smallest_side(n, d);
        let degree = d * (h - 1);
        let Some(s) = (1..=MAX_DEGREE).find(|&s| admissible_degree(s, n, delta, cfg.c_field, h, degree)) else {
            continue;
        };
        if s * (d + 1) > 62 {
            continue;
        }
        return CodeParams::new(n, delta, s, d, h, cfg.c_field);
    }
    Err(Error::Infeasible(format!(
        "no code with |F| ≤ 2^16 for n={n}, delta={delta}, C_field={} (field floor {:.3e})",
        cfg.c_field,
        field_floor(n, delta, cfg.c_field)
    )))
}

fn check_domain(n: usize, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParams("message length must be at least 1".into()));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParams(format!("delta={delta} outside (0, 1/2]")));
    }
    Ok(())
}

impl CodeParams {
    /// Explicit parameters, validated against every invariant.
    pub fn new(n: usize, delta: f64, s: u32, d: u32, h: u32, c_field: f64) -> Result<Self> {
        if d == 0 || s == 0 || s > MAX_DEGREE || s * (d + 1) > 62 {
            return Err(Error::InvalidParams(format!("unsupported shape s={s}, d={d}")));
        }
        let p = CodeParams { n, delta, s, d, h, degree: d * h.saturating_sub(1), nbar: 1u64 << (s * (d + 1)), c_field };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_domain(self.n, self.delta)?;
        if self.s == 0 || self.s > MAX_DEGREE || self.d == 0 || self.h == 0 || self.s * (self.d + 1) > 62 {
            return Err(Error::InvalidParams(format!("unsupported shape s={}, d={}, h={}", self.s, self.d, self.h)));
        }
        if (self.h as u64).checked_pow(self.d).is_some_and(|c| c < self.n as u64) {
            return Err(Error::InvalidParams(format!("h^d = {}^{} < n = {}", self.h, self.d, self.n)));
        }
        if self.degree != self.d * (self.h - 1) {
            return Err(Error::InvalidParams("degree must equal d·(h−1)".into()));
        }
        if self.nbar != 1u64 << (self.s * (self.d + 1)) {
            return Err(Error::InvalidParams("nbar must equal 2^(s·d)·2^s".into()));
        }
        if !admissible_degree(self.s, self.n, self.delta, self.c_field, self.h, self.degree) {
            return Err(Error::InvalidParams(format!(
                "GF(2^{}) too small: need 2^s ≥ {:.3e}, 2^s > degree {}, and 4δ²·2^s > degree",
                self.s,
                field_floor(self.n, self.delta, self.c_field),
                self.degree
            )));
        }
        Ok(())
    }

    pub fn field(&self) -> FieldCtx {
        FieldCtx::new(self.s).expect("validated degree")
    }

    pub fn log2_nbar(&self) -> u32 {
        self.s * (self.d + 1)
    }

    /// Number of points of `F^d`.
    pub fn num_points(&self) -> u64 {
        1u64 << (self.s * self.d)
    }

    /// Hadamard block length `2^s`.
    pub fn block_len(&self) -> u64 {
        1u64 << self.s
    }

    /// `degree / 2^s`, the Schwartz–Zippel vanishing fraction.
    pub fn eta(&self) -> f64 {
        self.degree as f64 / self.block_len() as f64
    }

    /// Documented list-size curve `L(δ)` at agreement `1/2 + delta`.
    pub fn list_bound_at(&self, delta: f64) -> Option<f64> {
        johnson_list_bound(self.eta(), delta)
    }

    pub fn list_bound(&self) -> Option<f64> {
        self.list_bound_at(self.delta)
    }

    /// `(1/2)(1 − degree/2^s)·nbar`.
    pub fn distance_bound(&self) -> f64 {
        0.5 * (1.0 - self.eta()) * self.nbar as f64
    }

    /// Whether `dist ≥ (1/2)(1 − degree/2^s)·nbar`, in exact integer arithmetic.
    pub fn meets_distance_bound(&self, dist: u64) -> bool {
        (dist as u128) << (self.s + 1) >= (self.block_len() - self.degree as u64) as u128 * self.nbar as u128
    }

    pub fn pack(&self, idx: &CodeIndex) -> Result<u64> {
        if idx.point.len() != self.d as usize {
            return Err(Error::LengthMismatch { expected: self.d as usize, actual: idx.point.len() });
        }
        if idx.mask.len() != self.s as usize {
            return Err(Error::LengthMismatch { expected: self.s as usize, actual: idx.mask.len() });
        }
        let ctx = self.field();
        if let Some(bad) = idx.point.iter().find(|x| x.ctx() != ctx) {
            return Err(Error::FieldMismatch { left: format!("{ctx:?}"), right: format!("{:?}", bad.ctx()) });
        }
        let point = idx.point.iter().rev().fold(0u64, |acc, x| (acc << self.s) | x.value() as u64);
        Ok(point << self.s | idx.mask.to_u64())
    }

    pub fn unpack(&self, j: u64) -> Result<CodeIndex> {
        if j >= self.nbar {
            return Err(Error::IndexOutOfRange { index: j, len: self.nbar });
        }
        let field_mask = self.block_len() - 1;
        let ctx = self.field();
        let point = (0..self.d).map(|c| ctx.element(((j >> (self.s * (c + 1))) & field_mask) as u32)).collect::<Result<_>>()?;
        Ok(CodeIndex { point, mask: BitString::from_u64(j & field_mask, self.s as usize) })
    }
}

/// One codeword position: an evaluation point and a Hadamard mask over the
/// bit representation of field elements (mask bit `i` selects coefficient `i`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeIndex {
    pub point: Vec<FieldElement>,
    pub mask: BitString,
}

/// A message prepared for repeated evaluation of its low-degree extension.
#[derive(Clone, Debug)]
pub struct LowDegreeExtension {
    params: CodeParams,
    ctx: FieldCtx,
    basis: NodeBasis,
    cube: Vec<u32>,
}

impl LowDegreeExtension {
    pub fn new(f: &BitString, p: &CodeParams) -> Result<Self> {
        if f.len() != p.n {
            return Err(Error::LengthMismatch { expected: p.n, actual: f.len() });
        }
        let ctx = p.field();
        let cube_len = (p.h as usize).pow(p.d);
        let mut cube = vec![0u32; cube_len];
        for i in f.ones_iter() {
            cube[i] = 1;
        }
        Ok(LowDegreeExtension { params: *p, ctx, basis: NodeBasis::new(ctx, p.h)?, cube })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    /// Iterated univariate interpolation, contracting coordinate 0 first.
    pub fn eval(&self, point: &[u32]) -> u32 {
        debug_assert_eq!(point.len(), self.params.d as usize);
        let h = self.params.h as usize;
        let mut basis = Vec::with_capacity(h);
        let mut buf = self.cube.clone();
        let mut len = buf.len();
        for &x in point {
            self.basis.eval_into(x, &mut basis);
            let next = len / h;
            for j in 0..next {
                let row = &buf[j * h..(j + 1) * h];
                let v = row.iter().zip(&basis).fold(0, |acc, (&y, &l)| acc ^ self.ctx.mul(y, l));
                buf[j] = v;
            }
            len = next;
        }
        buf[0]
    }

    /// Evaluation at a packed point code `x_0 + 2^s·x_1 + …`.
    pub fn eval_code(&self, point_code: u64) -> u32 {
        let mask = self.params.block_len() - 1;
        let point: Vec<u32> = (0..self.params.d).map(|c| ((point_code >> (self.params.s * c)) & mask) as u32).collect();
        self.eval(&point)
    }

    pub fn encode_bit(&self, j: u64) -> Result<bool> {
        if j >= self.params.nbar {
            return Err(Error::IndexOutOfRange { index: j, len: self.params.nbar });
        }
        let mask = j & (self.params.block_len() - 1);
        Ok(parity(self.eval_code(j >> self.params.s) as u64, mask))
    }

    /// Evaluations at every point of `F^d`, indexed by point code.
    pub fn eval_all_points(&self, strategy: Strategy) -> Vec<u32> {
        exec::map_range(strategy, self.params.num_points() as usize, |pc| self.eval_code(pc as u64))
    }
}

/// Value at `point` of the low-degree extension of `f`.
pub fn lde_eval(f: &BitString, p: &CodeParams, point: &[FieldElement]) -> Result<FieldElement> {
    if point.len() != p.d as usize {
        return Err(Error::LengthMismatch { expected: p.d as usize, actual: point.len() });
    }
    let ctx = p.field();
    if let Some(bad) = point.iter().find(|x| x.ctx() != ctx) {
        return Err(Error::FieldMismatch { left: format!("{ctx:?}"), right: format!("{:?}", bad.ctx()) });
    }
    let coords: Vec<u32> = point.iter().map(FieldElement::value).collect();
    ctx.element(LowDegreeExtension::new(f, p)?.eval(&coords))
}

/// Codeword bit `j` of `f`.
pub fn encode_bit(f: &BitString, p: &CodeParams, j: u64) -> Result<bool> {
    LowDegreeExtension::new(f, p)?.encode_bit(j)
}

/// Hadamard expansion of per-point evaluations into a full codeword.
pub fn expand_hadamard(values: &[u32], s: u32) -> BitString {
    let block = 1usize << s;
    let mut out = BitString::zeros(values.len() * block);
    for (pc, &v) in values.iter().enumerate() {
        for mask in 0..block {
            if parity(v as u64, mask as u64) {
                out.set(pc * block + mask, true);
            }
        }
    }
    out
}

pub fn encode_all(f: &BitString, p: &CodeParams) -> Result<BitString> {
    encode_all_with(f, p, Strategy::default())
}

/// Full codeword of `f`, refusing anything above [`MAX_MATERIALIZED_BITS`].
pub fn encode_all_with(f: &BitString, p: &CodeParams, strategy: Strategy) -> Result<BitString> {
    if p.nbar > MAX_MATERIALIZED_BITS {
        return Err(Error::TooLarge { what: "codeword length", size: p.nbar as u128, limit: MAX_MATERIALIZED_BITS as u128 });
    }
    let lde = LowDegreeExtension::new(f, p)?;
    Ok(expand_hadamard(&lde.eval_all_points(strategy), p.s))
}

/// Low-degree extensions of the unit messages, the columns of the
/// GF(2)-linear map `f ↦ (LDE(f)(x))_x`. Enumerating messages in Gray-code
/// order then costs one column XOR per step.
#[derive(Clone, Debug)]
pub struct MessageColumns {
    params: CodeParams,
    columns: Vec<Vec<u32>>,
}

impl MessageColumns {
    pub fn new(p: &CodeParams, strategy: Strategy) -> Result<Self> {
        let space = 1u128 << p.n.min(127);
        if space > MAX_ENUMERATED_MESSAGES as u128 {
            return Err(Error::TooLarge { what: "message space", size: space, limit: MAX_ENUMERATED_MESSAGES as u128 });
        }
        let cells = p.n as u128 * p.num_points() as u128;
        if cells > MAX_MATERIALIZED_BITS as u128 {
            return Err(Error::TooLarge { what: "message column table", size: cells, limit: MAX_MATERIALIZED_BITS as u128 });
        }
        let columns = exec::map_range(strategy, p.n, |i| {
            let mut unit = BitString::zeros(p.n);
            unit.set(i, true);
            LowDegreeExtension::new(&unit, p).expect("unit message has length n").eval_all_points(Strategy::Sequential)
        });
        Ok(MessageColumns { params: *p, columns })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn num_messages(&self) -> u64 {
        1u64 << self.params.n
    }

    /// Evaluations of message `msg` at every point.
    pub fn values_of(&self, msg: u64) -> Vec<u32> {
        let mut acc = vec![0u32; self.params.num_points() as usize];
        for (i, col) in self.columns.iter().enumerate() {
            if msg >> i & 1 == 1 {
                xor_into(&mut acc, col);
            }
        }
        acc
    }

    /// Visits every message with its point evaluations, in chunks of
    /// Gray-code order. Items returned by `visit` are collected in message
    /// enumeration order, independent of strategy.
    pub fn scan<T, F>(&self, strategy: Strategy, visit: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, &[u32]) -> Option<T> + Sync + Send,
    {
        let chunks = exec::chunk_bounds(self.num_messages(), 64);
        exec::map_range(strategy, chunks.len(), |c| {
            let (start, end) = chunks[c];
            let mut msg = start ^ (start >> 1);
            let mut values = self.values_of(msg);
            let mut found = Vec::new();
            for g in start..end {
                if let Some(item) = visit(msg, &values) {
                    found.push(item);
                }
                if g + 1 < end {
                    let bit = (g + 1).trailing_zeros() as usize;
                    msg ^= 1 << bit;
                    xor_into(&mut values, &self.columns[bit]);
                }
            }
            found
        })
        .into_iter()
        .flatten()
        .collect()
    }
}

#[inline]
fn xor_into(acc: &mut [u32], col: &[u32]) {
    for (a, c) in acc.iter_mut().zip(col) {
        *a ^= c;
    }
}

/// Exact minimum distance, as the minimum weight over nonzero messages. A
/// codeword's weight is `2^{s−1}` times its number of nonzero evaluations.
pub fn min_distance(p: &CodeParams, strategy: Strategy) -> Result<u64> {
    let cols = MessageColumns::new(p, strategy)?;
    let half_block = p.block_len() / 2;
    cols.scan(strategy, |msg, values| (msg != 0).then(|| values.iter().filter(|&&v| v != 0).count() as u64 * half_block))
        .into_iter()
        .min()
        .ok_or_else(|| Error::InvalidParams("code has a single codeword".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Strategy;
    use crate::gf2e::lagrange_interp_eval;
    use proptest::prelude::{prop_assert_eq, proptest, ProptestConfig};

    fn desk(n: usize, delta: f64) -> CodeParams {
        code_params_with(n, delta, &CodeConfig::desk()).unwrap()
    }

    #[test]
    fn planner_n16_quarter() {
        let p = desk(16, 0.25);
        assert_eq!((p.d, p.h, p.degree, p.s), (1, 16, 15, 6));
        assert!(p.h.pow(p.d) >= 16);
        assert!((1u32 << p.s) > p.degree);
        assert!(4.0 * p.delta * p.delta * (1u64 << p.s) as f64 > p.degree as f64);
        assert_eq!(p.nbar, 1 << 12);
    }

    #[test]
    fn planner_default_constant() {
        let p = code_params(16, 0.25).unwrap();
        // 2^s ≥ 16 / (1/4)^5 = 16384
        assert_eq!(p.s, 14);
        assert_eq!(p.nbar, 1 << 28);
        assert!(code_params(16, 0.125).is_err());
    }

    #[test]
    fn planner_single_bit_message() {
        let p = code_params(1, 0.5).unwrap();
        assert_eq!((p.d, p.h, p.degree), (1, 1, 0));
        assert_eq!(p.nbar, (1u64 << p.s) * (1u64 << p.s));
    }

    #[test]
    fn planner_monotone_in_n() {
        for delta in [0.25, 0.125] {
            assert!(desk(256, delta).nbar >= desk(16, delta).nbar);
            assert!(desk(16, delta).nbar >= desk(4, delta).nbar);
        }
    }

    #[test]
    fn planner_prefers_more_variables_when_needed() {
        let p = code_params_with(1 << 18, 0.5, &CodeConfig { c_field: 0.0, max_vars: 8 }).unwrap();
        assert!(p.d >= 2);
        p.validate().unwrap();
    }

    #[test]
    fn explicit_params_validated() {
        assert!(CodeParams::new(16, 0.25, 3, 2, 4, 0.0).is_err()); // 4δ²·8 = 2 < 6
        assert!(CodeParams::new(16, 0.25, 5, 2, 4, 0.0).is_ok());
        assert!(CodeParams::new(16, 0.25, 5, 2, 3, 0.0).is_err()); // 3² < 16
        assert!(CodeParams::new(16, 0.75, 5, 2, 4, 0.0).is_err());
    }

    #[test]
    fn index_packing_round_trips() {
        let p = CodeParams::new(16, 0.25, 5, 2, 4, 0.0).unwrap();
        for j in [0u64, 1, 31, 32, 1000, p.nbar - 1] {
            let idx = p.unpack(j).unwrap();
            assert_eq!(p.pack(&idx).unwrap(), j);
        }
        assert!(p.unpack(p.nbar).is_err());
        let ctx = p.field();
        let idx = CodeIndex { point: vec![ctx.element(3).unwrap(), ctx.element(7).unwrap()], mask: BitString::from_u64(5, 5) };
        assert_eq!(p.pack(&idx).unwrap(), 5 + 32 * (3 + 32 * 7));
    }

    #[test]
    fn extension_agrees_on_cube() {
        let p = CodeParams::new(16, 0.25, 5, 2, 4, 0.0).unwrap();
        let f = BitString::from_u64(0b1011_0010_1110_0101, 16);
        let ctx = p.field();
        for i in 0..16u32 {
            let point = [ctx.element(i % 4).unwrap(), ctx.element(i / 4).unwrap()];
            assert_eq!(lde_eval(&f, &p, &point).unwrap().value(), f.get(i as usize) as u32);
        }
    }

    #[test]
    fn zero_message_extends_to_zero() {
        let p = desk(16, 0.25);
        let lde = LowDegreeExtension::new(&BitString::zeros(16), &p).unwrap();
        assert!(lde.eval_all_points(Strategy::Sequential).iter().all(|&v| v == 0));
        assert_eq!(encode_all(&BitString::zeros(16), &p).unwrap(), BitString::zeros(p.nbar as usize));
    }

    #[test]
    fn bilinear_extension_matches_hand_expansion() {
        // n=4, d=2, h=2: f(x,y) = f00(1+x)(1+y) + f10·x(1+y) + f01(1+x)y + f11·xy
        let p = CodeParams::new(4, 0.5, 3, 2, 2, 0.0).unwrap();
        let ctx = p.field();
        let f = BitString::parse_binary("1101").unwrap(); // f00=1, f10=1, f01=0, f11=1
        let (f00, f10, f01, f11) = (1, 1, 0, 1);
        let m = |a, b| ctx.mul(a, b);
        for x in 0..8 {
            for y in 0..8 {
                let expected = m(f00, m(1 ^ x, 1 ^ y)) ^ m(f10, m(x, 1 ^ y)) ^ m(f01, m(1 ^ x, y)) ^ m(f11, m(x, y));
                let pt = [ctx.element(x).unwrap(), ctx.element(y).unwrap()];
                assert_eq!(lde_eval(&f, &p, &pt).unwrap().value(), expected);
            }
        }
    }

    #[test]
    fn univariate_extension_matches_generic_interpolation() {
        let p = desk(4, 0.25);
        assert_eq!(p.d, 1);
        let ctx = p.field();
        let f = BitString::parse_binary("0110").unwrap();
        let pts: Vec<_> = (0..4u32).map(|i| (ctx.element(i).unwrap(), ctx.element(f.get(i as usize) as u32).unwrap())).collect();
        for x in 0..ctx.order() {
            let at = ctx.element(x).unwrap();
            assert_eq!(lde_eval(&f, &p, &[at]).unwrap(), lagrange_interp_eval(&pts, at).unwrap());
        }
    }

    #[test]
    fn mask_zero_and_bounds() {
        let p = desk(4, 0.25);
        let f = BitString::parse_binary("1011").unwrap();
        for pc in 0..p.num_points() {
            assert!(!encode_bit(&f, &p, pc << p.s).unwrap());
        }
        assert!(matches!(encode_bit(&f, &p, p.nbar), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(encode_bit(&BitString::zeros(3), &p, 0), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn encode_all_refuses_huge_codewords() {
        let p = code_params(16, 0.25).unwrap();
        assert!(matches!(encode_all(&BitString::zeros(16), &p), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn bitwise_and_full_encodings_agree() {
        let p = desk(4, 0.25);
        for msg in 0..16 {
            let f = BitString::from_u64(msg, 4);
            let full = encode_all(&f, &p).unwrap();
            for j in 0..p.nbar {
                assert_eq!(full.get(j as usize), encode_bit(&f, &p, j).unwrap());
            }
        }
    }

    #[test]
    fn distinct_messages_are_far_apart() {
        let p = desk(4, 0.25);
        let words: Vec<_> = (0..16).map(|m| encode_all(&BitString::from_u64(m, 4), &p).unwrap()).collect();
        let mut min = u64::MAX;
        for a in 0..16 {
            for b in 0..a {
                min = min.min(words[a].hamming_distance(&words[b]).unwrap() as u64);
            }
        }
        assert!(p.meets_distance_bound(min));
        assert_eq!(min, min_distance(&p, Strategy::Sequential).unwrap());
    }

    #[test]
    fn gray_scan_matches_direct_evaluation() {
        let p = desk(4, 0.25);
        let cols = MessageColumns::new(&p, Strategy::Sequential).unwrap();
        let seen = cols.scan(Strategy::Parallel, |msg, values| Some((msg, values.to_vec())));
        assert_eq!(seen.len(), 16);
        for (msg, values) in seen {
            let lde = LowDegreeExtension::new(&BitString::from_u64(msg, 4), &p).unwrap();
            assert_eq!(values, lde.eval_all_points(Strategy::Sequential));
        }
    }

    #[test]
    fn johnson_curve() {
        assert_eq!(johnson_list_bound(0.0, 0.5), Some(1.0));
        assert!(johnson_list_bound(0.5, 0.25).is_none());
        let p = desk(16, 0.25);
        let l = p.list_bound().unwrap();
        assert!((l - (1.0 - 15.0 / 64.0) / (0.25 - 15.0 / 64.0)).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn encoding_is_linear(a in 0u64..16, b in 0u64..16) {
            let p = desk(4, 0.25);
            let fa = BitString::from_u64(a, 4);
            let fb = BitString::from_u64(b, 4);
            let sum = encode_all(&fa.xor(&fb).unwrap(), &p).unwrap();
            prop_assert_eq!(sum, encode_all(&fa, &p).unwrap().xor(&encode_all(&fb, &p).unwrap()).unwrap());
        }

        #[test]
        fn extension_property_exhaustive_small(msg in 0u64..(1 << 12)) {
            let p = code_params_with(12, 0.5, &CodeConfig { c_field: 0.0, max_vars: 3 }).unwrap();
            let f = BitString::from_u64(msg, 12);
            let lde = LowDegreeExtension::new(&f, &p).unwrap();
            for i in 0..12usize {
                let mut rest = i;
                let point: Vec<u32> = (0..p.d).map(|_| { let c = (rest % p.h as usize) as u32; rest /= p.h as usize; c }).collect();
                prop_assert_eq!(lde.eval(&point), f.get(i) as u32);
            }
        }
    }
}
