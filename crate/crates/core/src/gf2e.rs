//! Arithmetic in binary extension fields GF(2^s), 1 ≤ s ≤ 16.
//!
//! Elements are polynomial residues over GF(2) packed into the low `s` bits
//! of a `u32` (bit `i` is the coefficient of `x^i`). Each degree uses the
//! numerically smallest irreducible modulus, listed in [`MODULI`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEGREE: u32 = 16;

/// Smallest irreducible polynomial of each degree 1..=16, as a bit mask
/// including the leading term.
pub const MODULI: [u32; 16] = [
    0b10,
    0b111,
    0b1011,
    0b1_0011,
    0b10_0101,
    0b100_0011,
    0b1000_0011,
    0b1_0001_1011,
    0b10_0000_0011,
    0b100_0000_1001,
    0b1000_0000_0101,
    0b1_0000_0000_1001,
    0b10_0000_0001_1011,
    0b100_0000_0010_0001,
    0b1000_0000_0000_0011,
    0b1_0000_0000_0010_1011,
];

fn poly_degree(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

fn poly_mod(mut a: u32, b: u32) -> u32 {
    let db = poly_degree(b);
    while a != 0 && poly_degree(a) >= db {
        a ^= b << (poly_degree(a) - db);
    }
    a
}

/// Exhaustive trial division by every polynomial of degree 1..=deg/2.
pub fn is_irreducible(poly: u32) -> bool {
    let deg = poly_degree(poly);
    if deg < 1 {
        return false;
    }
    let max_factor_degree = deg / 2;
    (2u32..1 << (max_factor_degree + 1)).all(|g| poly_mod(poly, g) != 0)
}

/// Degree and modulus of a binary extension field.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldCtx {
    degree: u32,
    modulus: u32,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#b}", self.degree, self.modulus)
    }
}

impl FieldCtx {
    /// The field of degree `s` with its tabulated modulus.
    pub fn new(s: u32) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&s) {
            return Err(Error::UnsupportedDegree(s));
        }
        Ok(FieldCtx { degree: s, modulus: MODULI[s as usize - 1] })
    }

    /// A field of degree `s` with a caller-chosen modulus, checked for irreducibility.
    pub fn with_modulus(s: u32, modulus: u32) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&s) {
            return Err(Error::UnsupportedDegree(s));
        }
        if poly_degree(modulus) != s as i32 || !is_irreducible(modulus) {
            return Err(Error::ReducibleModulus(modulus));
        }
        Ok(FieldCtx { degree: s, modulus })
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.degree
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Number of elements, `2^s`.
    #[inline]
    pub fn order(&self) -> u32 {
        1 << self.degree
    }

    #[inline]
    pub fn contains(&self, v: u32) -> bool {
        v < self.order()
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        a ^ b
    }

    /// Shift-and-XOR multiplication with interleaved reduction.
    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let top = 1u32 << self.degree;
        let mut a = a;
        let mut b = b;
        let mut acc = 0;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= self.modulus;
            }
        }
        acc
    }

    pub fn pow(&self, base: u32, mut exp: u64) -> u32 {
        let mut result = 1;
        let mut base = base;
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        result
    }

    /// `a^(2^s − 2)`.
    pub fn inv(&self, a: u32) -> Result<u32> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, (1u64 << self.degree) - 2))
    }

    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if !self.contains(value) {
            return Err(Error::InvalidParams(format!("value {value:#x} does not fit GF(2^{})", self.degree)));
        }
        Ok(FieldElement { ctx: *self, value })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { ctx: *self, value: 0 }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { ctx: *self, value: 1 }
    }

    /// Text line published by `trex field-table`.
    pub fn table_line(&self) -> String {
        format!("s={} modulus={:#b}", self.degree, self.modulus)
    }
}

/// The modulus table as text, one `s=… modulus=0b…` line per degree.
pub fn field_table() -> String {
    (1..=MAX_DEGREE).map(|s| FieldCtx::new(s).expect("tabulated degree").table_line() + "\n").collect()
}

/// An element tagged with its field.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    ctx: FieldCtx,
    value: u32,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b} in GF(2^{})", self.value, self.ctx.degree)
    }
}

impl FieldElement {
    #[inline]
    pub fn value(&self) -> u32 {
        self.value
    }

    #[inline]
    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    fn same_field(&self, other: &FieldElement) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::FieldMismatch { left: format!("{:?}", self.ctx), right: format!("{:?}", other.ctx) });
        }
        Ok(())
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same_field(other)?;
        Ok(FieldElement { ctx: self.ctx, value: self.value ^ other.value })
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same_field(other)?;
        Ok(FieldElement { ctx: self.ctx, value: self.ctx.mul(self.value, other.value) })
    }

    pub fn inv(&self) -> Result<FieldElement> {
        Ok(FieldElement { ctx: self.ctx, value: self.ctx.inv(self.value)? })
    }
}

/// Value at `at` of the unique polynomial of degree < `points.len()` through `points`.
pub fn lagrange_interp_eval(points: &[(FieldElement, FieldElement)], at: FieldElement) -> Result<FieldElement> {
    let ctx = at.ctx();
    if points.is_empty() {
        return Err(Error::NoPoints);
    }
    for (x, y) in points {
        at.same_field(x)?;
        at.same_field(y)?;
    }
    for (i, (xi, _)) in points.iter().enumerate() {
        if points[..i].iter().any(|(xj, _)| xj.value == xi.value) {
            return Err(Error::DuplicateNode(xi.value));
        }
    }
    let mut acc = 0;
    for (i, (xi, yi)) in points.iter().enumerate() {
        let mut num = 1;
        let mut den = 1;
        for (j, (xj, _)) in points.iter().enumerate() {
            if i != j {
                num = ctx.mul(num, at.value ^ xj.value);
                den = ctx.mul(den, xi.value ^ xj.value);
            }
        }
        acc ^= ctx.mul(yi.value, ctx.mul(num, ctx.inv(den)?));
    }
    Ok(FieldElement { ctx, value: acc })
}

/// Lagrange basis over the nodes `0, 1, …, h−1` with precomputed
/// barycentric weights, used by the low-degree extension.
#[derive(Clone, Debug)]
pub struct NodeBasis {
    ctx: FieldCtx,
    weights: Vec<u32>,
}

impl NodeBasis {
    pub fn new(ctx: FieldCtx, h: u32) -> Result<Self> {
        if h == 0 || h > ctx.order() {
            return Err(Error::InvalidParams(format!("{h} interpolation nodes do not fit GF(2^{})", ctx.degree())));
        }
        let weights = (0..h)
            .map(|i| {
                let den = (0..h).filter(|&j| j != i).fold(1, |acc, j| ctx.mul(acc, i ^ j));
                ctx.inv(den)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NodeBasis { ctx, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `L_i(x)` for every node `i`, in O(h) multiplications.
    pub fn eval_into(&self, x: u32, out: &mut Vec<u32>) {
        let h = self.weights.len();
        out.clear();
        out.resize(h, 0);
        if (x as usize) < h {
            out[x as usize] = 1;
            return;
        }
        // prefix[i] = Π_{j<i} (x − j); the suffix product is folded in on the way back.
        let mut prefix = 1;
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = prefix;
            prefix = self.ctx.mul(prefix, x ^ i as u32);
        }
        let mut suffix = 1;
        for i in (0..h).rev() {
            out[i] = self.ctx.mul(self.ctx.mul(out[i], suffix), self.weights[i]);
            suffix = self.ctx.mul(suffix, x ^ i as u32);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Schoolbook polynomial product followed by long division, on bit vectors.
    fn naive_mul(a: u32, b: u32, modulus: u32) -> u32 {
        let mut prod = [false; 64];
        for i in 0..32 {
            for j in 0..32 {
                if a >> i & 1 == 1 && b >> j & 1 == 1 {
                    prod[i + j] ^= true;
                }
            }
        }
        let deg = 31 - modulus.leading_zeros() as usize;
        for top in (deg..64).rev() {
            if prod[top] {
                for k in 0..=deg {
                    if modulus >> k & 1 == 1 {
                        prod[top - deg + k] ^= true;
                    }
                }
            }
        }
        (0..deg).fold(0, |acc, i| acc | (prod[i] as u32) << i)
    }

    #[test]
    fn table_holds_smallest_irreducibles() {
        for s in 1..=MAX_DEGREE {
            let expected = (1u32 << s..1 << (s + 1)).find(|&p| is_irreducible(p)).unwrap();
            assert_eq!(MODULI[s as usize - 1], expected, "degree {s}");
        }
        assert!(!is_irreducible(0b101)); // (x+1)^2
        assert!(FieldCtx::with_modulus(3, 0b1011).is_ok());
        assert_eq!(FieldCtx::with_modulus(2, 0b101), Err(Error::ReducibleModulus(0b101)));
        assert_eq!(FieldCtx::new(17), Err(Error::UnsupportedDegree(17)));
    }

    #[test]
    fn field_table_text() {
        let table = field_table();
        assert!(table.lines().any(|l| l == "s=3 modulus=0b1011"));
        assert_eq!(table.lines().count(), 16);
    }

    #[test]
    fn worked_examples_gf8() {
        let f = FieldCtx::new(3).unwrap();
        let e = |v| f.element(v).unwrap();
        assert_eq!(e(0b011).add(&e(0b101)).unwrap(), e(0b110));
        assert_eq!(e(0b110).add(&e(0b110)).unwrap(), f.zero());
        assert_eq!(e(0b110).add(&f.zero()).unwrap(), e(0b110));
        // x · x² = x³ ≡ x + 1
        assert_eq!(e(0b010).mul(&e(0b100)).unwrap(), e(0b011));
        assert_eq!(e(0b101).mul(&f.one()).unwrap(), e(0b101));
        assert_eq!(e(0b101).mul(&f.zero()).unwrap(), f.zero());
        // x · (x² + 1) = x³ + x ≡ 1
        assert_eq!(e(0b010).inv().unwrap(), e(0b101));
        assert_eq!(f.one().inv().unwrap(), f.one());
        assert_eq!(f.zero().inv(), Err(Error::ZeroInverse));
    }

    #[test]
    fn mixing_fields_is_rejected() {
        let a = FieldCtx::new(3).unwrap().one();
        let b = FieldCtx::new(4).unwrap().one();
        assert!(matches!(a.add(&b), Err(Error::FieldMismatch { .. })));
        assert!(matches!(a.mul(&b), Err(Error::FieldMismatch { .. })));
        assert!(FieldCtx::new(3).unwrap().element(8).is_err());
    }

    #[test]
    fn exhaustive_tables_match_naive_oracle() {
        for s in 1..=4 {
            let f = FieldCtx::new(s).unwrap();
            for a in 0..f.order() {
                for b in 0..f.order() {
                    assert_eq!(f.mul(a, b), naive_mul(a, b, f.modulus()), "s={s} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn sampled_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in 1..=MAX_DEGREE {
            let f = FieldCtx::new(s).unwrap();
            for _ in 0..2000 {
                let (a, b, c) = (rng.gen_range(0..f.order()), rng.gen_range(0..f.order()), rng.gen_range(0..f.order()));
                assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
                assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.mul(a ^ b, a ^ b), f.mul(a, a) ^ f.mul(b, b));
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
            }
        }
    }

    #[test]
    fn interpolation_examples() {
        let f = FieldCtx::new(4).unwrap();
        let e = |v| f.element(v).unwrap();
        let constant: Vec<_> = [1, 5, 9].iter().map(|&x| (e(x), e(7))).collect();
        assert_eq!(lagrange_interp_eval(&constant, e(12)).unwrap(), e(7));
        let pts = vec![(e(2), e(3)), (e(4), e(11)), (e(6), e(1))];
        assert_eq!(lagrange_interp_eval(&pts, e(4)).unwrap(), e(11));

        // q(x) = 3x² + 5x + 9, evaluated directly
        let q = |x: u32| f.mul(3, f.mul(x, x)) ^ f.mul(5, x) ^ 9;
        let pts: Vec<_> = [1, 2, 3].iter().map(|&x| (e(x), e(q(x)))).collect();
        for at in 0..16 {
            assert_eq!(lagrange_interp_eval(&pts, e(at)).unwrap().value(), q(at));
        }

        let dup = vec![(e(2), e(3)), (e(2), e(4))];
        assert_eq!(lagrange_interp_eval(&dup, e(1)), Err(Error::DuplicateNode(2)));
        assert_eq!(lagrange_interp_eval(&[], e(1)), Err(Error::NoPoints));
    }

    #[test]
    fn node_basis_matches_generic_interpolation() {
        let f = FieldCtx::new(5).unwrap();
        let h = 6;
        let basis = NodeBasis::new(f, h).unwrap();
        let ys = [3u32, 17, 0, 29, 8, 1];
        let pts: Vec<_> = (0..h).map(|i| (f.element(i).unwrap(), f.element(ys[i as usize]).unwrap())).collect();
        let mut l = Vec::new();
        for x in 0..f.order() {
            basis.eval_into(x, &mut l);
            let via_basis = l.iter().zip(ys).fold(0, |acc, (li, y)| acc ^ f.mul(*li, y));
            assert_eq!(via_basis, lagrange_interp_eval(&pts, f.element(x).unwrap()).unwrap().value());
        }
        assert!(NodeBasis::new(FieldCtx::new(2).unwrap(), 5).is_err());
    }
}
