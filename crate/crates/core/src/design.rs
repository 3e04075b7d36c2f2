//! Combinatorial designs for seed slicing: `m` subsets of `[t]`, each of size
//! `l`, with pairwise intersections of size at most `r`.
//!
//! Two greedy constructions are run and the smaller universe wins.
//!
//! First fit builds sets one after another; each new set scans the universe in
//! ascending order and takes every element that keeps all intersection counts
//! within `r`. Elements past the current universe belong to no earlier set, so
//! the scan always completes.
//!
//! The block construction splits `[l·q)` into `l` blocks of `q` elements and
//! takes one element per block, chosen by conditional expectations on
//! `Φ = Σ_j E[(1+γ)^{|S_i ∩ S_j|}] / (1+γ)^{r+1}` under uniform choices in the
//! remaining blocks. Φ never increases, so when it starts below 1 every
//! intersection ends at most `r`. With `q ≈ e²·l/r` and `m ≤ 2^r` it does.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Published bound on the universe size: `t ≤ C_DESIGN · ⌈l²/r⌉` for every
/// family produced by [`make_design`] in the regime `m ≤ 2^r`.
pub const C_DESIGN: f64 = std::f64::consts::E * std::f64::consts::E;

/// A family of index subsets of `[0, t)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignFamily {
    pub t: usize,
    pub l: usize,
    pub r: usize,
    pub sets: Vec<Vec<usize>>,
}

/// Default intersection bound `max(1, ⌈log2 m⌉)`.
pub fn default_intersection(m: usize) -> usize {
    let mut r = 0;
    while (1usize << r) < m {
        r += 1;
    }
    r.max(1)
}

pub fn universe_bound(l: usize, r: usize) -> f64 {
    C_DESIGN * (l * l).div_ceil(r) as f64
}

pub fn make_design(m: usize, l: usize, r: usize) -> Result<DesignFamily> {
    if m == 0 || l == 0 {
        return Err(Error::Infeasible(format!("design needs m ≥ 1 and l ≥ 1 (got m={m}, l={l})")));
    }
    if r == 0 || r > l {
        return Err(Error::Infeasible(format!("intersection bound r={r} must satisfy 1 ≤ r ≤ l={l}")));
    }
    let first = first_fit(m, l, r);
    Ok(match block_design(m, l, r, first.t) {
        Some(b) if b.t < first.t && verify_design(&b) => b,
        _ => first,
    })
}

fn first_fit(m: usize, l: usize, r: usize) -> DesignFamily {
    // owners[u] lists the earlier sets containing element u
    let mut owners: Vec<Vec<usize>> = Vec::new();
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut overlap = vec![0usize; m];
    for i in 0..m {
        overlap[..i].fill(0);
        let mut set = Vec::with_capacity(l);
        let mut u = 0usize;
        while set.len() < l {
            let fits = owners.get(u).is_none_or(|own| own.iter().all(|&j| overlap[j] < r));
            if fits {
                if let Some(own) = owners.get(u) {
                    for &j in own {
                        overlap[j] += 1;
                    }
                }
                set.push(u);
            }
            u += 1;
        }
        for &u in &set {
            if u >= owners.len() {
                owners.resize_with(u + 1, Vec::new);
            }
            owners[u].push(i);
        }
        sets.push(set);
    }
    DesignFamily { t: owners.len(), l, r, sets }
}

/// Initial `Φ` for block size `q`, minimized over a grid of `γ`.
fn block_potential(m: usize, l: usize, r: usize, q: usize) -> (f64, f64) {
    (1..=80)
        .map(|g| {
            let gamma = g as f64 * 0.25;
            let phi = (m - 1) as f64 * (l as f64 * (1.0 + gamma / q as f64).ln() - (r + 1) as f64 * (1.0 + gamma).ln()).exp();
            (phi, gamma)
        })
        .fold((f64::INFINITY, 0.0), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// Block construction with the smallest `q` whose initial potential is below
/// 1, provided `l·q < limit`.
fn block_design(m: usize, l: usize, r: usize, limit: usize) -> Option<DesignFamily> {
    if m < 2 {
        return None;
    }
    let (q, gamma) = (1..)
        .take_while(|&q| l * q < limit)
        .map(|q| (q, block_potential(m, l, r, q)))
        .find(|(_, (phi, _))| *phi < 1.0)
        .map(|(q, (_, gamma))| (q, gamma))?;
    let base = 1.0 + gamma;
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut weight = vec![0.0f64; q];
    for _ in 0..m {
        let mut matches = vec![0i32; sets.len()];
        let mut set = Vec::with_capacity(l);
        for b in 0..l {
            weight.fill(0.0);
            for (j, other) in sets.iter().enumerate() {
                weight[other[b] - b * q] += base.powi(matches[j]);
            }
            let c = (0..q).fold(0, |best, c| if weight[c] < weight[best] { c } else { best });
            for (j, other) in sets.iter().enumerate() {
                if other[b] == b * q + c {
                    matches[j] += 1;
                }
            }
            set.push(b * q + c);
        }
        sets.push(set);
    }
    let t = sets.iter().flat_map(|s| s.last()).max().map_or(0, |&u| u + 1);
    Some(DesignFamily { t, l, r, sets })
}

/// Exhaustive check of every family invariant.
pub fn verify_design(d: &DesignFamily) -> bool {
    for set in &d.sets {
        if set.len() != d.l || !set.windows(2).all(|w| w[0] < w[1]) || set.iter().any(|&u| u >= d.t) {
            return false;
        }
    }
    for i in 0..d.sets.len() {
        for j in 0..i {
            if intersection_size(&d.sets[i], &d.sets[j]) > d.r {
                return false;
            }
        }
    }
    true
}

/// Size of the intersection of two ascending index lists.
pub fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

impl DesignFamily {
    pub fn m(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, i: usize) -> &[usize] {
        &self.sets[i]
    }

    pub fn measured_constant(&self) -> f64 {
        self.t as f64 / (self.l * self.l).div_ceil(self.r) as f64
    }
}

/// Bits of `y` at the ascending indices of `set`.
pub fn slice_seed(y: &BitString, set: &[usize]) -> Result<BitString> {
    if let Some(&max) = set.last() {
        if max >= y.len() {
            return Err(Error::LengthMismatch { expected: max + 1, actual: y.len() });
        }
    }
    Ok(BitString::from_bits(set.iter().map(|&u| y.get(u))))
}

/// The slice read as an integer: the bit at the smallest index of `set` is
/// the least significant bit.
#[inline]
pub fn slice_index(y: &BitString, set: &[usize]) -> u64 {
    debug_assert!(set.len() <= 64);
    set.iter().enumerate().fold(0u64, |acc, (pos, &u)| acc | (y.get(u) as u64) << pos)
}

/// [`slice_index`] for a seed packed into an integer (bit `u` is `y_u`).
#[inline]
pub fn slice_index_u64(y: u64, set: &[usize]) -> u64 {
    set.iter().enumerate().fold(0u64, |acc, (pos, &u)| acc | (y >> u & 1) << pos)
}
