//! Constant-composition distribution matching.
//!
//! Arithmetic coding with exact integer arithmetic: the input bits are read
//! as an index into the lexicographically ordered set of sequences with the
//! target composition, and the sequence is obtained by unranking. With exact
//! (big-integer) interval widths this is the infinite-precision limit of
//! arithmetic-coding CCDM, and decoding is its exact inverse.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude counts per level index (level `i` is amplitude `2i + 1`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    counts: Vec<usize>,
}

impl Composition {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() || counts.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidParameter("composition must have a positive length".into()));
        }
        Ok(Composition { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Sequence length `n_a`.
    pub fn len(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn levels(&self) -> usize {
        self.counts.len()
    }

    /// Empirical distribution `counts / n_a`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Number of distinct sequences with this composition.
    pub fn multinomial(&self) -> BigUint {
        let mut acc = BigUint::one();
        let mut total = 0usize;
        // build incrementally: C(total + j, j) products keep every step integral
        for &c in &self.counts {
            for j in 1..=c {
                total += 1;
                acc = acc * BigUint::from(total) / BigUint::from(j);
            }
        }
        acc
    }

    /// Input length `k = ⌊log₂ multinomial⌋`.
    pub fn input_bits(&self) -> usize {
        (self.multinomial().bits() as usize).saturating_sub(1)
    }

    /// `k / n_a`, the matcher rate in bits per amplitude.
    pub fn rate(&self) -> f64 {
        self.input_bits() as f64 / self.len() as f64
    }

    /// Counts of `seq`, if it only uses valid level indices.
    pub fn of_sequence(seq: &[usize], levels: usize) -> Result<Self> {
        let mut counts = vec![0; levels];
        for &a in seq {
            *counts.get_mut(a).ok_or_else(|| Error::Decoding(format!("amplitude index {a} out of range")))? += 1;
        }
        Composition::new(counts)
    }
}

fn kl_term(count: usize, n: usize, p: f64) -> f64 {
    if count == 0 {
        0.0
    } else if p <= 0.0 {
        f64::INFINITY
    } else {
        let t = count as f64 / n as f64;
        t * (t / p).ln()
    }
}

/// Integer composition of length `n_a` minimizing `D(type ‖ P_A)`.
///
/// Largest-remainder rounding gives a starting point; single-unit moves are
/// then applied while they lower the divergence. The objective is separable
/// and convex in each count, so no improving move implies optimality.
pub fn composition_for(p_a: &[f64], n_a: usize) -> Result<Composition> {
    if n_a == 0 || p_a.is_empty() {
        return Err(Error::InvalidParameter("composition needs n_a ≥ 1 and a non-empty P_A".into()));
    }
    let total: f64 = p_a.iter().sum();
    if p_a.iter().any(|p| !p.is_finite() || *p < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("P_A must be a probability vector".into()));
    }
    let scaled: Vec<f64> = p_a.iter().map(|p| p * n_a as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|s| s.floor() as usize).collect();
    let mut order: Vec<usize> = (0..p_a.len()).collect();
    order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())).then(a.cmp(&b)));
    let mut missing = n_a - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        if p_a[i] > 0.0 {
            counts[i] += 1;
            missing -= 1;
        }
    }

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for from in 0..counts.len() {
            if counts[from] == 0 {
                continue;
            }
            let remove = kl_term(counts[from] - 1, n_a, p_a[from]) - kl_term(counts[from], n_a, p_a[from]);
            for to in 0..counts.len() {
                if to == from {
                    continue;
                }
                let add = kl_term(counts[to] + 1, n_a, p_a[to]) - kl_term(counts[to], n_a, p_a[to]);
                let delta = remove + add;
                if delta < -1e-15 && best.is_none_or(|(d, _, _)| delta < d) {
                    best = Some((delta, from, to));
                }
            }
        }
        match best {
            Some((_, from, to)) => {
                counts[from] -= 1;
                counts[to] += 1;
            }
            None => break,
        }
    }
    Composition::new(counts)
}

/// KL divergence `D(type ‖ P_A)` in bits.
pub fn composition_divergence(comp: &Composition, p_a: &[f64]) -> f64 {
    let n = comp.len();
    comp.counts.iter().zip(p_a).map(|(&c, &p)| kl_term(c, n, p)).sum::<f64>() / std::f64::consts::LN_2
}

fn bits_to_index(bits: &[u8]) -> BigUint {
    let mut idx = BigUint::zero();
    for &b in bits {
        idx <<= 1;
        if b & 1 == 1 {
            idx += 1u32;
        }
    }
    idx
}

fn index_to_bits(mut idx: BigUint, k: usize) -> Vec<u8> {
    let mut bits = vec![0u8; k];
    for slot in bits.iter_mut().rev() {
        *slot = (&idx & BigUint::one()).to_u8().unwrap_or(0);
        idx >>= 1;
    }
    bits
}

/// Maps exactly `comp.input_bits()` bits to a sequence of level indices with
/// composition `comp`.
pub fn ccdm_encode(bits: &[u8], comp: &Composition) -> Result<Vec<usize>> {
    let k = comp.input_bits();
    if bits.len() != k {
        return Err(Error::Encoding(format!("matcher expects {k} input bits, got {}", bits.len())));
    }
    let mut idx = bits_to_index(bits);
    let mut remaining = comp.counts.clone();
    let mut left = comp.len();
    let mut width = comp.multinomial();
    let mut seq = Vec::with_capacity(left);
    while left > 0 {
        let mut chosen = None;
        for (a, &c) in remaining.iter().enumerate() {
            if c == 0 {
                continue;
            }
            // sequences whose next symbol is `a`
            let sub = &width * BigUint::from(c) / BigUint::from(left);
            if idx < sub {
                chosen = Some((a, sub));
                break;
            }
            idx -= sub;
        }
        let (a, sub) = chosen.ok_or_else(|| Error::Encoding("index exceeds the composition's sequence count".into()))?;
        seq.push(a);
        remaining[a] -= 1;
        left -= 1;
        width = sub;
    }
    Ok(seq)
}

/// Inverse of [`ccdm_encode`].
pub fn ccdm_decode(seq: &[usize], comp: &Composition) -> Result<Vec<u8>> {
    let found = Composition::of_sequence(seq, comp.levels())?;
    if found != *comp {
        return Err(Error::Decoding(format!(
            "sequence composition {:?} differs from {:?}",
            found.counts, comp.counts
        )));
    }
    let mut idx = BigUint::zero();
    let mut remaining = comp.counts.clone();
    let mut left = comp.len();
    let mut width = comp.multinomial();
    for &s in seq {
        for (a, &c) in remaining.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sub = &width * BigUint::from(c) / BigUint::from(left);
            if a == s {
                width = sub;
                break;
            }
            idx += sub;
        }
        remaining[s] -= 1;
        left -= 1;
    }
    let k = comp.input_bits();
    if idx.bits() as usize > k {
        return Err(Error::Decoding("sequence lies outside the matcher codebook".into()));
    }
    Ok(index_to_bits(idx, k))
}
